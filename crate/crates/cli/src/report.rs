//! Report emission: comma-delimited result tables, calibration-curve point
//! files, and optional SVG plots with overlaid curves.
//!
//! All numeric output uses plain UTF-8, `.` decimal separators, and six
//! significant digits, so identical runs produce byte-identical files.

use heterosim_core::metrics::CurvePoint;
use heterosim_core::simgrid::{GridSummary, MeanSd, PooledRow, ReplicateResult, SweepPoint,
    LargeSampleReport};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{0}")]
    Io(#[from] io::Error),
    #[error("nothing to report: {0}")]
    Empty(String),
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },
}

/// Format with six significant digits; NaN renders as an empty field.
pub fn fmt6(x: f64) -> String {
    if x.is_nan() {
        return String::new();
    }
    if x == 0.0 {
        return "0".into();
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = (5 - exponent).max(0) as usize;
    format!("{x:.decimals$}")
}

pub const REPLICATES_HEADER: &str = "scenario_id,rep,c_deriv,c_valid,slope,citl,\
brier_deriv,brier_deriv_calibration,brier_deriv_refinement,\
brier_valid,brier_valid_calibration,brier_valid_refinement,excluded";

pub const SUMMARY_HEADER: &str = "scenario_id,c_deriv_mean,c_deriv_sd,c_valid_mean,c_valid_sd,\
slope_median,slope_sd,citl_mean,citl_sd,brier_deriv_mean,brier_deriv_sd,\
brier_valid_mean,brier_valid_sd,n_excluded";

/// Streaming writer for the replicate-level table.
pub struct ReplicateCsv {
    out: BufWriter<File>,
    rows: usize,
}

impl ReplicateCsv {
    pub fn create(path: &Path) -> Result<Self, ReportError> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{REPLICATES_HEADER}")?;
        Ok(Self { out, rows: 0 })
    }

    pub fn append(
        &mut self,
        scenario_id: &str,
        replicates: &[ReplicateResult],
    ) -> Result<(), ReportError> {
        for r in replicates {
            match r.completed() {
                Some(c) => {
                    writeln!(
                        self.out,
                        "{},{},{},{},{},{},{},{},{},{},{},{},0",
                        scenario_id,
                        r.rep_index,
                        fmt6(c.in_sample.c_statistic),
                        fmt6(c.out_of_sample.c_statistic),
                        fmt6(c.out_of_sample.calib_slope),
                        fmt6(c.out_of_sample.citl),
                        fmt6(c.in_sample.brier.total),
                        fmt6(c.in_sample.brier.calibration),
                        fmt6(c.in_sample.brier.refinement),
                        fmt6(c.out_of_sample.brier.total),
                        fmt6(c.out_of_sample.brier.calibration),
                        fmt6(c.out_of_sample.brier.refinement),
                    )?;
                }
                None => {
                    writeln!(self.out, "{},{},,,,,,,,,,,1", scenario_id, r.rep_index)?;
                }
            }
            self.rows += 1;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), ReportError> {
        if self.rows == 0 {
            return Err(ReportError::Empty("no replicates written".into()));
        }
        self.out.flush()?;
        Ok(())
    }
}

fn mean_sd_fields(m: &MeanSd) -> String {
    format!("{},{}", fmt6(m.mean), fmt6(m.sd))
}

/// Scenario-level summaries, one row per scenario, fixed column order.
pub fn write_summary_csv(path: &Path, summaries: &[GridSummary]) -> Result<(), ReportError> {
    if summaries.is_empty() {
        return Err(ReportError::Empty("no summaries".into()));
    }
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{SUMMARY_HEADER}")?;
    for s in summaries {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            s.scenario_id,
            mean_sd_fields(&s.c_deriv),
            mean_sd_fields(&s.c_valid),
            fmt6(s.slope_median),
            fmt6(s.slope_sd),
            mean_sd_fields(&s.citl),
            mean_sd_fields(&s.brier_deriv),
            mean_sd_fields(&s.brier_valid),
            s.n_excluded
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Pooled single-predictor rows grouped by variance ordering, shift, and
/// association.
pub fn write_table3_csv(path: &Path, rows: &[PooledRow]) -> Result<(), ReportError> {
    if rows.is_empty() {
        return Err(ReportError::Empty("no pooled rows".into()));
    }
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(
        out,
        "sigma_order,psi,theta,c_deriv_mean,c_deriv_sd,c_valid_mean,c_valid_sd,\
         slope_median_mean,slope_median_sd,citl_mean,citl_sd,\
         brier_deriv_mean,brier_deriv_sd,brier_valid_mean,brier_valid_sd,n_cells"
    )?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.sigma_order.label(),
            fmt6(r.psi),
            fmt6(r.theta),
            mean_sd_fields(&r.c_deriv),
            mean_sd_fields(&r.c_valid),
            mean_sd_fields(&r.slope),
            mean_sd_fields(&r.citl),
            mean_sd_fields(&r.brier_deriv),
            r.n_cells
        )?;
    }
    out.flush()?;
    Ok(())
}

/// The differential presets in their reporting layout.
pub fn write_table4_csv(path: &Path, summaries: &[GridSummary]) -> Result<(), ReportError> {
    if summaries.is_empty() {
        return Err(ReportError::Empty("no preset summaries".into()));
    }
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(
        out,
        "scenario_id,c_deriv_mean,c_deriv_sd,c_valid_mean,c_valid_sd,slope_median,slope_sd,\
         brier_deriv_mean,brier_deriv_sd,brier_valid_mean,brier_valid_sd,n_excluded"
    )?;
    for s in summaries {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            s.scenario_id,
            mean_sd_fields(&s.c_deriv),
            mean_sd_fields(&s.c_valid),
            fmt6(s.slope_median),
            fmt6(s.slope_sd),
            mean_sd_fields(&s.brier_deriv),
            mean_sd_fields(&s.brier_valid),
            s.n_excluded
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Decomposed Brier score against relative measurement variance.
pub fn write_sweep_csv(path: &Path, points: &[SweepPoint]) -> Result<(), ReportError> {
    if points.is_empty() {
        return Err(ReportError::Empty("no sweep points".into()));
    }
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(
        out,
        "mv_percent,reestimated_total,reestimated_calibration,reestimated_refinement,\
         transported_total,transported_calibration,transported_refinement"
    )?;
    for p in points {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt6(p.mv_percent),
            fmt6(p.reestimated.total),
            fmt6(p.reestimated.calibration),
            fmt6(p.reestimated.refinement),
            fmt6(p.transported.total),
            fmt6(p.transported.calibration),
            fmt6(p.transported.refinement)
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Derivation and validation metrics of one large-sample run.
pub fn write_large_sample_csv(path: &Path, report: &LargeSampleReport) -> Result<(), ReportError> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(
        out,
        "side,c_statistic,calib_slope,citl,brier,brier_calibration,brier_refinement,n,n_events"
    )?;
    for (side, r) in [("derivation", &report.derivation), ("validation", &report.validation)] {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            side,
            fmt6(r.c_statistic),
            fmt6(r.calib_slope),
            fmt6(r.citl),
            fmt6(r.brier.total),
            fmt6(r.brier.calibration),
            fmt6(r.brier.refinement),
            r.n,
            r.n_events
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Calibration-curve points, one file per scenario, one block per replicate.
pub fn write_curves_csv(path: &Path, curves: &[(u64, Vec<CurvePoint>)]) -> Result<(), ReportError> {
    if curves.is_empty() {
        return Err(ReportError::Empty("no curves".into()));
    }
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "rep,predicted,observed")?;
    for (rep, curve) in curves {
        for (p, o) in curve {
            writeln!(out, "{},{},{}", rep, fmt6(*p), fmt6(*o))?;
        }
    }
    out.flush()?;
    Ok(())
}

/// A square calibration plot with the identity line and one polyline per
/// replicate curve.
pub fn write_curves_svg(
    path: &Path,
    title: &str,
    curves: &[(u64, Vec<CurvePoint>)],
) -> Result<(), ReportError> {
    if curves.is_empty() {
        return Err(ReportError::Empty("no curves".into()));
    }
    const SIZE: f64 = 640.0;
    const MARGIN: f64 = 60.0;
    let span = SIZE - 2.0 * MARGIN;
    let sx = |v: f64| MARGIN + v.clamp(0.0, 1.0) * span;
    let sy = |v: f64| SIZE - MARGIN - v.clamp(0.0, 1.0) * span;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" \
         viewBox=\"0 0 {SIZE} {SIZE}\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{SIZE}\" height=\"{SIZE}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"30\" font-family=\"sans-serif\" font-size=\"16\" \
         text-anchor=\"middle\">{}</text>\n",
        SIZE / 2.0,
        title
    ));
    // axes with ticks every 0.25
    svg.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{m}\" y1=\"{b}\" x2=\"{m}\" y2=\"{t}\" stroke=\"black\"/>\n",
        m = MARGIN,
        b = SIZE - MARGIN,
        r = SIZE - MARGIN,
        t = MARGIN
    ));
    for i in 0..=4 {
        let v = i as f64 * 0.25;
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"middle\">{v}</text>\n",
            sx(v),
            SIZE - MARGIN + 20.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"end\">{v}</text>\n",
            MARGIN - 8.0,
            sy(v) + 4.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"14\" \
         text-anchor=\"middle\">predicted probability</text>\n",
        SIZE / 2.0,
        SIZE - 12.0
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{}\" font-family=\"sans-serif\" font-size=\"14\" \
         text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">observed frequency</text>\n",
        SIZE / 2.0,
        SIZE / 2.0
    ));
    svg.push_str(&format!(
        "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#888888\" \
         stroke-dasharray=\"6 4\"/>\n",
        sx(0.0),
        sy(0.0),
        sx(1.0),
        sy(1.0)
    ));
    let opacity = (8.0 / curves.len() as f64).clamp(0.02, 0.9);
    for (_, curve) in curves {
        let pts: Vec<String> = curve
            .iter()
            .map(|(p, o)| format!("{:.2},{:.2}", sx(*p), sy(*o)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"#1f4e9c\" stroke-opacity=\"{opacity:.3}\" \
             stroke-width=\"1\" points=\"{}\"/>\n",
            pts.join(" ")
        ));
    }
    svg.push_str("</svg>\n");

    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(svg.as_bytes())?;
    out.flush()?;
    Ok(())
}

/// One parsed row of a replicate-level table.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedReplicate {
    pub rep: u64,
    pub excluded: bool,
    pub c_deriv: f64,
    pub c_valid: f64,
    pub slope: f64,
    pub citl: f64,
    pub brier_deriv: f64,
    pub brier_valid: f64,
}

/// Read a replicate-level table back, grouped by scenario in first-appearance
/// order.
pub fn read_replicates_csv(path: &Path) -> Result<Vec<(String, Vec<ParsedReplicate>)>, ReportError> {
    let malformed = |line: usize, message: String| ReportError::Malformed {
        path: path.display().to_string(),
        line,
        message,
    };
    let reader = BufReader::new(File::open(path)?);
    let mut groups: Vec<(String, Vec<ParsedReplicate>)> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if idx == 0 {
            if line != REPLICATES_HEADER {
                return Err(malformed(1, "unexpected header".into()));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 13 {
            return Err(malformed(idx + 1, format!("expected 13 fields, got {}", fields.len())));
        }
        let num = |pos: usize, name: &str| -> Result<f64, ReportError> {
            if fields[pos].is_empty() {
                return Ok(f64::NAN);
            }
            fields[pos]
                .parse()
                .map_err(|_| malformed(idx + 1, format!("bad {name}: `{}`", fields[pos])))
        };
        let row = ParsedReplicate {
            rep: fields[1]
                .parse()
                .map_err(|_| malformed(idx + 1, format!("bad rep: `{}`", fields[1])))?,
            excluded: fields[12] == "1",
            c_deriv: num(2, "c_deriv")?,
            c_valid: num(3, "c_valid")?,
            slope: num(4, "slope")?,
            citl: num(5, "citl")?,
            brier_deriv: num(6, "brier_deriv")?,
            brier_valid: num(9, "brier_valid")?,
        };
        match groups.last_mut() {
            Some((id, rows)) if id == fields[0] => rows.push(row),
            _ => match groups.iter_mut().find(|(id, _)| id == fields[0]) {
                Some((_, rows)) => rows.push(row),
                None => groups.push((fields[0].to_string(), vec![row])),
            },
        }
    }
    if groups.is_empty() {
        return Err(ReportError::Empty(format!(
            "{} holds no replicate rows",
            path.display()
        )));
    }
    Ok(groups)
}

fn median_of(mut values: Vec<f64>) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Re-aggregate parsed replicate rows into a scenario summary.
pub fn summarize_parsed(scenario_id: &str, rows: &[ParsedReplicate]) -> GridSummary {
    let kept: Vec<&ParsedReplicate> = rows.iter().filter(|r| !r.excluded).collect();
    let values = |f: &dyn Fn(&ParsedReplicate) -> f64| -> Vec<f64> {
        kept.iter().map(|r| f(r)).collect()
    };
    let slopes = values(&|r| r.slope);
    GridSummary {
        scenario_id: scenario_id.to_string(),
        c_deriv: MeanSd::from_values(&values(&|r| r.c_deriv)),
        c_valid: MeanSd::from_values(&values(&|r| r.c_valid)),
        slope_median: median_of(slopes.clone()),
        slope_sd: MeanSd::from_values(&slopes).sd,
        citl: MeanSd::from_values(&values(&|r| r.citl)),
        brier_deriv: MeanSd::from_values(&values(&|r| r.brier_deriv)),
        brier_valid: MeanSd::from_values(&values(&|r| r.brier_valid)),
        n_replicates: rows.len(),
        n_excluded: rows.len() - kept.len(),
    }
}
