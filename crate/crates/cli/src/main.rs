//! `heterosim` — simulate the out-of-sample performance of logistic
//! prediction models under heterogeneous predictor measurement.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use heterosim_cli::config::{parse_scenario_file, ScenarioSpec};
use heterosim_cli::report::{
    summarize_parsed, write_curves_csv, write_curves_svg, write_large_sample_csv,
    write_summary_csv, write_sweep_csv, write_table3_csv, write_table4_csv, read_replicates_csv,
    ReplicateCsv,
};
use heterosim_core::measurement::ClassParams;
use heterosim_core::simgrid::{
    brier_sweep, build_family_grid, build_grid, differential_presets, pool_rows, replicate_curve,
    run_large_sample, run_scenario, thread_pool, EvalMode, Family, GridSummary, LargeSampleConfig,
    Scenario, ScenarioResult, DEFAULT_SAMPLE_SIZE,
};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "heterosim",
    about = "Monte Carlo study of predictor measurement heterogeneity in logistic prediction models",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the factorial scenario grid (or one of its families).
    Grid(GridArgs),
    /// Run the four differential measurement presets.
    Differential(DifferentialArgs),
    /// Run one large-sample experiment with two measurement views of a
    /// single cohort.
    LargeSample(LargeSampleArgs),
    /// Sweep the decomposed Brier score over relative measurement variance.
    BrierSweep(BrierSweepArgs),
    /// Run one custom scenario from a config file.
    Scenario(ScenarioArgs),
    /// Re-aggregate an existing replicate table into summaries.
    Report(ReportArgs),
}

#[derive(Args)]
struct CommonRunArgs {
    /// Master seed; replicate streams derive from it deterministically.
    #[arg(long)]
    seed: u64,
    /// Replicates per scenario.
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    reps: u64,
    /// Worker threads (default: all available).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory (default: $HETEROSIM_OUT or ./heterosim-out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Calibration curves per scenario written to curves/<id>.csv (0 = none).
    #[arg(long, default_value_t = 20)]
    curves: usize,
    /// Also render curves/<id>.svg with the overlaid curves.
    #[arg(long)]
    svg: bool,
    /// Grid points per calibration curve.
    #[arg(long, default_value_t = 100)]
    curve_grid: usize,
    /// Loess span for calibration curves.
    #[arg(long, default_value_t = 0.75)]
    loess_span: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Single,
    TwoConsistent,
    TwoBoth,
    Differential,
    All,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    common: CommonRunArgs,
    /// Scenario family to run.
    #[arg(long, value_enum, default_value_t = FamilyArg::All)]
    family: FamilyArg,
    /// Sample size for both the derivation and validation sets.
    #[arg(long, default_value_t = DEFAULT_SAMPLE_SIZE, value_parser = clap::value_parser!(usize))]
    n: usize,
}

#[derive(Args)]
struct DifferentialArgs {
    #[command(flatten)]
    common: CommonRunArgs,
    /// Sample size for both the derivation and validation sets.
    #[arg(long, default_value_t = DEFAULT_SAMPLE_SIZE)]
    n: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PanelArg {
    /// Random noise of different variances on each side.
    Random,
    /// Additive shift at validation.
    Additive,
    /// Multiplicative association at validation.
    Multiplicative,
    /// Case measurements differ at validation.
    DifferentialValidation,
    /// Case measurements differ at derivation.
    DifferentialDerivation,
}

#[derive(Args)]
struct LargeSampleArgs {
    /// Master seed.
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = PanelArg::Random)]
    panel: PanelArg,
    /// Cohort size.
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(usize))]
    n: usize,
    /// transported: apply derivation coefficients to the validation
    /// measurement; reestimated: refit on it.
    #[arg(long, value_enum, default_value_t = ModeArg::Transported)]
    mode: ModeArg,
    /// Derivation noise variance (random panel).
    #[arg(long, default_value_t = 0.5)]
    var_deriv: f64,
    /// Validation noise variance (random panel).
    #[arg(long, default_value_t = 2.0)]
    var_valid: f64,
    /// Additive shift at validation (additive panel).
    #[arg(long, default_value_t = 0.25)]
    psi: f64,
    /// Association at validation (multiplicative panel).
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    /// Case-class noise variance (differential panels).
    #[arg(long, default_value_t = 2.0)]
    case_var: f64,
    /// Case-class association (differential panels).
    #[arg(long, default_value_t = 1.0)]
    case_theta: f64,
    /// Grid points of the calibration curve.
    #[arg(long, default_value_t = 100)]
    curve_grid: usize,
    /// Loess span of the calibration curve.
    #[arg(long, default_value_t = 0.75)]
    loess_span: f64,
    /// Output directory (default: $HETEROSIM_OUT or ./heterosim-out).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Transported,
    Reestimated,
}

#[derive(Args)]
struct BrierSweepArgs {
    /// Master seed.
    #[arg(long)]
    seed: u64,
    /// Relative measurement variance percentages.
    #[arg(long, value_delimiter = ',', default_value = "25,50,75,100,150,200,400")]
    grid: Vec<f64>,
    /// Cohort size.
    #[arg(long, default_value_t = 1_000_000)]
    n: usize,
    /// Output directory (default: $HETEROSIM_OUT or ./heterosim-out).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScenarioArgs {
    #[command(flatten)]
    common: CommonRunArgs,
    /// Scenario definition file.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Existing replicate table to re-aggregate.
    #[arg(long)]
    replicates: PathBuf,
    /// Output directory (default: $HETEROSIM_OUT or ./heterosim-out).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn resolve_out(out: Option<PathBuf>) -> PathBuf {
    out.or_else(|| std::env::var_os("HETEROSIM_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("heterosim-out"))
}

fn resolve_workers(workers: Option<usize>) -> usize {
    workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Grid(args) => run_grid_command(args),
        Command::Differential(args) => run_differential_command(args),
        Command::LargeSample(args) => run_large_sample_command(args),
        Command::BrierSweep(args) => run_brier_sweep_command(args),
        Command::Scenario(args) => run_scenario_command(args),
        Command::Report(args) => run_report_command(args),
    }
}

/// Run scenarios one by one, streaming replicate rows to disk and collecting
/// summaries; emits curve files when requested.
fn run_scenarios(
    scenarios: &[Scenario],
    common: &CommonRunArgs,
    outdir: &Path,
) -> Result<Vec<GridSummary>> {
    if scenarios.is_empty() {
        bail!("no scenarios to run");
    }
    std::fs::create_dir_all(outdir)
        .with_context(|| format!("cannot create {}", outdir.display()))?;
    let curves_dir = outdir.join("curves");
    if common.curves > 0 {
        std::fs::create_dir_all(&curves_dir)?;
    }
    let pool = thread_pool(resolve_workers(common.workers))?;
    let mut replicates = ReplicateCsv::create(&outdir.join("replicates.csv"))?;
    let mut summaries = Vec::with_capacity(scenarios.len());
    for (i, scenario) in scenarios.iter().enumerate() {
        let result: ScenarioResult =
            pool.install(|| run_scenario(scenario, common.reps, common.seed))?;
        replicates.append(&scenario.id, &result.replicates)?;
        eprintln!(
            "[{}/{}] {}: {} replicates, {} excluded",
            i + 1,
            scenarios.len(),
            scenario.id,
            result.summary.n_replicates,
            result.summary.n_excluded
        );
        if common.curves > 0 {
            let reps_with_curves: Vec<u64> = result
                .replicates
                .iter()
                .filter(|r| !r.is_excluded())
                .map(|r| r.rep_index)
                .take(common.curves)
                .collect();
            let curves: Vec<(u64, Vec<(f64, f64)>)> = pool.install(|| {
                reps_with_curves
                    .iter()
                    .map(|&rep| {
                        replicate_curve(
                            scenario,
                            rep,
                            common.seed,
                            common.curve_grid,
                            common.loess_span,
                        )
                        .map(|c| (rep, c.expect("replicate known to be complete")))
                    })
                    .collect::<heterosim_core::Result<_>>()
            })?;
            if !curves.is_empty() {
                write_curves_csv(&curves_dir.join(format!("{}.csv", scenario.id)), &curves)?;
                if common.svg {
                    write_curves_svg(
                        &curves_dir.join(format!("{}.svg", scenario.id)),
                        &scenario.id,
                        &curves,
                    )?;
                }
            }
        }
        summaries.push(result.summary);
    }
    replicates.finish()?;
    write_summary_csv(&outdir.join("summary.csv"), &summaries)?;
    Ok(summaries)
}

fn run_grid_command(args: GridArgs) -> Result<()> {
    let mut scenarios = match args.family {
        FamilyArg::Single => build_family_grid(Family::Single),
        FamilyArg::TwoConsistent => build_family_grid(Family::TwoPredictorOneConsistent),
        FamilyArg::TwoBoth => build_family_grid(Family::TwoPredictorBothHeterogeneous),
        FamilyArg::Differential => build_family_grid(Family::SingleDifferential),
        FamilyArg::All => build_grid(),
    };
    for s in &mut scenarios {
        s.n_deriv = args.n;
        s.n_valid = args.n;
    }
    let outdir = resolve_out(args.common.out.clone());
    let summaries = run_scenarios(&scenarios, &args.common, &outdir)?;
    if scenarios.iter().any(|s| s.family == Family::Single) {
        let rows = pool_rows(&scenarios, &summaries)?;
        write_table3_csv(&outdir.join("table3.csv"), &rows)?;
    }
    eprintln!("reports written to {}", outdir.display());
    Ok(())
}

fn run_differential_command(args: DifferentialArgs) -> Result<()> {
    let scenarios = differential_presets(args.n);
    let outdir = resolve_out(args.common.out.clone());
    let summaries = run_scenarios(&scenarios, &args.common, &outdir)?;
    write_table4_csv(&outdir.join("table4.csv"), &summaries)?;
    eprintln!("reports written to {}", outdir.display());
    Ok(())
}

fn run_large_sample_command(args: LargeSampleArgs) -> Result<()> {
    let mut config = match args.panel {
        PanelArg::Random => {
            LargeSampleConfig::random_heterogeneity(args.var_deriv, args.var_valid, args.seed)?
        }
        PanelArg::Additive => LargeSampleConfig::additive(args.psi, args.seed)?,
        PanelArg::Multiplicative => LargeSampleConfig::multiplicative(args.theta, args.seed)?,
        PanelArg::DifferentialValidation => LargeSampleConfig::differential_at_validation(
            ClassParams::new(0.0, args.case_theta, args.case_var)?,
            args.seed,
        )?,
        PanelArg::DifferentialDerivation => LargeSampleConfig::differential_at_derivation(
            ClassParams::new(0.0, args.case_theta, args.case_var)?,
            args.seed,
        )?,
    };
    config.n = args.n;
    config.mode = match args.mode {
        ModeArg::Transported => EvalMode::Transported,
        ModeArg::Reestimated => EvalMode::Reestimated,
    };
    config.curve_points = args.curve_grid;
    config.loess_span = args.loess_span;

    let report = run_large_sample(&config)?;
    let outdir = resolve_out(args.out);
    std::fs::create_dir_all(&outdir)?;
    write_large_sample_csv(&outdir.join("large_sample.csv"), &report)?;
    let curve: Vec<(u64, Vec<(f64, f64)>)> = vec![(0, report.curve.clone())];
    write_curves_csv(&outdir.join("large_sample_curve.csv"), &curve)?;
    eprintln!(
        "c {:.3} -> {:.3}, slope {:.3}, citl {:.3}, brier {:.3} -> {:.3}",
        report.derivation.c_statistic,
        report.validation.c_statistic,
        report.validation.calib_slope,
        report.validation.citl,
        report.derivation.brier.total,
        report.validation.brier.total
    );
    eprintln!("reports written to {}", outdir.display());
    Ok(())
}

fn run_brier_sweep_command(args: BrierSweepArgs) -> Result<()> {
    let points = brier_sweep(&args.grid, args.n, args.seed)?;
    let outdir = resolve_out(args.out);
    std::fs::create_dir_all(&outdir)?;
    write_sweep_csv(&outdir.join("brier_sweep.csv"), &points)?;
    eprintln!("reports written to {}", outdir.display());
    Ok(())
}

fn run_scenario_command(args: ScenarioArgs) -> Result<()> {
    let spec: ScenarioSpec = parse_scenario_file(&args.config)?;
    let scenario = spec.into_scenario();
    let outdir = resolve_out(args.common.out.clone());
    run_scenarios(std::slice::from_ref(&scenario), &args.common, &outdir)?;
    eprintln!("reports written to {}", outdir.display());
    Ok(())
}

fn run_report_command(args: ReportArgs) -> Result<()> {
    let groups = read_replicates_csv(&args.replicates)?;
    let summaries: Vec<GridSummary> = groups
        .iter()
        .map(|(id, rows)| summarize_parsed(id, rows))
        .collect();
    let outdir = resolve_out(args.out);
    std::fs::create_dir_all(&outdir)?;
    write_summary_csv(&outdir.join("summary.csv"), &summaries)?;

    // when every scenario id belongs to the single-predictor grid, the
    // pooled table can be rebuilt as well
    let single = build_family_grid(Family::Single);
    let matched: Vec<Scenario> = summaries
        .iter()
        .filter_map(|s| single.iter().find(|sc| sc.id == s.scenario_id).cloned())
        .collect();
    if matched.len() == summaries.len() {
        let rows = pool_rows(&matched, &summaries)?;
        write_table3_csv(&outdir.join("table3.csv"), &rows)?;
    }
    eprintln!("reports written to {}", outdir.display());
    Ok(())
}
