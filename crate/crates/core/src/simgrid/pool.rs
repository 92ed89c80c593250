//! Pooling of single-predictor grid summaries into ordered rows.
//!
//! The grid crosses three derivation noise levels with three validation
//! noise levels. Rows pool the three cells sharing a variance ordering
//! (derivation below, equal to, or above validation) at fixed validation
//! shift and association; the row statistic is the mean of the per-cell
//! aggregates and its standard deviation across those cells.

use super::{Family, GridSummary, MeanSd, Scenario};
use crate::error::{Error, Result};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct SigmaOrderKey {
    order: SigmaOrder,
    psi_bits: u64,
    theta_bits: u64,
}

/// Ordering of the derivation error variance against validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SigmaOrder {
    /// Derivation measurements more precise than validation.
    Less,
    /// Identical error variance in both settings.
    Equal,
    /// Derivation measurements less precise than validation.
    Greater,
}

impl SigmaOrder {
    pub fn label(self) -> &'static str {
        match self {
            SigmaOrder::Less => "lt",
            SigmaOrder::Equal => "eq",
            SigmaOrder::Greater => "gt",
        }
    }

    fn of(var_deriv: f64, var_valid: f64) -> Self {
        if var_deriv < var_valid {
            SigmaOrder::Less
        } else if var_deriv > var_valid {
            SigmaOrder::Greater
        } else {
            SigmaOrder::Equal
        }
    }
}

/// One pooled row: a variance ordering at fixed validation shift and
/// association, aggregated across its grid cells.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledRow {
    pub sigma_order: SigmaOrder,
    pub psi: f64,
    pub theta: f64,
    pub c_deriv: MeanSd,
    pub c_valid: MeanSd,
    /// Mean and spread of the per-cell median calibration slopes.
    pub slope: MeanSd,
    pub citl: MeanSd,
    pub brier_deriv: MeanSd,
    pub brier_valid: MeanSd,
    pub n_cells: usize,
}

/// Pool single-predictor scenario summaries into ordered rows. `scenarios`
/// and `summaries` must be parallel slices as returned by the grid builder
/// and runner; non-single families are ignored.
pub fn pool_rows(scenarios: &[Scenario], summaries: &[GridSummary]) -> Result<Vec<PooledRow>> {
    if scenarios.len() != summaries.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} scenarios vs {} summaries",
            scenarios.len(),
            summaries.len()
        )));
    }
    let mut groups: BTreeMap<SigmaOrderKey, Vec<&GridSummary>> = BTreeMap::new();
    for (scenario, summary) in scenarios.iter().zip(summaries) {
        if scenario.family != Family::Single {
            continue;
        }
        if scenario.id != summary.scenario_id {
            return Err(Error::DimensionMismatch(format!(
                "scenario {} paired with summary {}",
                scenario.id, summary.scenario_id
            )));
        }
        let deriv = scenario.deriv_models[0].params_noncase();
        let valid = scenario.valid_models[0].params_noncase();
        let key = SigmaOrderKey {
            order: SigmaOrder::of(deriv.var_eps, valid.var_eps),
            psi_bits: valid.psi.to_bits(),
            theta_bits: valid.theta.to_bits(),
        };
        groups.entry(key).or_default().push(summary);
    }
    if groups.is_empty() {
        return Err(Error::InvalidParameter(
            "no single-predictor scenarios to pool".into(),
        ));
    }
    let rows = groups
        .into_iter()
        .map(|(key, cells)| {
            let stat = |f: &dyn Fn(&GridSummary) -> f64| -> MeanSd {
                MeanSd::from_values(&cells.iter().map(|c| f(c)).collect::<Vec<_>>())
            };
            PooledRow {
                sigma_order: key.order,
                psi: f64::from_bits(key.psi_bits),
                theta: f64::from_bits(key.theta_bits),
                c_deriv: stat(&|c| c.c_deriv.mean),
                c_valid: stat(&|c| c.c_valid.mean),
                slope: stat(&|c| c.slope_median),
                citl: stat(&|c| c.citl.mean),
                brier_deriv: stat(&|c| c.brier_deriv.mean),
                brier_valid: stat(&|c| c.brier_valid.mean),
                n_cells: cells.len(),
            }
        })
        .collect();
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simgrid::{build_family_grid, summarize, Family};

    #[test]
    fn grid_pools_into_eighteen_rows_of_three_cells() {
        let scenarios = build_family_grid(Family::Single);
        // dummy summaries reusing the scenario ids
        let summaries: Vec<GridSummary> = scenarios
            .iter()
            .map(|s| summarize(&s.id, &[]))
            .collect();
        let rows = pool_rows(&scenarios, &summaries).unwrap();
        assert_eq!(rows.len(), 18);
        for row in &rows {
            assert_eq!(row.n_cells, 3);
        }
        let orders: Vec<SigmaOrder> = rows.iter().map(|r| r.sigma_order).collect();
        assert_eq!(orders.iter().filter(|o| **o == SigmaOrder::Less).count(), 6);
        assert_eq!(orders.iter().filter(|o| **o == SigmaOrder::Equal).count(), 6);
        assert_eq!(
            orders.iter().filter(|o| **o == SigmaOrder::Greater).count(),
            6
        );
    }

    #[test]
    fn non_single_scenarios_are_ignored() {
        let scenarios = build_family_grid(Family::TwoPredictorBothHeterogeneous);
        let summaries: Vec<GridSummary> =
            scenarios.iter().map(|s| summarize(&s.id, &[])).collect();
        assert!(pool_rows(&scenarios, &summaries).is_err());
    }
}
