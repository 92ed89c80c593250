//! Scenario definitions, the factorial grid, the replicate runner, and
//! result aggregation for measurement-heterogeneity experiments.
//!
//! A [`Scenario`] pairs a population (single- or two-predictor logistic
//! model) with one measurement model per predictor for the derivation
//! setting and one for the validation setting. The runner derives a model on
//! measured derivation data, transports it to independently sampled and
//! independently measured validation data, and reports discrimination,
//! calibration, and overall accuracy on both sides.

mod grid;
mod largesample;
mod pool;
mod runner;

pub use grid::{build_family_grid, build_grid, differential_presets, GRID_NOISE_SD_LEVELS,
    GRID_PSI_LEVELS, GRID_RHO_LEVELS, GRID_THETA_LEVELS};
pub use largesample::{
    brier_sweep, large_sample_population, run_large_sample, EvalMode, LargeSampleConfig,
    LargeSampleReport, SweepPoint,
};
pub use pool::{pool_rows, PooledRow, SigmaOrder};
pub use runner::{
    replicate_curve, run_differential_presets, run_grid, run_replicate, run_scenario, summarize,
    thread_pool, ScenarioResult,
};

use crate::cohort::{standard_population, OutcomeModel, PopulationKind, PredictorSpec};
use crate::error::{Error, Result};
use crate::glm::FittedModel;
use crate::measurement::MeasurementModel;
use crate::metrics::PerformanceReport;

/// Default sample size per setting.
pub const DEFAULT_SAMPLE_SIZE: usize = 2000;

/// The scenario families of the factorial design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// One predictor, non-differential measurement.
    Single,
    /// Two predictors; the first is measured identically in both settings,
    /// the second follows the validation grid.
    TwoPredictorOneConsistent,
    /// Two predictors, both measured heterogeneously with independent noise.
    TwoPredictorBothHeterogeneous,
    /// One predictor with class-dependent (differential) measurement.
    SingleDifferential,
}

impl Family {
    pub fn predictor_count(self) -> usize {
        match self {
            Family::Single | Family::SingleDifferential => 1,
            Family::TwoPredictorOneConsistent | Family::TwoPredictorBothHeterogeneous => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Family::Single => "single",
            Family::TwoPredictorOneConsistent => "twocons",
            Family::TwoPredictorBothHeterogeneous => "twoboth",
            Family::SingleDifferential => "singlediff",
        }
    }
}

/// One derivation/validation measurement configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Unique, stable identifier; also keys the per-replicate random streams.
    pub id: String,
    pub family: Family,
    /// Predictor correlation; meaningful for two-predictor families.
    pub rho: f64,
    pub deriv_models: Vec<MeasurementModel>,
    pub valid_models: Vec<MeasurementModel>,
    pub n_deriv: usize,
    pub n_valid: usize,
}

impl Scenario {
    /// Check the structural invariants: model counts match the family's
    /// predictor count and sample sizes are positive.
    pub fn validate(&self) -> Result<()> {
        let p = self.family.predictor_count();
        if self.deriv_models.len() != p || self.valid_models.len() != p {
            return Err(Error::DimensionMismatch(format!(
                "scenario {} needs {} measurement models per setting, got {}/{}",
                self.id,
                p,
                self.deriv_models.len(),
                self.valid_models.len()
            )));
        }
        if self.n_deriv == 0 || self.n_valid == 0 {
            return Err(Error::InvalidParameter(format!(
                "scenario {} has empty derivation or validation sample",
                self.id
            )));
        }
        if self.id.is_empty() {
            return Err(Error::InvalidParameter("scenario id must be non-empty".into()));
        }
        Ok(())
    }

    /// The predictor distribution and outcome model this scenario samples from.
    pub fn population(&self) -> Result<(PredictorSpec, OutcomeModel)> {
        match self.family {
            Family::Single | Family::SingleDifferential => {
                standard_population(PopulationKind::Single, 0.0)
            }
            Family::TwoPredictorOneConsistent | Family::TwoPredictorBothHeterogeneous => {
                standard_population(PopulationKind::TwoPredictor, self.rho)
            }
        }
    }
}

/// Outcome of one replicate: either a pair of performance reports plus the
/// derivation fit, or an exclusion with its reason.
#[derive(Debug, Clone, PartialEq)]
pub enum ReplicateOutcome {
    Completed(Box<CompletedReplicate>),
    Excluded { reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletedReplicate {
    pub in_sample: PerformanceReport,
    pub out_of_sample: PerformanceReport,
    pub deriv_fit: FittedModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateResult {
    pub rep_index: u64,
    pub outcome: ReplicateOutcome,
}

impl ReplicateResult {
    pub fn completed(&self) -> Option<&CompletedReplicate> {
        match &self.outcome {
            ReplicateOutcome::Completed(c) => Some(c),
            ReplicateOutcome::Excluded { .. } => None,
        }
    }

    pub fn is_excluded(&self) -> bool {
        matches!(self.outcome, ReplicateOutcome::Excluded { .. })
    }
}

/// Mean and sample standard deviation (n-1) of a batch of values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    pub fn from_values(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self {
                mean: f64::NAN,
                sd: f64::NAN,
            };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Self { mean, sd }
    }
}

/// Median of a batch of values (mean of the middle pair for even counts).
pub(crate) fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Replicate-aggregated performance of one scenario.
///
/// Statistics run over non-excluded replicates only: means with sample
/// standard deviations for the c-statistic, calibration-in-the-large, and
/// Brier score (derivation and validation), and the median with standard
/// deviation for the validation calibration slope.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSummary {
    pub scenario_id: String,
    pub c_deriv: MeanSd,
    pub c_valid: MeanSd,
    pub slope_median: f64,
    pub slope_sd: f64,
    pub citl: MeanSd,
    pub brier_deriv: MeanSd,
    pub brier_valid: MeanSd,
    pub n_replicates: usize,
    pub n_excluded: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_sd_basics() {
        let m = MeanSd::from_values(&[1.0, 2.0, 3.0]);
        assert_eq!(m.mean, 2.0);
        assert!((m.sd - 1.0).abs() < 1e-15);
        let single = MeanSd::from_values(&[5.0]);
        assert_eq!(single.mean, 5.0);
        assert_eq!(single.sd, 0.0);
        assert!(MeanSd::from_values(&[]).mean.is_nan());
    }

    #[test]
    fn median_basics() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn scenario_validation() {
        let mut s = Scenario {
            id: "test".into(),
            family: Family::Single,
            rho: 0.0,
            deriv_models: vec![MeasurementModel::exact()],
            valid_models: vec![MeasurementModel::exact()],
            n_deriv: 100,
            n_valid: 100,
        };
        assert!(s.validate().is_ok());
        s.n_valid = 0;
        assert!(s.validate().is_err());
        s.n_valid = 100;
        s.family = Family::TwoPredictorBothHeterogeneous;
        assert!(s.validate().is_err());
    }
}
