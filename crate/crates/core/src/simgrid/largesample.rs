//! Large-sample experiments: a single cohort carries a derivation-style and
//! a validation-style measurement of the same exact predictor, so effects of
//! measurement heterogeneity appear in isolation from sampling variability
//! and case-mix differences.

use super::runner::evaluate_predictions;
use crate::cohort::{sample_cohort, Cohort, OutcomeModel, PredictorSpec};
use crate::error::{Error, Result};
use crate::glm::{fit, FittedModel};
use crate::measurement::{ClassParams, MeasurementModel};
use crate::metrics::{brier, loess_calibration_curve, BrierDecomposition, CurvePoint,
    PerformanceReport};
use crate::rng::substream;

/// Population for the large-sample illustrations: one predictor with
/// variance 0.5 and log-odds `ln 8` per unit.
pub fn large_sample_population() -> (PredictorSpec, OutcomeModel) {
    (
        PredictorSpec::univariate(0.0, 0.5).expect("valid spec"),
        OutcomeModel::new(0.0, vec![8.0f64.ln()]).expect("valid model"),
    )
}

/// How the validation-side predictions are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// Apply the derivation coefficients to the validation measurement.
    Transported,
    /// Refit the model on the validation measurement itself.
    Reestimated,
}

/// Configuration of one large-sample run.
#[derive(Debug, Clone, PartialEq)]
pub struct LargeSampleConfig {
    pub deriv_model: MeasurementModel,
    pub valid_model: MeasurementModel,
    pub n: usize,
    pub mode: EvalMode,
    pub seed: u64,
    pub curve_points: usize,
    pub loess_span: f64,
}

impl LargeSampleConfig {
    pub fn new(deriv_model: MeasurementModel, valid_model: MeasurementModel, seed: u64) -> Self {
        Self {
            deriv_model,
            valid_model,
            n: 1_000_000,
            mode: EvalMode::Transported,
            seed,
            curve_points: 100,
            loess_span: 0.75,
        }
    }

    /// Random heterogeneity: plain noise of the given variances on each side.
    pub fn random_heterogeneity(var_deriv: f64, var_valid: f64, seed: u64) -> Result<Self> {
        Ok(Self::new(
            MeasurementModel::random(var_deriv)?,
            MeasurementModel::random(var_valid)?,
            seed,
        ))
    }

    /// Additive shift at validation, noise variance 0.5 on both sides.
    pub fn additive(psi_valid: f64, seed: u64) -> Result<Self> {
        Ok(Self::new(
            MeasurementModel::random(0.5)?,
            MeasurementModel::systematic(psi_valid, 1.0, 0.5)?,
            seed,
        ))
    }

    /// Multiplicative association at validation, noise variance 0.5 on both
    /// sides.
    pub fn multiplicative(theta_valid: f64, seed: u64) -> Result<Self> {
        Ok(Self::new(
            MeasurementModel::random(0.5)?,
            MeasurementModel::systematic(0.0, theta_valid, 0.5)?,
            seed,
        ))
    }

    /// Case measurements differ at validation; non-cases keep the default
    /// noise variance 0.5, as does everything at derivation.
    pub fn differential_at_validation(case: ClassParams, seed: u64) -> Result<Self> {
        Ok(Self::new(
            MeasurementModel::random(0.5)?,
            MeasurementModel::differential(ClassParams::new(0.0, 1.0, 0.5)?, case),
            seed,
        ))
    }

    /// Case measurements differ at derivation; everything else keeps the
    /// default noise variance 0.5.
    pub fn differential_at_derivation(case: ClassParams, seed: u64) -> Result<Self> {
        Ok(Self::new(
            MeasurementModel::differential(ClassParams::new(0.0, 1.0, 0.5)?, case),
            MeasurementModel::random(0.5)?,
            seed,
        ))
    }
}

/// Performance on both sides of a large-sample run plus the validation-side
/// calibration curve.
#[derive(Debug, Clone, PartialEq)]
pub struct LargeSampleReport {
    pub derivation: PerformanceReport,
    pub validation: PerformanceReport,
    pub curve: Vec<CurvePoint>,
}

fn fitted_or_error(design: &[Vec<f64>], y: &[bool], side: &str) -> Result<FittedModel> {
    let model = fit(design, y, None)?;
    if !model.converged {
        return Err(Error::DegenerateDesign(format!(
            "{side} fit did not converge"
        )));
    }
    Ok(model)
}

/// Run one large-sample experiment: sample a cohort, measure it once in the
/// derivation style and once in the validation style, derive the model on
/// the first measurement, and evaluate per the configured mode.
pub fn run_large_sample(config: &LargeSampleConfig) -> Result<LargeSampleReport> {
    if config.n < 50 {
        return Err(Error::InvalidParameter(
            "large-sample run needs at least 50 observations".into(),
        ));
    }
    let (spec, outcome) = large_sample_population();
    let mut rng = substream(config.seed, "large-sample", 0);
    let exact = [MeasurementModel::exact()];
    let cohort: Cohort = sample_cohort(config.n, &spec, &outcome, &exact, &mut rng)?;
    let w_deriv = cohort.remeasure(&[config.deriv_model], &mut rng)?;
    let w_valid = cohort.remeasure(&[config.valid_model], &mut rng)?;

    let deriv_fit = fitted_or_error(&w_deriv, &cohort.y, "derivation")?;
    let lp_deriv = deriv_fit.linear_predictor(&w_deriv, None)?;
    let derivation = evaluate_predictions(&lp_deriv, &cohort.y)?;

    let lp_valid = match config.mode {
        EvalMode::Transported => deriv_fit.linear_predictor(&w_valid, None)?,
        EvalMode::Reestimated => {
            let refit = fitted_or_error(&w_valid, &cohort.y, "validation")?;
            refit.linear_predictor(&w_valid, None)?
        }
    };
    let validation = evaluate_predictions(&lp_valid, &cohort.y)?;
    let curve = loess_calibration_curve(
        &lp_valid.probabilities(),
        &cohort.y,
        config.curve_points,
        config.loess_span,
    )?;

    Ok(LargeSampleReport {
        derivation,
        validation,
        curve,
    })
}

/// Decomposed Brier scores at one relative-measurement-variance level.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    /// Total measurement variance at validation relative to derivation, in
    /// percent. 100 means homogeneous measurement.
    pub mv_percent: f64,
    /// Model refit on the validation measurement itself.
    pub reestimated: BrierDecomposition,
    /// Model derived on one measurement and transported to the other: below
    /// 100% the noisy measurement derives and the exact one validates, above
    /// 100% the exact one derives and the noisy one validates.
    pub transported: BrierDecomposition,
}

/// Sweep the decomposed Brier score over relative measurement variance.
///
/// For each percentage `m`, the error variance is chosen so that the total
/// variance of the validation measurement is `m/100` times that of the
/// derivation measurement, with the exact measurement at one end:
/// below 100% the derivation side carries the error, above 100% the
/// validation side does.
pub fn brier_sweep(mv_percents: &[f64], n: usize, seed: u64) -> Result<Vec<SweepPoint>> {
    if mv_percents.is_empty() {
        return Err(Error::InvalidParameter("empty percentage grid".into()));
    }
    for &pct in mv_percents {
        if !pct.is_finite() || pct <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "relative measurement variance must be a positive percentage, got {pct}"
            )));
        }
    }
    let (spec, outcome) = large_sample_population();
    let var_x = spec.covariance()[(0, 0)];
    let mut rng = substream(seed, "brier-sweep", 0);
    let exact = [MeasurementModel::exact()];
    let cohort = sample_cohort(n, &spec, &outcome, &exact, &mut rng)?;

    let mut points = Vec::with_capacity(mv_percents.len());
    for &pct in mv_percents {
        let m = pct / 100.0;
        let (var_deriv, var_valid) = if m <= 1.0 {
            (var_x * (1.0 / m - 1.0), 0.0)
        } else {
            (0.0, var_x * (m - 1.0))
        };
        let w_deriv = cohort.remeasure(&[MeasurementModel::random(var_deriv)?], &mut rng)?;
        let w_valid = cohort.remeasure(&[MeasurementModel::random(var_valid)?], &mut rng)?;

        let transported_fit = fitted_or_error(&w_deriv, &cohort.y, "derivation")?;
        let lp_transp = transported_fit.linear_predictor(&w_valid, None)?;
        let transported = brier(&lp_transp.probabilities(), &cohort.y)?;

        let reest_fit = fitted_or_error(&w_valid, &cohort.y, "validation")?;
        let lp_reest = reest_fit.linear_predictor(&w_valid, None)?;
        let reestimated = brier(&lp_reest.probabilities(), &cohort.y)?;

        points.push(SweepPoint {
            mv_percent: pct,
            reestimated,
            transported,
        });
    }
    Ok(points)
}
