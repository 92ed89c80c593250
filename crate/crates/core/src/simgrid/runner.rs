//! Replicate execution and aggregation.

use super::{
    differential_presets, median, CompletedReplicate, GridSummary, MeanSd, ReplicateOutcome,
    ReplicateResult, Scenario,
};
use crate::cohort::sample_cohort;
use crate::error::{Error, Result};
use crate::glm::{calibration_in_the_large, fit, recalibrate, LinearPredictor};
use crate::metrics::{brier, concordance, PerformanceReport};
use crate::rng::substream;
use rayon::prelude::*;

/// Build a rayon pool with a fixed worker count. Results never depend on the
/// pool size; it only controls how many replicates run at once.
pub fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    if workers == 0 {
        return Err(Error::InvalidParameter("worker count must be positive".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("could not build thread pool: {e}")))
}

/// Compute every performance measure for predictions `lp` against outcomes
/// `y`: concordance on the linear predictor, decomposed Brier score on the
/// probabilities, calibration slope from the recalibration fit, and
/// calibration-in-the-large from the offset fit. Non-convergence of either
/// calibration fit is an error.
pub(crate) fn evaluate_predictions(lp: &LinearPredictor, y: &[bool]) -> Result<PerformanceReport> {
    let probs = lp.probabilities();
    let c_statistic = concordance(lp.values(), y)?;
    let decomposition = brier(&probs, y)?;
    let recal = recalibrate(lp, y)?;
    if !recal.converged {
        return Err(Error::DegenerateDesign(
            "recalibration fit did not converge".into(),
        ));
    }
    let citl_fit = calibration_in_the_large(lp, y)?;
    if !citl_fit.converged {
        return Err(Error::DegenerateDesign(
            "calibration-in-the-large fit did not converge".into(),
        ));
    }
    Ok(PerformanceReport {
        c_statistic,
        brier: decomposition,
        calib_slope: recal.beta_hat[0],
        citl: citl_fit.alpha_hat,
        n: y.len(),
        n_events: y.iter().filter(|&&v| v).count(),
    })
}

/// The raw products of one replicate before metric evaluation.
enum RawReplicate {
    Excluded(String),
    Done {
        deriv_fit: crate::glm::FittedModel,
        lp_deriv: LinearPredictor,
        y_deriv: Vec<bool>,
        lp_valid: LinearPredictor,
        y_valid: Vec<bool>,
    },
}

/// Sample both cohorts, fit the derivation model, and form the in-sample and
/// transported linear predictors. The replicate's random stream is a pure
/// function of `(master_seed, scenario.id, rep_index)`.
fn replicate_raw(scenario: &Scenario, rep_index: u64, master_seed: u64) -> Result<RawReplicate> {
    let mut rng = substream(master_seed, &scenario.id, rep_index);
    let (spec, outcome) = scenario.population()?;

    let deriv = sample_cohort(
        scenario.n_deriv,
        &spec,
        &outcome,
        &scenario.deriv_models,
        &mut rng,
    )?;
    let valid = sample_cohort(
        scenario.n_valid,
        &spec,
        &outcome,
        &scenario.valid_models,
        &mut rng,
    )?;

    let deriv_fit = match fit(&deriv.w, &deriv.y, None) {
        Ok(m) => m,
        Err(Error::DegenerateOutcome) => {
            return Ok(RawReplicate::Excluded(
                "derivation sample contains a single class".into(),
            ))
        }
        Err(e) => return Err(e),
    };
    if !deriv_fit.converged {
        return Ok(RawReplicate::Excluded("derivation fit did not converge".into()));
    }

    let lp_deriv = deriv_fit.linear_predictor(&deriv.w, None)?;
    let lp_valid = deriv_fit.linear_predictor(&valid.w, None)?;
    Ok(RawReplicate::Done {
        deriv_fit,
        lp_deriv,
        y_deriv: deriv.y,
        lp_valid,
        y_valid: valid.y,
    })
}

/// Run one replicate of a scenario: sample a derivation cohort, fit the
/// model on its measured predictors, evaluate in-sample, then transport the
/// fit to an independently sampled and independently measured validation
/// cohort and evaluate out-of-sample.
///
/// Results are bit-identical across runs of the same
/// `(master_seed, scenario.id, rep_index)` and independent of scheduling.
pub fn run_replicate(
    scenario: &Scenario,
    rep_index: u64,
    master_seed: u64,
) -> Result<ReplicateResult> {
    let excluded = |reason: String| ReplicateResult {
        rep_index,
        outcome: ReplicateOutcome::Excluded { reason },
    };
    let (deriv_fit, lp_deriv, y_deriv, lp_valid, y_valid) =
        match replicate_raw(scenario, rep_index, master_seed)? {
            RawReplicate::Excluded(reason) => return Ok(excluded(reason)),
            RawReplicate::Done {
                deriv_fit,
                lp_deriv,
                y_deriv,
                lp_valid,
                y_valid,
            } => (deriv_fit, lp_deriv, y_deriv, lp_valid, y_valid),
        };

    let in_sample = match evaluate_predictions(&lp_deriv, &y_deriv) {
        Ok(r) => r,
        Err(reason) => return Ok(excluded(format!("in-sample evaluation: {reason}"))),
    };
    let out_of_sample = match evaluate_predictions(&lp_valid, &y_valid) {
        Ok(r) => r,
        Err(reason) => return Ok(excluded(format!("out-of-sample evaluation: {reason}"))),
    };

    Ok(ReplicateResult {
        rep_index,
        outcome: ReplicateOutcome::Completed(Box::new(CompletedReplicate {
            in_sample,
            out_of_sample,
            deriv_fit,
        })),
    })
}

/// The validation-side loess calibration curve of one replicate, recomputed
/// from its deterministic stream. `None` when the replicate is excluded.
pub fn replicate_curve(
    scenario: &Scenario,
    rep_index: u64,
    master_seed: u64,
    grid_points: usize,
    span: f64,
) -> Result<Option<Vec<crate::metrics::CurvePoint>>> {
    match replicate_raw(scenario, rep_index, master_seed)? {
        RawReplicate::Excluded(_) => Ok(None),
        RawReplicate::Done {
            lp_valid, y_valid, ..
        } => Ok(Some(crate::metrics::loess_calibration_curve(
            &lp_valid.probabilities(),
            &y_valid,
            grid_points,
            span,
        )?)),
    }
}

/// A scenario's replicate-level results together with their summary.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub scenario: Scenario,
    pub replicates: Vec<ReplicateResult>,
    pub summary: GridSummary,
}

/// Run all replicates of one scenario on the current rayon pool.
pub fn run_scenario(scenario: &Scenario, reps: u64, master_seed: u64) -> Result<ScenarioResult> {
    if reps == 0 {
        return Err(Error::InvalidParameter("replicate count must be positive".into()));
    }
    scenario.validate()?;
    let replicates: Result<Vec<ReplicateResult>> = (0..reps)
        .into_par_iter()
        .map(|rep| run_replicate(scenario, rep, master_seed))
        .collect();
    let replicates = replicates?;
    let summary = summarize(&scenario.id, &replicates);
    Ok(ScenarioResult {
        scenario: scenario.clone(),
        replicates,
        summary,
    })
}

/// Aggregate replicate-level results into a [`GridSummary`]. Excluded
/// replicates count toward `n_excluded` and contribute to no statistic.
pub fn summarize(scenario_id: &str, replicates: &[ReplicateResult]) -> GridSummary {
    let completed: Vec<&CompletedReplicate> =
        replicates.iter().filter_map(ReplicateResult::completed).collect();
    let collect = |f: &dyn Fn(&CompletedReplicate) -> f64| -> Vec<f64> {
        completed.iter().map(|c| f(c)).collect()
    };
    let slopes = collect(&|c| c.out_of_sample.calib_slope);
    GridSummary {
        scenario_id: scenario_id.to_string(),
        c_deriv: MeanSd::from_values(&collect(&|c| c.in_sample.c_statistic)),
        c_valid: MeanSd::from_values(&collect(&|c| c.out_of_sample.c_statistic)),
        slope_median: median(&slopes),
        slope_sd: MeanSd::from_values(&slopes).sd,
        citl: MeanSd::from_values(&collect(&|c| c.out_of_sample.citl)),
        brier_deriv: MeanSd::from_values(&collect(&|c| c.in_sample.brier.total)),
        brier_valid: MeanSd::from_values(&collect(&|c| c.out_of_sample.brier.total)),
        n_replicates: replicates.len(),
        n_excluded: replicates.len() - completed.len(),
    }
}

/// Run every scenario for `reps` replicates on `workers` threads and return
/// one summary per scenario, in input order. Output is a pure function of
/// `(scenarios, reps, master_seed)`.
pub fn run_grid(
    scenarios: &[Scenario],
    reps: u64,
    master_seed: u64,
    workers: usize,
) -> Result<Vec<GridSummary>> {
    let pool = thread_pool(workers)?;
    scenarios
        .iter()
        .map(|s| Ok(pool.install(|| run_scenario(s, reps, master_seed))?.summary))
        .collect()
}

/// Run the four differential presets and return their summaries.
pub fn run_differential_presets(
    reps: u64,
    master_seed: u64,
    workers: usize,
    n: usize,
) -> Result<Vec<GridSummary>> {
    run_grid(&differential_presets(n), reps, master_seed, workers)
}
