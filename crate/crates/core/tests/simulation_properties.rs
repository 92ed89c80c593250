//! Cross-module invariants of the simulation pipeline exercised at realistic
//! sample sizes.

use heterosim_core::cohort::{sample_cohort, standard_population, PopulationKind};
use heterosim_core::glm::fit;
use heterosim_core::measurement::MeasurementModel;
use heterosim_core::metrics::brier;
use heterosim_core::rng::substream;
use heterosim_core::simgrid::{run_grid, run_scenario, thread_pool, Family, Scenario};

fn homogeneous_scenario(var_eps: f64, n: usize) -> Scenario {
    let m = MeasurementModel::random(var_eps).unwrap();
    Scenario {
        id: format!("homog-var{var_eps}"),
        family: Family::Single,
        rho: 0.0,
        deriv_models: vec![m],
        valid_models: vec![m],
        n_deriv: n,
        n_valid: n,
    }
}

#[test]
fn in_sample_calibration_term_vanishes_in_large_samples() {
    let (spec, outcome) = standard_population(PopulationKind::Single, 0.0).unwrap();
    let models = [MeasurementModel::random(1.0).unwrap()];
    let cohort = sample_cohort(
        1_000_000,
        &spec,
        &outcome,
        &models,
        &mut substream(101, "calterm", 0),
    )
    .unwrap();
    let model = fit(&cohort.w, &cohort.y, None).unwrap();
    assert!(model.converged);
    let lp = model.linear_predictor(&cohort.w, None).unwrap();
    let decomposition = brier(&lp.probabilities(), &cohort.y).unwrap();
    assert!(
        decomposition.calibration.abs() < 1e-3,
        "in-sample calibration term {}",
        decomposition.calibration
    );
}

#[test]
fn homogeneous_measurement_null_at_realistic_replication() {
    let pool = thread_pool(std::thread::available_parallelism().map_or(2, |n| n.get())).unwrap();
    let result = pool
        .install(|| run_scenario(&homogeneous_scenario(1.0, 2000), 1000, 314159))
        .unwrap();
    let s = &result.summary;
    assert!(
        (s.c_valid.mean - s.c_deriv.mean).abs() < 0.005,
        "derivation c {} vs validation c {}",
        s.c_deriv.mean,
        s.c_valid.mean
    );
    assert!(
        (0.98..=1.02).contains(&s.slope_median),
        "median slope {}",
        s.slope_median
    );
}

#[test]
fn grid_summaries_do_not_depend_on_worker_count() {
    let scenarios = vec![
        homogeneous_scenario(0.25, 500),
        homogeneous_scenario(4.0, 500),
    ];
    let one = run_grid(&scenarios, 25, 8, 1).unwrap();
    let eight = run_grid(&scenarios, 25, 8, 8).unwrap();
    assert_eq!(one, eight);
}
