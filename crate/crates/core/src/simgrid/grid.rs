//! Builders for the factorial scenario grid and the differential presets.

use super::{Family, Scenario, DEFAULT_SAMPLE_SIZE};
use crate::measurement::{ClassParams, MeasurementModel};

/// Random-error levels of the grid, expressed as standard deviations of the
/// measurement noise; models store the squared values as variances.
pub const GRID_NOISE_SD_LEVELS: [f64; 3] = [0.5, 1.0, 2.0];
/// Additive-shift levels applied to validation measurements.
pub const GRID_PSI_LEVELS: [f64; 2] = [0.0, 0.25];
/// Multiplicative-association levels applied to validation measurements.
pub const GRID_THETA_LEVELS: [f64; 3] = [0.5, 1.0, 2.0];
/// Predictor correlations for the two-predictor families.
pub const GRID_RHO_LEVELS: [f64; 3] = [0.0, 0.5, 0.9];

fn fmt_level(v: f64) -> String {
    format!("{v}")
}

fn random_sd(sd: f64) -> MeasurementModel {
    MeasurementModel::random(sd * sd).expect("grid noise level is non-negative")
}

fn systematic_sd(psi: f64, theta: f64, sd: f64) -> MeasurementModel {
    MeasurementModel::systematic(psi, theta, sd * sd).expect("grid parameters are finite")
}

/// The full factorial grid: 54 single-predictor scenarios, 162 scenarios for
/// each of the two two-predictor families, and 54 single-predictor
/// differential scenarios; 432 in total. Derivation measurements always
/// follow the random error model with the grid's noise levels.
pub fn build_grid() -> Vec<Scenario> {
    let mut all = build_family_grid(Family::Single);
    all.extend(build_family_grid(Family::TwoPredictorOneConsistent));
    all.extend(build_family_grid(Family::TwoPredictorBothHeterogeneous));
    all.extend(build_family_grid(Family::SingleDifferential));
    all
}

/// The scenarios of one family.
///
/// * `Single`: derivation noise x validation shift x association x noise
///   (3 x 2 x 3 x 3 = 54).
/// * Two-predictor families: the same factors crossed with the predictor
///   correlation (162 each). In the one-consistent family the first
///   predictor keeps its derivation measurement in both settings; in the
///   both-heterogeneous family the two predictors share the scenario's
///   parameters with independent noise draws.
/// * `SingleDifferential`: derivation noise x validation shift x per-class
///   validation noise for cases and non-cases (3 x 2 x 3 x 3 = 54), with the
///   association fixed at 1. Only the validation measurement is
///   differential; arbitrary differential structures remain expressible
///   through custom scenarios.
pub fn build_family_grid(family: Family) -> Vec<Scenario> {
    match family {
        Family::Single => single_grid(),
        Family::TwoPredictorOneConsistent | Family::TwoPredictorBothHeterogeneous => {
            two_predictor_grid(family)
        }
        Family::SingleDifferential => differential_grid(),
    }
}

fn single_grid() -> Vec<Scenario> {
    let mut scenarios = Vec::with_capacity(54);
    for &sd_d in &GRID_NOISE_SD_LEVELS {
        for &psi in &GRID_PSI_LEVELS {
            for &theta in &GRID_THETA_LEVELS {
                for &sd_v in &GRID_NOISE_SD_LEVELS {
                    scenarios.push(Scenario {
                        id: format!(
                            "single_dsd{}_psi{}_th{}_vsd{}",
                            fmt_level(sd_d),
                            fmt_level(psi),
                            fmt_level(theta),
                            fmt_level(sd_v)
                        ),
                        family: Family::Single,
                        rho: 0.0,
                        deriv_models: vec![random_sd(sd_d)],
                        valid_models: vec![systematic_sd(psi, theta, sd_v)],
                        n_deriv: DEFAULT_SAMPLE_SIZE,
                        n_valid: DEFAULT_SAMPLE_SIZE,
                    });
                }
            }
        }
    }
    scenarios
}

fn two_predictor_grid(family: Family) -> Vec<Scenario> {
    let mut scenarios = Vec::with_capacity(162);
    for &rho in &GRID_RHO_LEVELS {
        for &sd_d in &GRID_NOISE_SD_LEVELS {
            for &psi in &GRID_PSI_LEVELS {
                for &theta in &GRID_THETA_LEVELS {
                    for &sd_v in &GRID_NOISE_SD_LEVELS {
                        let heterogeneous = systematic_sd(psi, theta, sd_v);
                        let (deriv_models, valid_models) = match family {
                            Family::TwoPredictorOneConsistent => (
                                vec![random_sd(sd_d), random_sd(sd_d)],
                                vec![random_sd(sd_d), heterogeneous],
                            ),
                            _ => (
                                vec![random_sd(sd_d), random_sd(sd_d)],
                                vec![heterogeneous, heterogeneous],
                            ),
                        };
                        scenarios.push(Scenario {
                            id: format!(
                                "{}_rho{}_dsd{}_psi{}_th{}_vsd{}",
                                family.label(),
                                fmt_level(rho),
                                fmt_level(sd_d),
                                fmt_level(psi),
                                fmt_level(theta),
                                fmt_level(sd_v)
                            ),
                            family,
                            rho,
                            deriv_models,
                            valid_models,
                            n_deriv: DEFAULT_SAMPLE_SIZE,
                            n_valid: DEFAULT_SAMPLE_SIZE,
                        });
                    }
                }
            }
        }
    }
    scenarios
}

fn differential_grid() -> Vec<Scenario> {
    let mut scenarios = Vec::with_capacity(54);
    for &sd_d in &GRID_NOISE_SD_LEVELS {
        for &psi in &GRID_PSI_LEVELS {
            for &sd_case in &GRID_NOISE_SD_LEVELS {
                for &sd_noncase in &GRID_NOISE_SD_LEVELS {
                    let valid = MeasurementModel::differential(
                        ClassParams::new(psi, 1.0, sd_noncase * sd_noncase)
                            .expect("grid parameters are finite"),
                        ClassParams::new(psi, 1.0, sd_case * sd_case)
                            .expect("grid parameters are finite"),
                    );
                    scenarios.push(Scenario {
                        id: format!(
                            "singlediff_dsd{}_psi{}_s1v{}_s0v{}",
                            fmt_level(sd_d),
                            fmt_level(psi),
                            fmt_level(sd_case),
                            fmt_level(sd_noncase)
                        ),
                        family: Family::SingleDifferential,
                        rho: 0.0,
                        deriv_models: vec![random_sd(sd_d)],
                        valid_models: vec![valid],
                        n_deriv: DEFAULT_SAMPLE_SIZE,
                        n_valid: DEFAULT_SAMPLE_SIZE,
                    });
                }
            }
        }
    }
    scenarios
}

/// The four named differential scenarios: cases measured with noise standard
/// deviation 0.5 or 2.0 (variance 0.25 or 4.0) at one setting, every other
/// error variance 1.0.
pub fn differential_presets(n: usize) -> Vec<Scenario> {
    let default = ClassParams::new(0.0, 1.0, 1.0).expect("valid");
    let mut scenarios = Vec::with_capacity(4);
    for (site, at_derivation) in [("deriv", true), ("valid", false)] {
        for &sd_case in &[0.5, 2.0] {
            let diff = MeasurementModel::differential(
                default,
                ClassParams::new(0.0, 1.0, sd_case * sd_case).expect("valid"),
            );
            let uniform = MeasurementModel::random(1.0).expect("valid");
            let (deriv_models, valid_models) = if at_derivation {
                (vec![diff], vec![uniform])
            } else {
                (vec![uniform], vec![diff])
            };
            scenarios.push(Scenario {
                id: format!("diffpreset_{}_cases{}", site, fmt_level(sd_case)),
                family: Family::SingleDifferential,
                rho: 0.0,
                deriv_models,
                valid_models,
                n_deriv: n,
                n_valid: n,
            });
        }
    }
    scenarios
}
