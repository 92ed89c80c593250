//! Maximum-likelihood binary logistic regression.
//!
//! One Newton–Raphson/IRLS solver backs everything: derivation fits,
//! recalibration models (observed outcomes regressed on a transported linear
//! predictor), and calibration-in-the-large (intercept-only fit with the
//! linear predictor as a fixed offset).

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

const MAX_ITERATIONS: usize = 50;
const MAX_HALVINGS: usize = 10;
const SCORE_TOL: f64 = 1e-10;
const PARAM_TOL: f64 = 1e-10;
const SEPARATION_BOUND: f64 = 25.0;
const PROB_CLAMP: f64 = 1e-12;

/// Result of a logistic maximum-likelihood fit.
///
/// `converged` is false when the score equations could not be driven to
/// tolerance within the iteration budget, or when a coefficient ran past the
/// separation bound while the score was still non-vanishing. Non-converged
/// fits keep their last iterate so callers can inspect and report them, never
/// silently use them.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub alpha_hat: f64,
    pub beta_hat: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Infinity norm of the score vector at the final iterate.
    pub max_abs_score: f64,
}

impl FittedModel {
    /// `alpha_hat + beta_hat . x_i (+ offset_i)` for each row of `design`.
    pub fn linear_predictor(
        &self,
        design: &[Vec<f64>],
        offset: Option<&[f64]>,
    ) -> Result<LinearPredictor> {
        let eta = self.eta(design, offset)?;
        LinearPredictor::new(eta)
    }

    fn eta(&self, design: &[Vec<f64>], offset: Option<&[f64]>) -> Result<Vec<f64>> {
        if design.len() != self.beta_hat.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} design columns for {} coefficients",
                design.len(),
                self.beta_hat.len()
            )));
        }
        let Some(n) = design
            .first()
            .map(Vec::len)
            .or_else(|| offset.map(<[f64]>::len))
        else {
            return Err(Error::InvalidParameter(
                "intercept-only predictions need an offset to fix the row count".into(),
            ));
        };
        if let Some(off) = offset {
            if off.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "offset length {} for {} rows",
                    off.len(),
                    n
                )));
            }
        }
        let mut eta = vec![self.alpha_hat; n];
        for (b, col) in self.beta_hat.iter().zip(design) {
            if col.len() != n {
                return Err(Error::DimensionMismatch(
                    "design columns differ in length".into(),
                ));
            }
            for (e, x) in eta.iter_mut().zip(col) {
                *e += b * x;
            }
        }
        if let Some(off) = offset {
            for (e, o) in eta.iter_mut().zip(off) {
                *e += o;
            }
        }
        Ok(eta)
    }
}

/// A vector of log-odds values.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPredictor {
    values: Vec<f64>,
}

impl LinearPredictor {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "linear predictor entries must be finite".into(),
            ));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Event probabilities `1 / (1 + exp(-lp))`, clamped away from 0 and 1.
    pub fn probabilities(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|&e| inverse_logit(e).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP))
            .collect()
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

pub fn inverse_logit(eta: f64) -> f64 {
    1.0 / (1.0 + (-eta).exp())
}

/// log(1 + e^eta) without overflow.
fn log1p_exp(eta: f64) -> f64 {
    if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

fn bernoulli_loglik(eta: &[f64], y: &[bool]) -> f64 {
    eta.iter()
        .zip(y)
        .map(|(&e, &yi)| if yi { e - log1p_exp(e) } else { -log1p_exp(e) })
        .sum()
}

/// Fit a logistic regression of `y` on the columns of `design` by maximum
/// likelihood. An intercept is always included; `offset` adds a fixed term to
/// the linear predictor.
///
/// `design` is column-major: `design[j]` holds predictor `j` for all rows.
/// Requires more rows than columns and both outcome classes present.
pub fn fit(design: &[Vec<f64>], y: &[bool], offset: Option<&[f64]>) -> Result<FittedModel> {
    let n = y.len();
    let p = design.len();
    if n <= p {
        return Err(Error::InvalidParameter(format!(
            "{n} rows cannot identify {p} coefficients plus intercept"
        )));
    }
    for col in design {
        if col.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "design column of length {} for {} outcomes",
                col.len(),
                n
            )));
        }
    }
    if let Some(off) = offset {
        if off.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "offset length {} for {} outcomes",
                off.len(),
                n
            )));
        }
    }
    let n_cases = y.iter().filter(|&&v| v).count();
    if n_cases == 0 || n_cases == n {
        return Err(Error::DegenerateOutcome);
    }

    let dim = p + 1;
    let mut params = DVector::<f64>::zeros(dim);
    let mean_y = n_cases as f64 / n as f64;
    params[0] = logit(mean_y) - offset.map_or(0.0, |o| o.iter().sum::<f64>() / n as f64);

    let eta_of = |theta: &DVector<f64>| -> Vec<f64> {
        let mut eta = vec![theta[0]; n];
        for j in 0..p {
            let b = theta[j + 1];
            for (e, x) in eta.iter_mut().zip(&design[j]) {
                *e += b * x;
            }
        }
        if let Some(off) = offset {
            for (e, o) in eta.iter_mut().zip(off) {
                *e += o;
            }
        }
        eta
    };
    let score_of = |eta: &[f64]| -> DVector<f64> {
        let mut score = DVector::<f64>::zeros(dim);
        for i in 0..n {
            let r = if y[i] { 1.0 - inverse_logit(eta[i]) } else { -inverse_logit(eta[i]) };
            score[0] += r;
            for j in 0..p {
                score[j + 1] += r * design[j][i];
            }
        }
        score
    };

    let mut converged = false;
    let mut iterations = 0;
    let mut max_abs_score = f64::INFINITY;

    for iter in 0..MAX_ITERATIONS {
        iterations = iter;
        let eta = eta_of(&params);
        let loglik = bernoulli_loglik(&eta, y);

        // score vector and expected information
        let mut score = DVector::<f64>::zeros(dim);
        let mut info = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..n {
            let pi = inverse_logit(eta[i]);
            let r = if y[i] { 1.0 - pi } else { -pi };
            let wi = pi * (1.0 - pi);
            score[0] += r;
            info[(0, 0)] += wi;
            for j in 0..p {
                let xj = design[j][i];
                score[j + 1] += r * xj;
                info[(0, j + 1)] += wi * xj;
                for k in j..p {
                    info[(j + 1, k + 1)] += wi * xj * design[k][i];
                }
            }
        }
        for j in 0..dim {
            for k in 0..j {
                info[(j, k)] = info[(k, j)];
            }
        }

        max_abs_score = score.amax();
        if max_abs_score < SCORE_TOL {
            converged = true;
            break;
        }
        if params
            .iter()
            .skip(1)
            .any(|b| b.abs() > SEPARATION_BOUND)
        {
            // monotone likelihood: coefficients diverge while the score
            // stays non-vanishing
            break;
        }

        let Some(chol) = info.clone().cholesky() else {
            break;
        };
        let delta = chol.solve(&score);
        if delta.amax() < PARAM_TOL {
            // at the optimum to machine precision; likelihood differences
            // along such a step are rounding noise
            params += &delta;
            max_abs_score = score_of(&eta_of(&params)).amax();
            iterations = iter + 1;
            converged = true;
            break;
        }

        // allow apparent decreases at the level of summation rounding noise,
        // which dominate true likelihood changes in the endgame
        let slack = 1e-11 * (1.0 + loglik.abs());
        let mut step = delta;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let candidate = &params + &step;
            if bernoulli_loglik(&eta_of(&candidate), y) >= loglik - slack {
                params = candidate;
                accepted = true;
                break;
            }
            step /= 2.0;
        }
        if !accepted {
            break;
        }
        if step.amax() < PARAM_TOL {
            max_abs_score = score_of(&eta_of(&params)).amax();
            iterations = iter + 1;
            converged = true;
            break;
        }
    }

    Ok(FittedModel {
        alpha_hat: params[0],
        beta_hat: params.iter().skip(1).copied().collect(),
        converged,
        iterations,
        max_abs_score,
    })
}

/// Predicted event probabilities for `model` on `design` rows, clamped to
/// `[1e-12, 1 - 1e-12]`.
pub fn predict_prob(
    model: &FittedModel,
    design: &[Vec<f64>],
    offset: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let eta = model.eta(design, offset)?;
    Ok(eta
        .iter()
        .map(|&e| inverse_logit(e).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP))
        .collect())
}

/// Recalibration model: fit `logit(y) = a + b * lp` by maximum likelihood.
///
/// The returned model carries the recalibration intercept in `alpha_hat` and
/// the calibration slope in `beta_hat[0]`. A slope of 1 with intercept 0
/// means the transported predictions are already calibrated.
pub fn recalibrate(lp: &LinearPredictor, y: &[bool]) -> Result<FittedModel> {
    let vals = lp.values();
    let spread = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - vals.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(spread > 0.0) {
        return Err(Error::DegenerateDesign(
            "linear predictor is constant; calibration slope undefined".into(),
        ));
    }
    let design = [lp.values().to_vec()];
    fit(&design, y, None)
}

/// Calibration-in-the-large: the intercept of an intercept-only fit with the
/// linear predictor as a fixed offset (the recalibration intercept given a
/// slope of 1). The value is `alpha_hat` of the returned model.
pub fn calibration_in_the_large(lp: &LinearPredictor, y: &[bool]) -> Result<FittedModel> {
    fit(&[], y, Some(lp.values()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::{sample_cohort, standard_population, PopulationKind};
    use crate::measurement::MeasurementModel;
    use crate::rng::substream;

    fn noisy_single_cohort(seed: u64, n: usize) -> (Vec<Vec<f64>>, Vec<bool>) {
        let (spec, outcome) = standard_population(PopulationKind::Single, 0.0).unwrap();
        let models = [MeasurementModel::random(1.0).unwrap()];
        let c = sample_cohort(n, &spec, &outcome, &models, &mut substream(seed, "glm", 0)).unwrap();
        (c.w, c.y)
    }

    #[test]
    fn intercept_only_fit_is_logit_of_event_rate() {
        let y: Vec<bool> = (0..400).map(|i| i % 4 == 0).collect();
        let m = fit(&[], &y, None).unwrap();
        assert!(m.converged);
        assert!((m.alpha_hat - (-1.0986122886681098)).abs() < 1e-9);
        assert!(m.beta_hat.is_empty());
    }

    #[test]
    fn single_class_outcome_is_degenerate() {
        let y = vec![true; 50];
        assert_eq!(fit(&[], &y, None).unwrap_err(), Error::DegenerateOutcome);
    }

    #[test]
    fn too_few_rows() {
        let y = vec![true, false];
        let design = vec![vec![1.0, 2.0], vec![0.5, 0.1]];
        assert!(fit(&design, &y, None).is_err());
    }

    #[test]
    fn perfect_separation_is_flagged() {
        let x: Vec<f64> = (0..40).map(|i| i as f64 - 19.5).collect();
        let y: Vec<bool> = x.iter().map(|&v| v > 0.0).collect();
        let m = fit(&[x], &y, None).unwrap();
        assert!(!m.converged);
    }

    #[test]
    fn score_equations_hold_at_convergence() {
        let (design, y) = noisy_single_cohort(61, 800);
        let m = fit(&design, &y, None).unwrap();
        assert!(m.converged);
        let probs = predict_prob(&m, &design, None).unwrap();
        let n = y.len() as f64;
        let s0: f64 = probs
            .iter()
            .zip(&y)
            .map(|(&p, &yi)| if yi { 1.0 - p } else { -p })
            .sum();
        let s1: f64 = probs
            .iter()
            .zip(&y)
            .zip(&design[0])
            .map(|((&p, &yi), &x)| (if yi { 1.0 - p } else { -p }) * x)
            .sum();
        assert!(s0.abs() < 1e-8 * n, "score {s0}");
        assert!(s1.abs() < 1e-8 * n, "score {s1}");
    }

    #[test]
    fn fitted_loglik_dominates_intercept_only() {
        let (design, y) = noisy_single_cohort(62, 500);
        let full = fit(&design, &y, None).unwrap();
        let null = fit(&[], &y, None).unwrap();
        let zeros = vec![0.0; y.len()];
        let ll_full = bernoulli_loglik(&full.eta(&design, None).unwrap(), &y);
        let ll_null = bernoulli_loglik(&null.eta(&[], Some(&zeros)).unwrap(), &y);
        assert!(ll_full > ll_null);
    }

    #[test]
    fn predict_prob_contract() {
        let m = FittedModel {
            alpha_hat: 0.0,
            beta_hat: vec![0.0],
            converged: true,
            iterations: 0,
            max_abs_score: 0.0,
        };
        let design = vec![vec![1.0, -3.0, 8.0]];
        assert_eq!(predict_prob(&m, &design, None).unwrap(), vec![0.5; 3]);

        let m = FittedModel {
            alpha_hat: logit(0.25),
            beta_hat: vec![],
            converged: true,
            iterations: 0,
            max_abs_score: 0.0,
        };
        let p = predict_prob(&m, &[], Some(&[0.0, 0.0])).unwrap();
        assert!((p[0] - 0.25).abs() < 1e-15);

        let m = FittedModel {
            alpha_hat: 40.0,
            beta_hat: vec![],
            converged: true,
            iterations: 0,
            max_abs_score: 0.0,
        };
        let p = predict_prob(&m, &[], Some(&[0.0])).unwrap();
        assert_eq!(p[0], 1.0 - 1e-12);
    }

    #[test]
    fn in_sample_recalibration_is_identity() {
        let (design, y) = noisy_single_cohort(63, 1000);
        let m = fit(&design, &y, None).unwrap();
        let lp = m.linear_predictor(&design, None).unwrap();
        let recal = recalibrate(&lp, &y).unwrap();
        assert!(recal.converged);
        assert!(recal.alpha_hat.abs() < 1e-8, "a = {}", recal.alpha_hat);
        assert!(
            (recal.beta_hat[0] - 1.0).abs() < 1e-8,
            "b = {}",
            recal.beta_hat[0]
        );
    }

    #[test]
    fn halved_lp_recalibrates_to_slope_two() {
        let (design, y) = noisy_single_cohort(64, 1000);
        let m = fit(&design, &y, None).unwrap();
        let lp = m.linear_predictor(&design, None).unwrap();
        let halved =
            LinearPredictor::new(lp.values().iter().map(|v| v / 2.0).collect()).unwrap();
        let recal = recalibrate(&halved, &y).unwrap();
        assert!((recal.beta_hat[0] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn citl_identities() {
        let (design, y) = noisy_single_cohort(65, 1000);
        let m = fit(&design, &y, None).unwrap();
        let lp = m.linear_predictor(&design, None).unwrap();
        let citl = calibration_in_the_large(&lp, &y).unwrap();
        assert!(citl.converged);
        assert!(citl.alpha_hat.abs() < 1e-8);

        // shifting the linear predictor by c moves the intercept to -c
        let c = 0.37;
        let shifted =
            LinearPredictor::new(lp.values().iter().map(|v| v + c).collect()).unwrap();
        let citl_shifted = calibration_in_the_large(&shifted, &y).unwrap();
        assert!((citl_shifted.alpha_hat - (citl.alpha_hat - c)).abs() < 1e-8);
    }

    #[test]
    fn constant_lp_is_degenerate() {
        let lp = LinearPredictor::new(vec![0.3; 100]).unwrap();
        let y: Vec<bool> = (0..100).map(|i| i % 2 == 0).collect();
        assert!(matches!(
            recalibrate(&lp, &y),
            Err(Error::DegenerateDesign(_))
        ));
    }

    /// Gradient-ascent maximizer of the same log-likelihood, used as an
    /// independent oracle for the IRLS solver. Backtracking line search on
    /// the exact gradient; no Hessian, no IRLS machinery.
    fn gradient_ascent_mle(design: &[Vec<f64>], y: &[bool]) -> Vec<f64> {
        let n = y.len();
        let p = design.len();
        let ll = |theta: &[f64]| -> f64 {
            let mut total = 0.0;
            for i in 0..n {
                let mut eta = theta[0];
                for j in 0..p {
                    eta += theta[j + 1] * design[j][i];
                }
                total += if y[i] { eta - log1p_exp(eta) } else { -log1p_exp(eta) };
            }
            total
        };
        let grad = |theta: &[f64]| -> Vec<f64> {
            let mut g = vec![0.0; p + 1];
            for i in 0..n {
                let mut eta = theta[0];
                for j in 0..p {
                    eta += theta[j + 1] * design[j][i];
                }
                let r = if y[i] { 1.0 - inverse_logit(eta) } else { -inverse_logit(eta) };
                g[0] += r;
                for j in 0..p {
                    g[j + 1] += r * design[j][i];
                }
            }
            g
        };
        let mut theta = vec![0.0; p + 1];
        let mut step = 1.0 / n as f64;
        for _ in 0..200_000 {
            let g = grad(&theta);
            if g.iter().all(|v| v.abs() < 1e-11) {
                break;
            }
            let base = ll(&theta);
            let mut s = step * 4.0;
            loop {
                let cand: Vec<f64> =
                    theta.iter().zip(&g).map(|(t, gi)| t + s * gi).collect();
                if ll(&cand) > base {
                    theta = cand;
                    step = s;
                    break;
                }
                s /= 2.0;
                if s < 1e-18 {
                    return theta;
                }
            }
        }
        theta
    }

    #[test]
    fn irls_matches_gradient_ascent_oracle() {
        for seed in 0..3 {
            let (design, y) = noisy_single_cohort(70 + seed, 200);
            let m = fit(&design, &y, None).unwrap();
            assert!(m.converged);
            let oracle = gradient_ascent_mle(&design, &y);
            assert!(
                (m.alpha_hat - oracle[0]).abs() < 1e-6,
                "alpha {} vs {}",
                m.alpha_hat,
                oracle[0]
            );
            assert!(
                (m.beta_hat[0] - oracle[1]).abs() < 1e-6,
                "beta {} vs {}",
                m.beta_hat[0],
                oracle[1]
            );
        }
    }
}
