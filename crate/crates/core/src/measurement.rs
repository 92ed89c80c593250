//! Linear measurement-error models for continuous predictors.
//!
//! A measured value relates to the exact value through
//! `w = psi + theta * x + eps`, with `eps ~ N(0, var_eps)` drawn
//! independently per measurement occasion. All three parameters may differ
//! between cases (`y = 1`) and non-cases (`y = 0`):
//!
//! * **random** error — `psi = 0`, `theta = 1`, one shared `var_eps`;
//! * **systematic** error — `psi != 0` and/or `theta != 1`, identical for
//!   both outcome classes;
//! * **differential** error — any parameter differs between classes.
//!
//! The same structures describe measurement *heterogeneity* across settings:
//! a derivation sample and a validation sample each carry their own model.

use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;

/// Measurement parameters for one outcome class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassParams {
    /// Additive shift, in predictor units.
    pub psi: f64,
    /// Multiplicative association between measurement and exact value.
    pub theta: f64,
    /// Variance of the random error component, in squared predictor units.
    pub var_eps: f64,
}

impl ClassParams {
    pub fn new(psi: f64, theta: f64, var_eps: f64) -> Result<Self> {
        if !psi.is_finite() || !theta.is_finite() || !var_eps.is_finite() {
            return Err(Error::InvalidParameter(
                "measurement parameters must be finite".into(),
            ));
        }
        if var_eps < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "error variance must be non-negative, got {var_eps}"
            )));
        }
        Ok(Self { psi, theta, var_eps })
    }

    fn sd_eps(&self) -> f64 {
        self.var_eps.sqrt()
    }
}

/// A measurement-error model: per-class parameters for non-cases and cases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementModel {
    params_noncase: ClassParams,
    params_case: ClassParams,
}

impl MeasurementModel {
    /// Random (classical) measurement error: `w = x + eps`.
    pub fn random(var_eps: f64) -> Result<Self> {
        let p = ClassParams::new(0.0, 1.0, var_eps)?;
        Ok(Self { params_noncase: p, params_case: p })
    }

    /// Systematic measurement error: `w = psi + theta * x + eps`, identical
    /// for cases and non-cases.
    pub fn systematic(psi: f64, theta: f64, var_eps: f64) -> Result<Self> {
        let p = ClassParams::new(psi, theta, var_eps)?;
        Ok(Self { params_noncase: p, params_case: p })
    }

    /// Differential measurement error: parameters chosen per outcome class.
    pub fn differential(params_noncase: ClassParams, params_case: ClassParams) -> Self {
        Self { params_noncase, params_case }
    }

    /// Exact measurement: `w = x`.
    pub fn exact() -> Self {
        Self::random(0.0).expect("zero variance is valid")
    }

    pub fn params_noncase(&self) -> &ClassParams {
        &self.params_noncase
    }

    pub fn params_case(&self) -> &ClassParams {
        &self.params_case
    }

    /// Parameters that apply to an individual with outcome `y`.
    pub fn params_for(&self, y: bool) -> &ClassParams {
        if y {
            &self.params_case
        } else {
            &self.params_noncase
        }
    }

    /// Any parameter differs between cases and non-cases.
    pub fn is_differential(&self) -> bool {
        self.params_case != self.params_noncase
    }

    /// Non-differential with `psi = 0` and `theta = 1`.
    pub fn is_random(&self) -> bool {
        !self.is_differential()
            && self.params_noncase.psi == 0.0
            && self.params_noncase.theta == 1.0
    }

    /// Non-differential with `psi != 0` or `theta != 1`.
    pub fn is_systematic(&self) -> bool {
        !self.is_differential() && !self.is_random()
    }

    /// Measure a single exact value `x` for an individual with outcome `y`.
    ///
    /// Always consumes exactly one standard-normal deviate from `rng`, so
    /// models that agree on parameters produce bit-identical outputs from the
    /// same stream regardless of how they were constructed.
    pub fn apply<R: Rng + ?Sized>(&self, x: f64, y: bool, rng: &mut R) -> f64 {
        let p = self.params_for(y);
        let z: f64 = rng.sample(StandardNormal);
        p.psi + p.theta * x + p.sd_eps() * z
    }

    /// Measure a vector of exact values elementwise, drawing independent
    /// noise per element in index order.
    pub fn apply_vector<R: Rng + ?Sized>(
        &self,
        x: &[f64],
        y: &[bool],
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} predictor values vs {} outcomes",
                x.len(),
                y.len()
            )));
        }
        Ok(x.iter()
            .zip(y)
            .map(|(&xi, &yi)| self.apply(xi, yi, rng))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn random_model_fields() {
        let m = MeasurementModel::random(1.0).unwrap();
        assert!(m.is_random());
        assert!(!m.is_systematic());
        assert!(!m.is_differential());
        for p in [m.params_noncase(), m.params_case()] {
            assert_eq!(p.psi, 0.0);
            assert_eq!(p.theta, 1.0);
            assert_eq!(p.var_eps, 1.0);
        }
    }

    #[test]
    fn zero_noise_random_model_is_exact() {
        let m = MeasurementModel::random(0.0).unwrap();
        let mut rng = substream(1, "exact", 0);
        assert_eq!(m.apply(1.23, false, &mut rng), 1.23);
        assert_eq!(m.apply(-0.5, true, &mut rng), -0.5);
    }

    #[test]
    fn negative_variance_rejected() {
        assert!(matches!(
            MeasurementModel::random(-0.1),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            MeasurementModel::systematic(0.0, 1.0, -1e-9),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn non_finite_parameters_rejected() {
        assert!(MeasurementModel::systematic(f64::NAN, 1.0, 0.0).is_err());
        assert!(MeasurementModel::systematic(0.0, f64::INFINITY, 0.0).is_err());
    }

    #[test]
    fn systematic_reduces_to_random() {
        let s = MeasurementModel::systematic(0.0, 1.0, 0.7).unwrap();
        let r = MeasurementModel::random(0.7).unwrap();
        assert_eq!(s, r);
        assert!(s.is_random());
        assert!(!s.is_systematic());
    }

    #[test]
    fn systematic_classification() {
        let m = MeasurementModel::systematic(0.25, 1.0, 0.5).unwrap();
        assert!(m.is_systematic());
        assert!(!m.is_random());
        assert!(!m.is_differential());
        let m = MeasurementModel::systematic(0.0, 2.0, 1.0).unwrap();
        assert!(m.is_systematic());
        assert_eq!(m.params_case().theta, 2.0);
    }

    #[test]
    fn differential_classification() {
        let m = MeasurementModel::differential(
            ClassParams::new(0.0, 1.0, 1.0).unwrap(),
            ClassParams::new(0.0, 1.0, 2.0).unwrap(),
        );
        assert!(m.is_differential());
        assert!(!m.is_random());
        assert!(!m.is_systematic());
    }

    #[test]
    fn deterministic_apply_with_zero_variance() {
        let m = MeasurementModel::systematic(0.25, 2.0, 0.0).unwrap();
        // forced by the linear structure with eps = 0, for either class and
        // any generator state
        for seed in 0..4 {
            let mut rng = substream(seed, "det", 0);
            assert_eq!(m.apply(0.5, false, &mut rng), 1.25);
            assert_eq!(m.apply(0.5, true, &mut rng), 1.25);
        }
    }

    #[test]
    fn reduction_chain_is_bit_identical() {
        // differential with equal class params == systematic == random, given
        // the same stream
        let p = ClassParams::new(0.0, 1.0, 0.8).unwrap();
        let diff = MeasurementModel::differential(p, p);
        let sys = MeasurementModel::systematic(0.0, 1.0, 0.8).unwrap();
        let ran = MeasurementModel::random(0.8).unwrap();
        let x: Vec<f64> = (0..64).map(|i| i as f64 * 0.1 - 3.0).collect();
        let y: Vec<bool> = (0..64).map(|i| i % 3 == 0).collect();
        let out_d = diff
            .apply_vector(&x, &y, &mut substream(5, "chain", 0))
            .unwrap();
        let out_s = sys
            .apply_vector(&x, &y, &mut substream(5, "chain", 0))
            .unwrap();
        let out_r = ran
            .apply_vector(&x, &y, &mut substream(5, "chain", 0))
            .unwrap();
        assert_eq!(out_d, out_s);
        assert_eq!(out_s, out_r);
    }

    #[test]
    fn apply_vector_matches_sequential_scalar_calls() {
        let m = MeasurementModel::random(1.5).unwrap();
        let x = [0.3, -1.2];
        let y = [true, false];
        let vec_out = m
            .apply_vector(&x, &y, &mut substream(9, "seq", 0))
            .unwrap();
        let mut rng = substream(9, "seq", 0);
        let scalar_out = [m.apply(x[0], y[0], &mut rng), m.apply(x[1], y[1], &mut rng)];
        assert_eq!(vec_out, scalar_out);
    }

    #[test]
    fn apply_vector_length_mismatch() {
        let m = MeasurementModel::exact();
        let err = m
            .apply_vector(&[1.0, 2.0], &[true], &mut substream(0, "len", 0))
            .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }

    #[test]
    fn zero_noise_identity_leaves_vector_unchanged() {
        let m = MeasurementModel::exact();
        let x: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
        let y = vec![false; 100];
        let w = m.apply_vector(&x, &y, &mut substream(3, "id", 0)).unwrap();
        assert_eq!(w, x);
    }

    #[test]
    fn random_error_is_mean_unbiased() {
        // sample mean of w - x over 1e6 draws within 4 standard errors of 0
        let m = MeasurementModel::random(1.0).unwrap();
        let mut rng = substream(11, "unbiased", 0);
        let n = 1_000_000usize;
        let mut sum = 0.0;
        for i in 0..n {
            let x = (i % 17) as f64 * 0.25;
            sum += m.apply(x, i % 2 == 0, &mut rng) - x;
        }
        let mean = sum / n as f64;
        let bound = 4.0 * (1.0f64 / n as f64).sqrt();
        assert!(mean.abs() < bound, "mean {mean} exceeds {bound}");
    }

    #[test]
    fn measured_variance_matches_model() {
        // Var(W | Y) = theta^2 Var(X) + var_eps, checked by Monte Carlo for a
        // non-differential model on standard-normal x
        let theta = 1.5;
        let var_eps = 0.6;
        let m = MeasurementModel::systematic(0.4, theta, var_eps).unwrap();
        let mut rng = substream(13, "variance", 0);
        let n = 400_000usize;
        let mut xs = Vec::with_capacity(n);
        let mut ws = Vec::with_capacity(n);
        for _ in 0..n {
            let x: f64 = rng.sample(StandardNormal);
            xs.push(x);
            ws.push(m.apply(x, false, &mut rng));
        }
        let mean_w = ws.iter().sum::<f64>() / n as f64;
        let var_w = ws.iter().map(|w| (w - mean_w).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let expect = theta * theta * 1.0 + var_eps;
        // MC standard error of a sample variance is roughly sqrt(2/n)*var
        let bound = 4.0 * (2.0 / n as f64).sqrt() * expect;
        assert!(
            (var_w - expect).abs() < bound,
            "var {var_w} vs {expect} (bound {bound})"
        );
        let _ = xs;
    }
}
