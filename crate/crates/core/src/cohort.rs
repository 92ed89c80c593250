//! Synthetic cohorts: correlated Gaussian predictors, logistic outcomes, and
//! measured-predictor views under a measurement model per predictor.

use crate::error::{Error, Result};
use crate::measurement::MeasurementModel;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use std::io;

/// The data-generating logistic model on exact predictor values.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeModel {
    /// Intercept on the log-odds scale.
    pub alpha: f64,
    /// Log-odds per predictor unit, one entry per predictor.
    pub beta: Vec<f64>,
}

impl OutcomeModel {
    pub fn new(alpha: f64, beta: Vec<f64>) -> Result<Self> {
        if beta.is_empty() {
            return Err(Error::InvalidParameter(
                "outcome model needs at least one predictor".into(),
            ));
        }
        Ok(Self { alpha, beta })
    }

    /// P(Y = 1 | x) for one row of exact predictor values.
    pub fn event_probability(&self, x_row: &[f64]) -> f64 {
        let lp = self.alpha
            + self
                .beta
                .iter()
                .zip(x_row)
                .map(|(b, x)| b * x)
                .sum::<f64>();
        1.0 / (1.0 + (-lp).exp())
    }
}

/// Distribution of the exact predictor vector: multivariate normal.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorSpec {
    mean: Vec<f64>,
    covariance: DMatrix<f64>,
}

impl PredictorSpec {
    pub fn new(mean: Vec<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let p = mean.len();
        if p == 0 {
            return Err(Error::InvalidParameter("empty predictor spec".into()));
        }
        if covariance.nrows() != p || covariance.ncols() != p {
            return Err(Error::DimensionMismatch(format!(
                "mean has {} entries but covariance is {}x{}",
                p,
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        let max_asym = (0..p)
            .flat_map(|i| (0..p).map(move |j| (i, j)))
            .map(|(i, j)| (covariance[(i, j)] - covariance[(j, i)]).abs())
            .fold(0.0, f64::max);
        if max_asym > 1e-12 {
            return Err(Error::InvalidParameter(
                "covariance matrix must be symmetric".into(),
            ));
        }
        Ok(Self { mean, covariance })
    }

    /// A single predictor with the given mean and variance.
    pub fn univariate(mean: f64, variance: f64) -> Result<Self> {
        if variance < 0.0 {
            return Err(Error::InvalidParameter("negative variance".into()));
        }
        Self::new(vec![mean], DMatrix::from_element(1, 1, variance))
    }

    /// `p` independent standard-normal predictors.
    pub fn standard_normal(p: usize) -> Result<Self> {
        Self::new(vec![0.0; p], DMatrix::identity(p, p))
    }

    /// Two unit-variance predictors with correlation `rho`.
    pub fn bivariate_unit(rho: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&rho) {
            return Err(Error::InvalidParameter(format!(
                "correlation {rho} outside [-1, 1]"
            )));
        }
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]);
        Self::new(vec![0.0, 0.0], cov)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }
}

/// One synthetic sample: outcomes, exact predictors, and measured predictors.
///
/// Predictor matrices are stored column-major: `x[j]` is the full column of
/// predictor `j`, so `x[j][i]` is the value for individual `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    pub y: Vec<bool>,
    pub x: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
    pub n_cases: usize,
    pub n_noncases: usize,
}

impl Cohort {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.len()
    }

    /// Produce a fresh measured view of the exact predictors under new
    /// measurement models, drawing independent errors per occasion. The
    /// outcome and exact values are untouched, so a single sample can carry
    /// several measurement views (for instance a derivation-style and a
    /// validation-style measurement of the same individuals).
    pub fn remeasure<R: Rng + ?Sized>(
        &self,
        models: &[MeasurementModel],
        rng: &mut R,
    ) -> Result<Vec<Vec<f64>>> {
        if models.len() != self.p() {
            return Err(Error::DimensionMismatch(format!(
                "{} measurement models for {} predictors",
                models.len(),
                self.p()
            )));
        }
        models
            .iter()
            .zip(&self.x)
            .map(|(m, col)| m.apply_vector(col, &self.y, rng))
            .collect()
    }

    /// Dump the cohort as delimited text with header `y,x1..xP,w1..wP`.
    pub fn write_delimited<W: io::Write>(&self, mut out: W) -> io::Result<()> {
        let p = self.p();
        let mut header = String::from("y");
        for j in 1..=p {
            header.push_str(&format!(",x{j}"));
        }
        for j in 1..=p {
            header.push_str(&format!(",w{j}"));
        }
        writeln!(out, "{header}")?;
        for i in 0..self.n() {
            let mut line = String::from(if self.y[i] { "1" } else { "0" });
            for col in &self.x {
                line.push_str(&format!(",{}", col[i]));
            }
            for col in &self.w {
                line.push_str(&format!(",{}", col[i]));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// Draw a cohort of size `n`.
///
/// Exact predictor rows come from the multivariate normal `spec` via the
/// lower-triangular Cholesky factor of its covariance; outcomes are Bernoulli
/// draws from the logistic `outcome` model on the exact values; measured
/// values apply `models[j]` to column `j` with noise independent across
/// predictors.
///
/// Draw order is fixed and part of the reproducibility contract: first the
/// predictor rows (one row of standard normals at a time), then one uniform
/// per outcome, then the measurement noise predictor by predictor.
pub fn sample_cohort<R: Rng + ?Sized>(
    n: usize,
    spec: &PredictorSpec,
    outcome: &OutcomeModel,
    models: &[MeasurementModel],
    rng: &mut R,
) -> Result<Cohort> {
    if n == 0 {
        return Err(Error::InvalidParameter("cohort size must be positive".into()));
    }
    let p = spec.dim();
    if outcome.beta.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficients for {} predictors",
            outcome.beta.len(),
            p
        )));
    }
    if models.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "{} measurement models for {} predictors",
            models.len(),
            p
        )));
    }
    let chol = spec
        .covariance
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l();

    let mut x: Vec<Vec<f64>> = vec![Vec::with_capacity(n); p];
    let mut z = vec![0.0f64; p];
    for _ in 0..n {
        for zj in z.iter_mut() {
            *zj = rng.sample(StandardNormal);
        }
        for j in 0..p {
            let mut v = spec.mean[j];
            for (k, zk) in z.iter().enumerate().take(j + 1) {
                v += l[(j, k)] * zk;
            }
            x[j].push(v);
        }
    }

    let mut y = Vec::with_capacity(n);
    let mut n_cases = 0usize;
    let mut row = vec![0.0f64; p];
    for i in 0..n {
        for j in 0..p {
            row[j] = x[j][i];
        }
        let pi = outcome.event_probability(&row);
        let yi = rng.random::<f64>() < pi;
        n_cases += usize::from(yi);
        y.push(yi);
    }

    let w = models
        .iter()
        .zip(&x)
        .map(|(m, col)| m.apply_vector(col, &y, rng))
        .collect::<Result<Vec<_>>>()?;

    Ok(Cohort {
        n_noncases: n - n_cases,
        y,
        x,
        w,
        n_cases,
    })
}

/// The populations used throughout the finite-sample experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PopulationKind {
    /// One standard-normal predictor with log-odds `ln 4` per unit.
    Single,
    /// Two unit-variance predictors with correlation `rho`.
    TwoPredictor,
}

/// Predictor distribution and outcome model for a standard population.
///
/// The two-predictor coefficients are 2.3 for `rho` 0 or 0.5 and 2.1 for
/// `rho` 0.9; other correlations are unsupported.
pub fn standard_population(
    kind: PopulationKind,
    rho: f64,
) -> Result<(PredictorSpec, OutcomeModel)> {
    match kind {
        PopulationKind::Single => Ok((
            PredictorSpec::standard_normal(1)?,
            OutcomeModel::new(0.0, vec![4.0f64.ln()])?,
        )),
        PopulationKind::TwoPredictor => {
            let beta = if rho == 0.0 || rho == 0.5 {
                2.3
            } else if rho == 0.9 {
                2.1
            } else {
                return Err(Error::InvalidParameter(format!(
                    "unsupported predictor correlation {rho}; use 0, 0.5 or 0.9"
                )));
            };
            Ok((
                PredictorSpec::bivariate_unit(rho)?,
                OutcomeModel::new(0.0, vec![beta, beta])?,
            ))
        }
    }
}
