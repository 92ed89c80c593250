//! Predictive-performance measures: concordance, binormal AUC approximations
//! and their measurement-error transforms, the decomposed Brier score, and
//! loess calibration curves.

use crate::error::{Error, Result};
use crate::measurement::MeasurementModel;

/// Standard normal cumulative distribution function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Per-class sample moments of a score or predictor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupStats {
    pub mean_case: f64,
    pub mean_noncase: f64,
    /// Sample variance (n-1 denominator) among cases.
    pub var_case: f64,
    /// Sample variance (n-1 denominator) among non-cases.
    pub var_noncase: f64,
}

impl GroupStats {
    pub fn new(mean_case: f64, mean_noncase: f64, var_case: f64, var_noncase: f64) -> Result<Self> {
        if var_case < 0.0 || var_noncase < 0.0 {
            return Err(Error::InvalidParameter("negative group variance".into()));
        }
        Ok(Self {
            mean_case,
            mean_noncase,
            var_case,
            var_noncase,
        })
    }

    /// Group means and n-1 variances of `values` split by outcome.
    /// Needs at least two observations in each class.
    pub fn from_sample(values: &[f64], y: &[bool]) -> Result<Self> {
        if values.len() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values vs {} outcomes",
                values.len(),
                y.len()
            )));
        }
        let mut n = [0usize; 2];
        let mut sum = [0.0f64; 2];
        for (&v, &yi) in values.iter().zip(y) {
            let g = usize::from(yi);
            n[g] += 1;
            sum[g] += v;
        }
        if n[0] < 2 || n[1] < 2 {
            return Err(Error::UndefinedMetric(
                "group statistics need at least two observations per class".into(),
            ));
        }
        let mean = [sum[0] / n[0] as f64, sum[1] / n[1] as f64];
        let mut ss = [0.0f64; 2];
        for (&v, &yi) in values.iter().zip(y) {
            let g = usize::from(yi);
            let d = v - mean[g];
            ss[g] += d * d;
        }
        Self::new(
            mean[1],
            mean[0],
            ss[1] / (n[1] as f64 - 1.0),
            ss[0] / (n[0] as f64 - 1.0),
        )
    }

    /// Moments of the measured value `w` implied by applying `model` to a
    /// predictor with these exact-value moments: per class,
    /// `mean_w = psi + theta * mean_x` and `var_w = theta^2 var_x + var_eps`.
    pub fn under_measurement(&self, model: &MeasurementModel) -> Self {
        let c = model.params_case();
        let nc = model.params_noncase();
        Self {
            mean_case: c.psi + c.theta * self.mean_case,
            mean_noncase: nc.psi + nc.theta * self.mean_noncase,
            var_case: c.theta * c.theta * self.var_case + c.var_eps,
            var_noncase: nc.theta * nc.theta * self.var_noncase + nc.var_eps,
        }
    }
}

/// Empirical concordance (c-statistic): the fraction of case/non-case pairs
/// in which the case scores higher, ties counting one half. Computed by a
/// rank method in O(n log n); exactly equal to exhaustive pair enumeration.
pub fn concordance(scores: &[f64], y: &[bool]) -> Result<f64> {
    if scores.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} scores vs {} outcomes",
            scores.len(),
            y.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidParameter("scores must not be NaN".into()));
    }
    let n = y.len();
    let n_cases = y.iter().filter(|&&v| v).count();
    if n_cases == 0 || n_cases == n {
        return Err(Error::UndefinedMetric(
            "concordance needs both cases and non-cases".into(),
        ));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let mut case_rank_sum = 0.0f64;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based midrank of the tie block [i, j]
        let midrank = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if y[idx] {
                case_rank_sum += midrank;
            }
        }
        i = j + 1;
    }
    let n1 = n_cases as f64;
    let n0 = (n - n_cases) as f64;
    Ok((case_rank_sum - n1 * (n1 + 1.0) / 2.0) / (n1 * n0))
}

/// Binormal approximation of the c-statistic from group moments:
/// `Phi((mean_case - mean_noncase) / sqrt(var_case + var_noncase))`.
pub fn binormal_auc(stats: &GroupStats) -> Result<f64> {
    let total_var = stats.var_case + stats.var_noncase;
    if total_var <= 0.0 {
        return Err(Error::UndefinedMetric(
            "binormal AUC needs positive total variance".into(),
        ));
    }
    Ok(normal_cdf(
        (stats.mean_case - stats.mean_noncase) / total_var.sqrt(),
    ))
}

/// Change in the binormal c-statistic when the exact predictor is replaced by
/// a measurement under `model`: `AUC_w - AUC_x`. Negative values mean the
/// measured predictor discriminates less.
pub fn delta_auc(stats_x: &GroupStats, model: &MeasurementModel) -> Result<f64> {
    let auc_x = binormal_auc(stats_x)?;
    let auc_w = binormal_auc(&stats_x.under_measurement(model))?;
    Ok(auc_w - auc_x)
}

/// The empirical Brier score split into its calibration and refinement
/// components: per observation,
/// `(y - p)^2 = (y - p)(1 - 2p) + p(1 - p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrierDecomposition {
    /// Mean squared distance between predictions and outcomes.
    pub total: f64,
    /// Mean of `(y - p)(1 - 2p)`; zero in expectation under perfect
    /// calibration.
    pub calibration: f64,
    /// Mean of `p(1 - p)`; the expected Brier score of calibrated
    /// predictions. Always within `[0, 0.25]`.
    pub refinement: f64,
}

/// Decomposed Brier score of predicted probabilities against binary outcomes.
pub fn brier(probs: &[f64], y: &[bool]) -> Result<BrierDecomposition> {
    if probs.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} probabilities vs {} outcomes",
            probs.len(),
            y.len()
        )));
    }
    if probs.is_empty() {
        return Err(Error::InvalidParameter("empty prediction vector".into()));
    }
    if probs.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
        return Err(Error::InvalidParameter(
            "probabilities must lie strictly inside (0, 1)".into(),
        ));
    }
    let n = probs.len() as f64;
    let mut total = 0.0;
    let mut calibration = 0.0;
    let mut refinement = 0.0;
    for (&p, &yi) in probs.iter().zip(y) {
        let yf = if yi { 1.0 } else { 0.0 };
        let r = yf - p;
        total += r * r;
        calibration += r * (1.0 - 2.0 * p);
        refinement += p * (1.0 - p);
    }
    Ok(BrierDecomposition {
        total: total / n,
        calibration: calibration / n,
        refinement: refinement / n,
    })
}

/// Expected Brier-score change under perfect calibration when predictions
/// `probs_x` are replaced by `probs_w`: the difference of mean refinement
/// terms. Positive values mean the `w`-based predictions are less accurate.
pub fn expected_delta_bs(probs_w: &[f64], probs_x: &[f64]) -> Result<f64> {
    if probs_w.len() != probs_x.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {} probabilities",
            probs_w.len(),
            probs_x.len()
        )));
    }
    if probs_w.is_empty() {
        return Err(Error::InvalidParameter("empty prediction vectors".into()));
    }
    for &p in probs_w.iter().chain(probs_x) {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter(
                "probabilities must lie strictly inside (0, 1)".into(),
            ));
        }
    }
    let n = probs_w.len() as f64;
    let ref_w: f64 = probs_w.iter().map(|p| p * (1.0 - p)).sum::<f64>() / n;
    let ref_x: f64 = probs_x.iter().map(|p| p * (1.0 - p)).sum::<f64>() / n;
    Ok(ref_w - ref_x)
}

/// One point of a calibration curve: predicted probability and the smoothed
/// observed event rate at that prediction level.
pub type CurvePoint = (f64, f64);

/// Loess calibration curve: a local-linear (degree 1) tricube-weighted
/// smooth of outcomes on predicted probabilities, evaluated at `grid_points`
/// equally spaced locations spanning the observed prediction range.
///
/// `span` is the fraction of observations in each local window; 0.75 is the
/// conventional default. No robustness iterations are applied.
pub fn loess_calibration_curve(
    probs: &[f64],
    y: &[bool],
    grid_points: usize,
    span: f64,
) -> Result<Vec<CurvePoint>> {
    if probs.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} probabilities vs {} outcomes",
            probs.len(),
            y.len()
        )));
    }
    let n = probs.len();
    if n < 50 {
        return Err(Error::InvalidParameter(format!(
            "loess calibration curve needs at least 50 observations, got {n}"
        )));
    }
    if grid_points < 2 {
        return Err(Error::InvalidParameter(
            "calibration curve needs at least two grid points".into(),
        ));
    }
    if !(span > 0.0 && span <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "loess span must lie in (0, 1], got {span}"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| probs[a].total_cmp(&probs[b]));
    let p_sorted: Vec<f64> = order.iter().map(|&i| probs[i]).collect();
    let y_sorted: Vec<f64> = order
        .iter()
        .map(|&i| if y[i] { 1.0 } else { 0.0 })
        .collect();

    let k = ((span * n as f64).ceil() as usize).clamp(2, n);
    let lo = p_sorted[0];
    let hi = p_sorted[n - 1];
    let mut curve = Vec::with_capacity(grid_points);
    let mut start = 0usize;
    for t in 0..grid_points {
        let g = lo + (hi - lo) * t as f64 / (grid_points - 1) as f64;
        // slide the k-point window right while the next point is closer
        while start + k < n && p_sorted[start + k] - g < g - p_sorted[start] {
            start += 1;
        }
        let window_p = &p_sorted[start..start + k];
        let window_y = &y_sorted[start..start + k];
        let h = f64::max((g - window_p[0]).abs(), (window_p[k - 1] - g).abs());
        let value = if h == 0.0 {
            window_y.iter().sum::<f64>() / k as f64
        } else {
            local_linear(window_p, window_y, g, h)
        };
        curve.push((g, value));
    }
    Ok(curve)
}

/// Tricube-weighted least-squares line through the window, evaluated at `g`.
fn local_linear(p: &[f64], y: &[f64], g: f64, h: f64) -> f64 {
    let mut sw = 0.0;
    let mut swu = 0.0;
    let mut swy = 0.0;
    let mut swuu = 0.0;
    let mut swuy = 0.0;
    for (&pi, &yi) in p.iter().zip(y) {
        let d = (pi - g).abs() / h;
        if d >= 1.0 {
            continue;
        }
        let w = {
            let t = 1.0 - d * d * d;
            t * t * t
        };
        let u = pi - g;
        sw += w;
        swu += w * u;
        swy += w * yi;
        swuu += w * u * u;
        swuy += w * u * yi;
    }
    if sw <= 0.0 {
        // everything at the window edge; unweighted mean keeps the curve defined
        return y.iter().sum::<f64>() / y.len() as f64;
    }
    let det = sw * swuu - swu * swu;
    if det.abs() < 1e-12 * sw.max(1.0) {
        return swy / sw;
    }
    // intercept of the centered WLS line is the value at g
    (swuu * swy - swu * swuy) / det
}

/// Every performance measure for one evaluation of a model on a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerformanceReport {
    pub c_statistic: f64,
    pub brier: BrierDecomposition,
    pub calib_slope: f64,
    pub citl: f64,
    pub n: usize,
    pub n_events: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::ClassParams;
    use crate::rng::substream;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn normal_cdf_reference_values() {
        // reference values computed with a 30-digit erfc
        let table = [
            (0.0, 0.5),
            (1.0, 0.841344746068542948585),
            (0.8416, 0.799994055355033161860),
            (-1.0, 0.158655253931457051415),
            (1.96, 0.975002104851779565863),
            (2.5, 0.993790334674223864833),
            (-3.0, 0.00134989803163009452665),
            (5.0, 0.999999713348428120806),
            (-5.0, 2.86651571879193911674e-7),
            (8.0, 0.999999999999999377904),
            (-8.0, 6.22096057427178412352e-16),
            (0.5, 0.691462461274013103638),
            (-0.1, 0.460172162722971018535),
        ];
        for (z, expected) in table {
            let got = normal_cdf(z);
            assert!(
                (got - expected).abs() <= 1e-12,
                "Phi({z}) = {got}, want {expected}"
            );
        }
        assert!((normal_cdf(0.8416) - 0.80).abs() < 1e-4);
        assert_eq!(normal_cdf(-40.0), 0.0);
    }

    fn enumerate_pairs(scores: &[f64], y: &[bool]) -> f64 {
        let mut favorable = 0.0f64;
        for (i, &yi) in y.iter().enumerate() {
            if !yi {
                continue;
            }
            for (j, &yj) in y.iter().enumerate() {
                if yj {
                    continue;
                }
                if scores[i] > scores[j] {
                    favorable += 1.0;
                } else if scores[i] == scores[j] {
                    favorable += 0.5;
                }
            }
        }
        let n1 = y.iter().filter(|&&v| v).count() as f64;
        let n0 = y.iter().filter(|&&v| !v).count() as f64;
        favorable / (n1 * n0)
    }

    #[test]
    fn concordance_small_example() {
        let y = [false, false, true, true];
        let scores = [0.1, 0.4, 0.3, 0.8];
        let c = concordance(&scores, &y).unwrap();
        assert_eq!(c, 0.75);
        assert_eq!(c, enumerate_pairs(&scores, &y));
    }

    #[test]
    fn concordance_edge_cases() {
        let y = [false, false, true, true];
        assert_eq!(concordance(&[1.0, 2.0, 3.0, 4.0], &y).unwrap(), 1.0);
        assert_eq!(concordance(&[7.0, 7.0, 7.0, 7.0], &y).unwrap(), 0.5);
        assert!(matches!(
            concordance(&[1.0, 2.0], &[true, true]),
            Err(Error::UndefinedMetric(_))
        ));
    }

    proptest! {
        #[test]
        fn rank_concordance_equals_pair_enumeration(
            n in 2usize..200,
            seed in 0u64..500,
        ) {
            let mut rng = substream(seed, "conc-prop", n as u64);
            // draw from a small value set so ties are common
            let scores: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..8u8)) / 4.0).collect();
            let mut y: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
            y[0] = true;
            y[n - 1] = false;
            let fast = concordance(&scores, &y).unwrap();
            let slow = enumerate_pairs(&scores, &y);
            prop_assert_eq!(fast, slow);
        }

        #[test]
        fn concordance_invariant_under_monotone_transform(
            n in 2usize..100,
            seed in 0u64..200,
        ) {
            let mut rng = substream(seed, "conc-mono", n as u64);
            let scores: Vec<f64> = (0..n).map(|_| rng.random_range(-4.0..4.0)).collect();
            let mut y: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
            y[0] = true;
            y[n - 1] = false;
            let on_logit = concordance(&scores, &y).unwrap();
            let probs: Vec<f64> = scores.iter().map(|&s| crate::glm::inverse_logit(s)).collect();
            let on_prob = concordance(&probs, &y).unwrap();
            prop_assert_eq!(on_logit, on_prob);
        }

        #[test]
        fn brier_identity_on_random_inputs(
            n in 1usize..300,
            seed in 0u64..500,
        ) {
            let mut rng = substream(seed, "brier-prop", n as u64);
            let probs: Vec<f64> = (0..n).map(|_| rng.random_range(0.001..0.999)).collect();
            let y: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
            let b = brier(&probs, &y).unwrap();
            prop_assert!((b.total - (b.calibration + b.refinement)).abs() < 1e-12);
            prop_assert!(b.refinement >= 0.0 && b.refinement <= 0.25);
        }

        #[test]
        fn added_noise_always_dilutes_binormal_discrimination(
            gap in 0.05f64..3.0,
            var_case in 0.05f64..4.0,
            var_noncase in 0.05f64..4.0,
            var_eps in 0.01f64..4.0,
        ) {
            let stats = GroupStats::new(gap, 0.0, var_case, var_noncase).unwrap();
            let model = MeasurementModel::random(var_eps).unwrap();
            prop_assert!(delta_auc(&stats, &model).unwrap() < 0.0);
        }
    }

    #[test]
    fn binormal_auc_values() {
        let s = GroupStats::new(1.0, 0.0, 0.5, 0.5).unwrap();
        assert!((binormal_auc(&s).unwrap() - 0.841344746068542948585).abs() < 1e-12);
        let s = GroupStats::new(0.3, 0.3, 1.0, 2.0).unwrap();
        assert_eq!(binormal_auc(&s).unwrap(), 0.5);
        let s = GroupStats::new(1.0, 0.0, 0.0, 0.0).unwrap();
        assert!(binormal_auc(&s).is_err());
    }

    #[test]
    fn binormal_auc_agrees_with_concordance_on_binormal_data() {
        let mut rng = substream(77, "binormal", 0);
        let n = 1_000_000usize;
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let yi = rng.random::<f64>() < 0.4;
            let (mu, sd) = if yi { (0.8, 1.2) } else { (0.0, 0.9) };
            let z: f64 = rng.sample(StandardNormal);
            x.push(mu + sd * z);
            y.push(yi);
        }
        let stats = GroupStats::from_sample(&x, &y).unwrap();
        let approx = binormal_auc(&stats).unwrap();
        let exact = concordance(&x, &y).unwrap();
        assert!(
            (approx - exact).abs() < 0.002,
            "binormal {approx} vs empirical {exact}"
        );
    }

    #[test]
    fn delta_auc_directions() {
        let stats = GroupStats::new(1.0, 0.0, 0.7, 0.7).unwrap();
        // exact measurement changes nothing
        assert_eq!(
            delta_auc(&stats, &MeasurementModel::exact()).unwrap(),
            0.0
        );
        // random error dilutes discrimination
        let noisy = MeasurementModel::random(1.0).unwrap();
        assert!(delta_auc(&stats, &noisy).unwrap() < 0.0);
        // shifting cases away from non-cases enlarges it
        let diff = MeasurementModel::differential(
            ClassParams::new(0.0, 1.0, 0.0).unwrap(),
            ClassParams::new(0.5, 1.0, 0.0).unwrap(),
        );
        assert!(delta_auc(&stats, &diff).unwrap() > 0.0);
    }

    #[test]
    fn brier_hand_computed_example() {
        let b = brier(&[0.8, 0.4], &[true, false]).unwrap();
        assert!((b.total - 0.10).abs() < 1e-15);
        assert!((b.calibration - -0.10).abs() < 1e-15);
        assert!((b.refinement - 0.20).abs() < 1e-15);
    }

    #[test]
    fn brier_uninformative_predictions() {
        let y = [true, false, true, false];
        let b = brier(&[0.5; 4], &y).unwrap();
        assert_eq!(b.total, 0.25);
        assert_eq!(b.refinement, 0.25);
        assert_eq!(b.calibration, 0.0);
    }

    #[test]
    fn brier_near_perfect_predictions() {
        let probs = [1.0 - 1e-12, 1e-12, 1.0 - 1e-12];
        let y = [true, false, true];
        let b = brier(&probs, &y).unwrap();
        assert!(b.total < 1e-20);
    }

    #[test]
    fn brier_rejects_bad_input() {
        assert!(brier(&[0.5], &[true, false]).is_err());
        assert!(brier(&[0.0], &[true]).is_err());
        assert!(brier(&[1.0], &[true]).is_err());
    }

    #[test]
    fn expected_delta_bs_examples() {
        let p = [0.3, 0.6, 0.9];
        assert_eq!(expected_delta_bs(&p, &p).unwrap(), 0.0);
        let w = [0.5, 0.5];
        let x = [0.1, 0.9];
        let d = expected_delta_bs(&w, &x).unwrap();
        assert!((d - 0.16).abs() < 1e-15);
        assert!(expected_delta_bs(&[0.5], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn loess_curve_recovers_the_diagonal_when_calibrated() {
        let mut rng = substream(91, "loess", 0);
        let n = 100_000usize;
        let mut probs = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let p: f64 = rng.random_range(0.05..0.95);
            probs.push(p);
            y.push(rng.random::<f64>() < p);
        }
        let curve = loess_calibration_curve(&probs, &y, 50, 0.75).unwrap();
        for &(g, v) in &curve[2..48] {
            assert!((v - g).abs() < 0.02, "curve at {g} is {v}");
        }
    }

    #[test]
    fn loess_curve_on_constant_outcomes() {
        let mut rng = substream(92, "loess-const", 0);
        let probs: Vec<f64> = (0..200).map(|_| rng.random_range(0.2..0.8)).collect();
        let y = vec![true; 200];
        let curve = loess_calibration_curve(&probs, &y, 20, 0.75).unwrap();
        for &(_, v) in &curve {
            assert!((v - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn loess_curve_grid_contract() {
        let mut rng = substream(93, "loess-grid", 0);
        let probs: Vec<f64> = (0..500).map(|_| rng.random_range(0.0..1.0)).collect();
        let y: Vec<bool> = (0..500).map(|_| rng.random()).collect();
        let curve = loess_calibration_curve(&probs, &y, 100, 0.75).unwrap();
        assert_eq!(curve.len(), 100);
        assert!(loess_calibration_curve(&probs[..30], &y[..30], 10, 0.75).is_err());
    }
}
