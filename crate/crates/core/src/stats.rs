//! Error metrics against a reference: bias/variance decomposition per
//! (step, cell), time-space averaging, and log-log slope fits.

use alloc::string::String;
use alloc::vec::Vec;

use crate::Error;

/// Averaged RMSE below this (scaled units) is reported as exact.
pub const EXACT_THRESHOLD: f64 = 1e-12;

/// Per-point bias, population variance and RMSE over repetitions.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RmseField {
    pub bias: Vec<f64>,
    pub variance: Vec<f64>,
    pub rmse: Vec<f64>,
}

/// `runs[r][p]` is repetition `r` at field point `p` (one per (step, cell)).
///
/// Non-finite entries (empty cells) are left out of that point's
/// statistics; a point with no finite entry gets NaN everywhere.
pub fn rmse_field<R: AsRef<[f64]>>(runs: &[R], reference: &[f64]) -> RmseField {
    let points = reference.len();
    let mut field = RmseField {
        bias: Vec::with_capacity(points),
        variance: Vec::with_capacity(points),
        rmse: Vec::with_capacity(points),
    };
    for (p, &target) in reference.iter().enumerate() {
        let values = || runs.iter().map(|r| r.as_ref()[p]).filter(|v| v.is_finite());
        let count = values().count();
        if count == 0 {
            field.bias.push(f64::NAN);
            field.variance.push(f64::NAN);
            field.rmse.push(f64::NAN);
            continue;
        }
        let mean = values().sum::<f64>() / count as f64;
        let variance = values().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count as f64;
        let bias = (mean - target).abs();
        field.bias.push(bias);
        field.variance.push(variance);
        field.rmse.push(libm::sqrt(bias * bias + variance));
    }
    field
}

/// Arithmetic mean over all finite field points.
pub fn averaged_rmse(rmse: &[f64]) -> f64 {
    let (sum, n) = rmse
        .iter()
        .filter(|v| v.is_finite())
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// Least-squares slope of `log2(error)` against `log2(n)`. Points with a
/// non-positive or non-finite error are dropped.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<f64, Error> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(n, e)| *n > 0.0 && *e > 0.0 && e.is_finite())
        .map(|(n, e)| (libm::log2(*n), libm::log2(*e)))
        .collect();
    if logs.len() < 3 {
        return Err(Error::TooFewPoints(logs.len()));
    }
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum::<f64>();
    let sxx = logs.iter().map(|(x, _)| (x - mx) * (x - mx)).sum::<f64>();
    Ok(sxy / sxx)
}

/// Which part of an N sweep enters the slope fit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FitWindow {
    #[default]
    Full,
    /// Largest-N half of the points (at least 3).
    UpperHalf,
}

impl FitWindow {
    pub fn select<T>(self, points: &[T]) -> &[T] {
        match self {
            FitWindow::Full => points,
            FitWindow::UpperHalf => {
                let keep = points.len().div_ceil(2).max(3).min(points.len());
                &points[points.len() - keep..]
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FitWindow::Full => "full",
            FitWindow::UpperHalf => "upper-half",
        }
    }
}

/// Averaged RMSE against particle count for one (strategy, quantity).
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRecord {
    pub strategy: String,
    pub quantity: String,
    /// `(N, averaged RMSE)`, ascending in N.
    pub points: Vec<(usize, f64)>,
    pub window: FitWindow,
}

impl ConvergenceRecord {
    pub fn new(strategy: String, quantity: String, mut points: Vec<(usize, f64)>, window: FitWindow) -> Self {
        points.sort_by_key(|p| p.0);
        Self { strategy, quantity, points, window }
    }

    /// Every averaged RMSE is below [`EXACT_THRESHOLD`].
    pub fn is_exact(&self) -> bool {
        !self.points.is_empty() && self.points.iter().all(|p| p.1 < EXACT_THRESHOLD)
    }

    pub fn fit_range(&self) -> Option<(usize, usize)> {
        let w = self.window.select(&self.points);
        Some((w.first()?.0, w.last()?.0))
    }

    pub fn slope(&self) -> Result<f64, Error> {
        let pts: Vec<(f64, f64)> =
            self.window.select(&self.points).iter().map(|&(n, e)| (n as f64, e)).collect();
        fit_slope(&pts)
    }

    pub fn rmse_at(&self, n: usize) -> Option<f64> {
        self.points.iter().find(|p| p.0 == n).map(|p| p.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn single_run_has_zero_variance() {
        let f = rmse_field(&[vec![3.0, 1.0]], &[1.0, 1.0]);
        assert_eq!(f.variance, [0.0, 0.0]);
        assert_eq!(f.rmse, f.bias);
        assert_eq!(f.rmse, [2.0, 0.0]);
    }

    #[test]
    fn exact_runs_have_zero_rmse() {
        let f = rmse_field(&[vec![0.5], vec![0.5]], &[0.5]);
        assert_eq!(f.rmse, [0.0]);
    }

    #[test]
    fn two_run_arithmetic() {
        let f = rmse_field(&[vec![1.0], vec![3.0]], &[1.0]);
        assert_eq!(f.bias, [1.0]);
        assert_eq!(f.variance, [1.0]);
        assert!((f.rmse[0] - libm::sqrt(2.0)).abs() < 1e-15);
    }

    #[test]
    fn missing_values_are_skipped() {
        let f = rmse_field(&[vec![f64::NAN, 2.0], vec![f64::NAN, 4.0]], &[0.0, 3.0]);
        assert!(f.rmse[0].is_nan());
        assert_eq!(averaged_rmse(&f.rmse), f.rmse[1]);
    }

    #[test]
    fn averaging_examples() {
        assert!((averaged_rmse(&[0.7; 9]) - 0.7).abs() < 1e-15);
        assert_eq!(averaged_rmse(&[0.0, 0.0, 2.0, 2.0]), 1.0);
        assert_eq!(averaged_rmse(&[0.25]), 0.25);
    }

    #[test]
    fn slope_examples() {
        let half: Vec<(f64, f64)> = [64.0, 256.0, 1024.0, 4096.0].iter().map(|&n| (n, 3.0 / libm::sqrt(n))).collect();
        assert!((fit_slope(&half).unwrap() + 0.5).abs() < 1e-12);
        let flat = [(2.0, 1.0), (4.0, 1.0), (8.0, 1.0)];
        assert_eq!(fit_slope(&flat).unwrap(), 0.0);
        let exact = [(64.0, 1.0), (256.0, 0.25), (1024.0, 0.0625)];
        assert!((fit_slope(&exact).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn slope_drops_nonpositive_errors() {
        let pts = [(2.0, 0.0), (4.0, 1.0), (8.0, 0.5), (16.0, 0.25)];
        assert!((fit_slope(&pts).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(fit_slope(&pts[..3]), Err(Error::TooFewPoints(2)));
    }

    #[test]
    fn windows() {
        let pts = [1, 2, 3, 4, 5, 6, 7];
        assert_eq!(FitWindow::Full.select(&pts), &pts);
        assert_eq!(FitWindow::UpperHalf.select(&pts), &[4, 5, 6, 7]);
        assert_eq!(FitWindow::UpperHalf.select(&pts[..4]), &[2, 3, 4]);
    }

    #[test]
    fn exact_marker() {
        let r = ConvergenceRecord::new("a".into(), "b".into(), vec![(64, 1e-16), (128, 0.0)], FitWindow::Full);
        assert!(r.is_exact());
        let r = ConvergenceRecord::new("a".into(), "b".into(), vec![(64, 1e-3)], FitWindow::Full);
        assert!(!r.is_exact());
    }

    proptest! {
        #[test]
        fn rmse_dominates_bias_and_spread(
            runs in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 5), 1..20),
            reference in prop::collection::vec(-1e3f64..1e3, 5),
        ) {
            let f = rmse_field(&runs, &reference);
            for p in 0..5 {
                prop_assert!(f.rmse[p] >= f.bias[p]);
                prop_assert!(f.rmse[p] * (1.0 + 1e-12) >= libm::sqrt(f.variance[p]));
            }
        }

        #[test]
        fn averaging_is_linear_and_order_free(
            mut a in prop::collection::vec(0.0f64..10.0, 1..50),
            c in 0.1f64..10.0,
        ) {
            let base = averaged_rmse(&a);
            let scaled: Vec<f64> = a.iter().map(|x| c * x).collect();
            prop_assert!((averaged_rmse(&scaled) - c * base).abs() <= 1e-9 * (1.0 + c * base));
            a.reverse();
            prop_assert!((averaged_rmse(&a) - base).abs() <= 1e-12 * (1.0 + base));
        }

        #[test]
        fn slope_is_scale_invariant(
            errs in prop::collection::vec(1e-6f64..1e3, 3..10),
            c in 1e-3f64..1e3,
        ) {
            let pts: Vec<(f64, f64)> = errs.iter().enumerate().map(|(i, &e)| ((64usize << i) as f64, e)).collect();
            let scaled: Vec<(f64, f64)> = pts.iter().map(|&(n, e)| (n, c * e)).collect();
            let a = fit_slope(&pts).unwrap();
            let b = fit_slope(&scaled).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
