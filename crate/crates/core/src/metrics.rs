//! Parameter-recovery errors and trajectory divergence statistics.
//!
//! All norms are accumulated sequentially in `f64`, whatever the storage type.

use crate::dynamics::{NetworkParams, Trajectory};
use crate::error::{check_dim, Error, Result};
use crate::scalar::Real;

/// Default blow-up threshold, percent.
pub const DEFAULT_THRESHOLD: f64 = 1.0;

/// Per-step relative error in percent; `eps[k]` belongs to time `t0 + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCurve {
    pub eps: Vec<f64>,
    pub t0: usize,
}

impl ErrorCurve {
    pub fn new(eps: Vec<f64>, t0: usize) -> Self {
        ErrorCurve { eps, t0 }
    }

    pub fn len(&self) -> usize {
        self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.eps.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowUpReport {
    pub threshold: f64,
    /// Curve index of the first crossing, counted from `eps[1]`.
    pub blow_up_step: Option<usize>,
    /// Least-squares slope of `ln eps` against step before the crossing.
    pub growth_rate: Option<f64>,
    /// The curve reached 100%.
    pub saturated: bool,
}

fn sq_norm<T: Real>(v: impl IntoIterator<Item = T>) -> f64 {
    v.into_iter()
        .map(|x| {
            let x = x.to_f64_lossy();
            x * x
        })
        .fold(0.0, |acc, x| acc + x)
}

fn ratio(num_sq: f64, den_sq: f64, what: &'static str) -> Result<f64> {
    if den_sq == 0.0 {
        return Err(Error::UndefinedRatio(what));
    }
    Ok(100.0 * num_sq.sqrt() / den_sq.sqrt())
}

fn diff_sq<T: Real>(a: &[T], b: &[T]) -> f64 {
    sq_norm(a.iter().zip(b).map(|(&x, &y)| x - y))
}

/// `(100 |w - u|_F / |u|_F, 100 |b - a|_2 / |a|_2)` for student `(w, b)` and
/// teacher `(u, a)`.
pub fn param_errors<T: Real>(student: &NetworkParams<T>, teacher: &NetworkParams<T>) -> Result<(f64, f64)> {
    check_dim(teacher.n(), student.n())?;
    let eps_w = ratio(
        diff_sq(student.weights(), teacher.weights()),
        sq_norm(teacher.weights().iter().copied()),
        "teacher weights",
    )?;
    let eps_b = ratio(
        diff_sq(student.bias(), teacher.bias()),
        sq_norm(teacher.bias().iter().copied()),
        "teacher bias",
    )?;
    Ok((eps_w, eps_b))
}

fn check_shapes<T: Real>(test: &Trajectory<T>, reference: &Trajectory<T>) -> Result<()> {
    check_dim(reference.len(), test.len())?;
    check_dim(reference.n(), test.n())
}

/// `eps[k] = 100 |test[k] - ref[k]| / |ref[k]|` for every state, `k = 0`
/// included.
pub fn per_step_error<T: Real>(test: &Trajectory<T>, reference: &Trajectory<T>) -> Result<ErrorCurve> {
    check_shapes(test, reference)?;
    let eps = test
        .states()
        .iter()
        .zip(reference.states())
        .map(|(y, x)| ratio(diff_sq(y, x), sq_norm(x.iter().copied()), "reference state"))
        .collect::<Result<Vec<_>>>()?;
    Ok(ErrorCurve::new(eps, reference.t0()))
}

/// `100 |test - ref|_F / |ref|_F` over the whole `T x n` arrays.
pub fn total_error<T: Real>(test: &Trajectory<T>, reference: &Trajectory<T>) -> Result<f64> {
    check_shapes(test, reference)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (y, x) in test.states().iter().zip(reference.states()) {
        for (&a, &b) in y.iter().zip(x.iter()) {
            let (a, b) = (a.to_f64_lossy(), b.to_f64_lossy());
            num += (a - b) * (a - b);
            den += b * b;
        }
    }
    ratio(num, den, "reference trajectory")
}

/// First crossing of `threshold` (at index >= 1) and the exponential growth
/// rate of the curve before it.
///
/// The rate is fitted over indices with `0 < eps <= threshold` that precede
/// the crossing, and only when at least three such points exist.
pub fn blow_up_analysis(curve: &ErrorCurve, threshold: f64) -> Result<BlowUpReport> {
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(Error::InvalidArgument(format!("threshold must be positive, got {threshold}")));
    }
    let blow_up_step = curve
        .eps
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, &e)| e > threshold)
        .map(|(k, _)| k);
    let end = blow_up_step.unwrap_or(curve.eps.len());
    let points: Vec<(f64, f64)> = curve.eps[..end]
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > 0.0 && e <= threshold)
        .map(|(k, &e)| (k as f64, e.ln()))
        .collect();
    let growth_rate = if points.len() >= 3 { least_squares_slope(&points) } else { None };
    Ok(BlowUpReport {
        threshold,
        blow_up_step,
        growth_rate,
        saturated: curve.max() >= 100.0,
    })
}

fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    let count = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / count;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / count;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Point-wise mean.
pub fn average_curves(curves: &[ErrorCurve]) -> Result<ErrorCurve> {
    let first = curves
        .first()
        .ok_or_else(|| Error::InsufficientData("no curves to average".into()))?;
    let len = first.len();
    let mut sum = vec![0.0; len];
    for c in curves {
        check_dim(len, c.len())?;
        for (s, e) in sum.iter_mut().zip(&c.eps) {
            *s += e;
        }
    }
    let m = curves.len() as f64;
    Ok(ErrorCurve::new(sum.into_iter().map(|s| s / m).collect(), first.t0))
}
