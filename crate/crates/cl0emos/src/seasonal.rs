//! Harmonic least-squares fits of annual (and semi-annual) cycles.
//!
//! The periodic link functions remove the seasonal cycle from observations
//! and ensemble group means before regression. The cycle model is a
//! truncated Fourier series in the day-of-year `t` with a fixed 365-day
//! period:
//!
//! order 1: `c0 + c1 sin(2πt/365) + c2 cos(2πt/365)`
//! order 2: adds `sin(4πt/365)` and `cos(4πt/365)` terms.

use chrono::{DateTime, Datelike, Timelike, Utc};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fixed period of the harmonic model in days. Leap days map onto the same
/// phase grid as the surrounding days; no special-casing.
pub const PERIOD_DAYS: f64 = 365.0;

/// Fitted harmonic model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicFit {
    /// 1 (annual) or 2 (annual + semi-annual).
    pub order: u8,
    /// Length 3 (order 1) or 5 (order 2): intercept, then (sin, cos) pairs
    /// per frequency.
    pub coefficients: Vec<f64>,
    pub period_days: f64,
}

impl HarmonicFit {
    /// A zero fit: evaluates to 0 everywhere. Useful as a neutral element;
    /// the periodic link with all-zero fits coincides with the plain
    /// exchangeable link.
    pub fn zero(order: u8) -> Self {
        Self {
            order,
            coefficients: vec![0.0; 1 + 2 * order as usize],
            period_days: PERIOD_DAYS,
        }
    }

    /// Evaluates the harmonic at day index `t` (fractional days allowed).
    pub fn eval(&self, t: f64) -> f64 {
        let mut acc = self.coefficients[0];
        for j in 1..=self.order as usize {
            let w = 2.0 * std::f64::consts::PI * j as f64 * t / self.period_days;
            acc += self.coefficients[2 * j - 1] * w.sin();
            acc += self.coefficients[2 * j] * w.cos();
        }
        acc
    }
}

/// Day index of a UTC timestamp: 1-based ordinal day of the year plus the
/// fraction of the day elapsed, so time-of-day is preserved.
pub fn day_index(t: DateTime<Utc>) -> f64 {
    let frac = f64::from(t.time().num_seconds_from_midnight()) / 86_400.0;
    f64::from(t.ordinal()) + frac
}

/// Ordinary least squares fit of the harmonic model.
///
/// Requires at least `2·order + 2` points. The system is solved through the
/// singular value decomposition of the design matrix, which doubles as the
/// pseudo-inverse route for ill-conditioned windows; designs that are
/// rank-deficient up to working precision (for example all `t` identical)
/// are rejected.
pub fn fit_harmonic(ts: &[f64], values: &[f64], order: u8) -> Result<HarmonicFit> {
    if !(order == 1 || order == 2) {
        return Err(Error::Config(format!("harmonic order must be 1 or 2, got {order}")));
    }
    if ts.len() != values.len() {
        return Err(Error::Data(format!(
            "harmonic fit length mismatch: {} times vs {} values",
            ts.len(),
            values.len()
        )));
    }
    let p = 1 + 2 * order as usize;
    let min_points = 2 * order as usize + 2;
    if ts.len() < min_points {
        return Err(Error::Data(format!(
            "harmonic fit of order {order} needs at least {min_points} points, got {}",
            ts.len()
        )));
    }

    let n = ts.len();
    let design = DMatrix::from_fn(n, p, |i, j| {
        if j == 0 {
            1.0
        } else {
            let freq = (j + 1) / 2;
            let w = 2.0 * std::f64::consts::PI * freq as f64 * ts[i] / PERIOD_DAYS;
            if j % 2 == 1 {
                w.sin()
            } else {
                w.cos()
            }
        }
    });
    let rhs = DVector::from_column_slice(values);

    let svd = design.svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let smin = svd
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if smax <= 0.0 || smin < smax * 1e-13 {
        return Err(Error::Numerics(
            "harmonic design is rank-deficient (times too clustered)".into(),
        ));
    }
    let sol = svd
        .solve(&rhs, smax * 1e-12)
        .map_err(|e| Error::Numerics(format!("harmonic solve failed: {e}")))?;

    Ok(HarmonicFit {
        order,
        coefficients: sol.iter().cloned().collect(),
        period_days: PERIOD_DAYS,
    })
}
