//! Per-case verification scores: CRPS (parametric and empirical), Brier
//! score, skill scores, randomized PIT, verification rank, interval
//! coverage, MAE/RMSE.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dist::CensoredLogistic;
use crate::error::{Error, Result};

/// Reference mean scores at or below this are treated as zero: the skill
/// score is reported as undefined instead of exploding.
pub const SS_EPS: f64 = 1e-6;

/// CRPS of the predictive distribution against observation `y`; delegates
/// to the closed form on [`CensoredLogistic`].
pub fn crps_parametric(params: &CensoredLogistic, y: f64) -> f64 {
    params.crps(y)
}

/// CRPS of an empirical (ensemble) forecast:
/// `(1/M) Σ|f_i − y| − 1/(2M²) ΣΣ|f_i − f_j|`.
///
/// Evaluated in `O(M log M)` via the sorted identity
/// `ΣΣ|f_i − f_j| = 2 Σ_k (2k − M + 1) f_(k)`; equal to the double sum to
/// rounding.
pub fn crps_empirical(members: &[f64], y: f64) -> Result<f64> {
    if members.is_empty() {
        return Err(Error::Data("empirical CRPS of an empty ensemble".into()));
    }
    let m = members.len() as f64;
    let mut sorted = members.to_vec();
    sorted.sort_by(f64::total_cmp);

    let mad: f64 = sorted.iter().map(|f| (f - y).abs()).sum::<f64>() / m;
    let pair: f64 = sorted
        .iter()
        .enumerate()
        .map(|(k, f)| (2.0 * k as f64 - m + 1.0) * f)
        .sum::<f64>()
        / (m * m);
    Ok(mad - pair)
}

/// Brier score `(F(z) − 1{z ≥ y})²` for threshold `z`, observation `y` and
/// the forecast probability `F(z)` of staying at or below `z`.
pub fn brier(f_at_z: f64, y: f64, z: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&f_at_z), "F(z) = {f_at_z} outside [0, 1]");
    let ind = if z >= y { 1.0 } else { 0.0 };
    (f_at_z - ind) * (f_at_z - ind)
}

/// Empirical CDF of an ensemble at `z`.
pub fn ensemble_cdf(members: &[f64], z: f64) -> f64 {
    let below = members.iter().filter(|&&f| f <= z).count();
    below as f64 / members.len() as f64
}

/// Skill score `1 − mean_score/mean_ref`; `None` (undefined) when the
/// reference mean is at or below [`SS_EPS`].
pub fn skill_score(mean_score: f64, mean_ref: f64) -> Option<f64> {
    if mean_ref <= SS_EPS {
        None
    } else {
        Some(1.0 - mean_score / mean_ref)
    }
}

/// Probability integral transform, randomized at the point mass: `cdf(y)`
/// for `y > 0`, otherwise a seeded uniform draw on `[0, cdf(0)]`. Under a
/// calibrated forecaster the result is uniform on [0, 1].
pub fn pit(params: &CensoredLogistic, y: f64, seed: u64) -> f64 {
    if y > 0.0 {
        params.cdf(y)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.gen::<f64>() * params.point_mass()
    }
}

/// Rank of the observation within the ordered ensemble, in `{1..M+1}`;
/// ties are broken by a seeded uniform choice among the tied positions.
pub fn rank(members: &[f64], y: f64, seed: u64) -> usize {
    assert!(!members.is_empty(), "rank of an empty ensemble");
    let below = members.iter().filter(|&&f| f < y).count();
    let tied = members.iter().filter(|&&f| f == y).count();
    if tied == 0 {
        below + 1
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        below + 1 + rng.gen_range(0..=tied)
    }
}

/// Indicator that `y` lies inside the central `(1 − alpha)` interval of the
/// predictive distribution (quantiles `alpha/2` and `1 − alpha/2`,
/// boundaries included).
pub fn coverage_parametric(params: &CensoredLogistic, y: f64, alpha: f64) -> bool {
    assert!(alpha > 0.0 && alpha < 1.0, "alpha {alpha} outside (0, 1)");
    let lo = params.quantile(alpha / 2.0);
    let hi = params.quantile(1.0 - alpha / 2.0);
    y >= lo && y <= hi
}

/// Indicator that `y` lies inside the raw ensemble range (boundaries
/// included); the matching nominal rate is [`nominal_coverage`].
pub fn coverage_ensemble(members: &[f64], y: f64) -> bool {
    assert!(!members.is_empty());
    let lo = members.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = members.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    y >= lo && y <= hi
}

/// Nominal coverage of the range of an `M`-member ensemble, in percent:
/// `(M − 1)/(M + 1) · 100`.
pub fn nominal_coverage(m: usize) -> f64 {
    (m as f64 - 1.0) / (m as f64 + 1.0) * 100.0
}

/// Mean absolute error and root mean square error of point forecasts.
/// Supply predictive medians for MAE and predictive means for RMSE; each is
/// the optimal point summary for its error measure.
pub fn mae_rmse(point_forecasts: &[f64], observations: &[f64]) -> Result<(f64, f64)> {
    if point_forecasts.len() != observations.len() || point_forecasts.is_empty() {
        return Err(Error::Data(format!(
            "mae/rmse length mismatch: {} forecasts vs {} observations",
            point_forecasts.len(),
            observations.len()
        )));
    }
    let n = point_forecasts.len() as f64;
    let mut abs = 0.0;
    let mut sq = 0.0;
    for (f, y) in point_forecasts.iter().zip(observations) {
        let e = f - y;
        abs += e.abs();
        sq += e * e;
    }
    Ok((abs / n, (sq / n).sqrt()))
}

/// Median of an ensemble: midpoint of the two central order statistics for
/// even sizes.
pub fn ensemble_median(members: &[f64]) -> f64 {
    assert!(!members.is_empty());
    let mut sorted = members.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    }
}

/// Mean of an ensemble.
pub fn ensemble_mean(members: &[f64]) -> f64 {
    assert!(!members.is_empty());
    members.iter().sum::<f64>() / members.len() as f64
}
