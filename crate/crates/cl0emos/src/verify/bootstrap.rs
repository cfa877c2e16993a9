//! Stationary block bootstrap confidence intervals for skill scores.
//!
//! Verification score series are serially dependent (weather regimes
//! persist), so i.i.d. resampling understates uncertainty. The stationary
//! bootstrap resamples blocks whose lengths are geometrically distributed
//! around a configurable mean, with wrap-around indexing, which preserves
//! short-range dependence while keeping the resampled series stationary.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::verify::scores::SS_EPS;

/// Percentile interval for a skill score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkillCi {
    pub low: f64,
    pub high: f64,
}

/// Default mean block length: `ceil(n^(1/3))`.
pub fn default_mean_block_len(n: usize) -> f64 {
    (n as f64).cbrt().ceil()
}

/// Bootstrap 95% interval (2.5/97.5 percentiles) for the skill score
/// `1 − mean(score_F)/mean(score_ref)` of a time-ordered paired series.
///
/// Returns `Ok(None)` when the reference is degenerate: full-sample
/// reference mean at or below [`SS_EPS`], or more than half of the
/// replicates degenerate. Deterministic for a fixed seed. Requires at least
/// 10 cases and `mean_block_len ≥ 1`.
pub fn bootstrap_ci(
    case_scores: &[(f64, f64)],
    n_boot: usize,
    mean_block_len: f64,
    seed: u64,
) -> Result<Option<SkillCi>> {
    let n = case_scores.len();
    if n < 10 {
        return Err(Error::Data(format!(
            "bootstrap needs at least 10 cases, got {n}"
        )));
    }
    if !(mean_block_len >= 1.0) {
        return Err(Error::Config(format!(
            "mean block length must be at least 1, got {mean_block_len}"
        )));
    }
    if n_boot == 0 {
        return Err(Error::Config("bootstrap replicate count must be positive".into()));
    }

    let ref_mean: f64 = case_scores.iter().map(|s| s.1).sum::<f64>() / n as f64;
    if ref_mean <= SS_EPS {
        return Ok(None);
    }

    let p_new_block = 1.0 / mean_block_len;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut skills = Vec::with_capacity(n_boot);
    let mut degenerate = 0usize;

    for _ in 0..n_boot {
        let mut sum_f = 0.0;
        let mut sum_r = 0.0;
        let mut idx = rng.gen_range(0..n);
        for step in 0..n {
            if step > 0 {
                if rng.gen::<f64>() < p_new_block {
                    idx = rng.gen_range(0..n);
                } else {
                    idx = (idx + 1) % n;
                }
            }
            let (f, r) = case_scores[idx];
            sum_f += f;
            sum_r += r;
        }
        if sum_r / n as f64 <= SS_EPS {
            degenerate += 1;
        } else {
            skills.push(1.0 - sum_f / sum_r);
        }
    }

    if degenerate * 2 > n_boot {
        return Ok(None);
    }
    skills.sort_by(f64::total_cmp);
    Ok(Some(SkillCi {
        low: percentile(&skills, 0.025),
        high: percentile(&skills, 0.975),
    }))
}

/// Linear-interpolation percentile of a sorted sample.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}
