//! Calibration histograms: PIT and verification-rank bin counts, plus the
//! Kolmogorov distance used to quantify PIT uniformity.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistogramKind {
    Pit,
    Rank,
}

/// Plot-ready bin counts; `Σ counts = n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub kind: HistogramKind,
    pub counts: Vec<u64>,
    pub n: u64,
}

/// Bins PIT values on [0, 1] into `bins` equal-width bins; 1.0 lands in the
/// last bin.
pub fn pit_histogram(pits: &[f64], bins: usize) -> Histogram {
    assert!(bins >= 2, "need at least 2 bins");
    let mut counts = vec![0u64; bins];
    for &p in pits {
        debug_assert!((0.0..=1.0).contains(&p), "PIT {p} outside [0, 1]");
        let idx = ((p * bins as f64) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    Histogram {
        kind: HistogramKind::Pit,
        counts,
        n: pits.len() as u64,
    }
}

/// Bins ranks in `{1..M+1}` into `M+1` unit bins.
pub fn rank_histogram(ranks: &[usize], ensemble_size: usize) -> Histogram {
    let bins = ensemble_size + 1;
    let mut counts = vec![0u64; bins];
    for &r in ranks {
        assert!((1..=bins).contains(&r), "rank {r} outside 1..{bins}");
        counts[r - 1] += 1;
    }
    Histogram {
        kind: HistogramKind::Rank,
        counts,
        n: ranks.len() as u64,
    }
}

/// Kolmogorov distance of a sample from the uniform distribution on [0, 1]:
/// `sup_x |F_n(x) − x|`.
pub fn kolmogorov_uniform(sample: &[f64]) -> f64 {
    if sample.is_empty() {
        return 0.0;
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        d = d.max((x - i as f64 / n).abs());
        d = d.max(((i as f64 + 1.0) / n - x).abs());
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pit_binning_covers_edges() {
        let h = pit_histogram(&[0.0, 0.049, 0.5, 0.999, 1.0], 20);
        assert_eq!(h.n, 5);
        assert_eq!(h.counts.iter().sum::<u64>(), 5);
        assert_eq!(h.counts[0], 2);
        assert_eq!(h.counts[10], 1);
        assert_eq!(h.counts[19], 2);
    }

    #[test]
    fn rank_binning() {
        let h = rank_histogram(&[1, 1, 4, 12], 11);
        assert_eq!(h.counts.len(), 12);
        assert_eq!(h.counts[0], 2);
        assert_eq!(h.counts[3], 1);
        assert_eq!(h.counts[11], 1);
        assert_eq!(h.counts.iter().sum::<u64>(), h.n);
    }

    #[test]
    fn kolmogorov_of_uniform_sample_is_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sample: Vec<f64> = (0..10_000).map(|_| rng.gen()).collect();
        let d = kolmogorov_uniform(&sample);
        // 99.9th percentile of the KS statistic at n = 10^4 is ~0.0195
        assert!(d < 0.02, "distance {d}");
        // a clearly non-uniform sample scores high
        let skewed: Vec<f64> = sample.iter().map(|x| x * x).collect();
        assert!(kolmogorov_uniform(&skewed) > 0.1);
    }

    #[test]
    fn kolmogorov_exact_small_sample() {
        // sorted [0.5]: F_n jumps 0 -> 1 at 0.5, distance 0.5 on both sides
        assert_eq!(kolmogorov_uniform(&[0.5]), 0.5);
        assert_eq!(kolmogorov_uniform(&[]), 0.0);
    }
}
