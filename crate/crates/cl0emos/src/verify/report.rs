//! Score aggregation along reporting axes.
//!
//! Per-case scores are computed once upstream; this module groups them by
//! lead time, observation hour, month, station, or pooled, and reduces each
//! group to a [`ScoreRow`]. Skill scores always compare means over the
//! identical case set, and bootstrap confidence intervals resample the
//! paired per-case series in chronological order.

use chrono::{DateTime, Datelike, Duration, Timelike, Utc};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::Result;
use crate::seed::subseed;
use crate::verify::bootstrap::{bootstrap_ci, default_mean_block_len, SkillCi};
use crate::verify::scores::{mae_rmse, skill_score};

/// Scores for one verified forecast case. `crps_clim` is absent when the
/// archive has no climatology window before the case; `pit` is absent for
/// passthrough rows that carry no predictive distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseScore {
    pub station_id: String,
    pub init_time: DateTime<Utc>,
    pub lead_minutes: u32,
    pub observation: f64,
    /// Clear-sky irradiance of the case, when archived; lets consumers
    /// restrict aggregation to daylight.
    pub clear_sky: Option<f64>,
    pub passthrough: bool,
    pub crps_fc: f64,
    pub crps_raw: f64,
    pub crps_clim: Option<f64>,
    /// Brier scores per configured threshold, forecast then raw.
    pub bs_fc: Vec<f64>,
    pub bs_raw: Vec<f64>,
    /// Central-interval indicators (0 or 1).
    pub cover_fc: f64,
    pub cover_raw: f64,
    pub pit: Option<f64>,
    pub rank: usize,
    pub median_fc: f64,
    pub mean_fc: f64,
    pub median_raw: f64,
    pub mean_raw: f64,
}

impl CaseScore {
    pub fn valid_time(&self) -> DateTime<Utc> {
        self.init_time + Duration::minutes(i64::from(self.lead_minutes))
    }

    pub fn valid_hour(&self) -> u32 {
        self.valid_time().hour()
    }

    pub fn valid_month(&self) -> u32 {
        self.valid_time().month()
    }
}

/// Reporting axis. Each axis partitions the case set; `Pooled` is the
/// single-group partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Lead,
    Hour,
    Month,
    Station,
    Pooled,
}

impl Axis {
    pub const ALL: [Axis; 5] = [Axis::Lead, Axis::Hour, Axis::Month, Axis::Station, Axis::Pooled];

    pub fn name(self) -> &'static str {
        match self {
            Axis::Lead => "lead",
            Axis::Hour => "hour",
            Axis::Month => "month",
            Axis::Station => "station",
            Axis::Pooled => "pooled",
        }
    }

    fn key(self, case: &CaseScore) -> String {
        match self {
            Axis::Lead => format!("{:05}", case.lead_minutes),
            Axis::Hour => format!("{:02}", case.valid_hour()),
            Axis::Month => format!("{:02}", case.valid_month()),
            Axis::Station => case.station_id.clone(),
            Axis::Pooled => "all".to_owned(),
        }
    }
}

/// Aggregation settings, shared across axes of one verification run.
#[derive(Debug, Clone)]
pub struct AggregateConfig {
    pub thresholds: Vec<f64>,
    /// Nominal central-interval coverage in percent, matched between the
    /// parametric interval and the raw ensemble range upstream.
    pub nominal_coverage: f64,
    pub n_boot: usize,
    /// Mean block length for the bootstrap; per-row `ceil(n^(1/3))` when
    /// unset.
    pub mean_block_len: Option<f64>,
    /// Also bootstrap the Brier skill scores (off by default: several
    /// thresholds multiply the resampling cost).
    pub bss_ci: bool,
    pub seed: u64,
}

/// One aggregated row: mean scores, skill vs. the raw ensemble and vs.
/// climatology, and bootstrap intervals for the skill scores. Skill fields
/// are `None` when the reference mean is numerically zero; interval fields
/// additionally require at least ten cases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub axis: Axis,
    pub key: String,
    pub n_cases: usize,
    /// Cases carrying a climatology reference (subset used for the
    /// vs-climatology columns).
    pub n_clim: usize,
    pub mean_crps_fc: f64,
    pub mean_crps_raw: f64,
    pub mean_crps_clim: Option<f64>,
    pub crpss_vs_raw: Option<f64>,
    pub crpss_vs_raw_ci: Option<SkillCi>,
    pub crpss_vs_clim: Option<f64>,
    pub crpss_vs_clim_ci: Option<SkillCi>,
    pub crpss_raw_vs_clim: Option<f64>,
    pub mean_bs_fc: Vec<f64>,
    pub mean_bs_raw: Vec<f64>,
    pub bss_vs_raw: Vec<Option<f64>>,
    pub bss_vs_raw_ci: Vec<Option<SkillCi>>,
    /// Observed central-interval coverage in percent, same unit as
    /// `nominal_coverage`.
    pub coverage_fc: f64,
    pub coverage_raw: f64,
    pub nominal_coverage: f64,
    pub mae_fc: f64,
    pub mae_raw: f64,
    pub rmse_fc: f64,
    pub rmse_raw: f64,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        sum += v;
        n += 1;
    }
    sum / n as f64
}

/// Bootstrap interval for the skill of the paired series, or `None` when
/// the series is too short for a meaningful resample.
fn skill_interval(
    pairs: &[(f64, f64)],
    n_boot: usize,
    mean_block_len: Option<f64>,
    seed: u64,
) -> Result<Option<SkillCi>> {
    if pairs.len() < 10 || n_boot == 0 {
        return Ok(None);
    }
    let block = mean_block_len.unwrap_or_else(|| default_mean_block_len(pairs.len()));
    bootstrap_ci(pairs, n_boot, block, seed)
}

/// Group `cases` by `axis` and reduce each group. Rows come back sorted by
/// key; the case order inside each group (and hence every bootstrap) is
/// chronological regardless of input order.
pub fn aggregate(cases: &[CaseScore], axis: Axis, cfg: &AggregateConfig) -> Result<Vec<ScoreRow>> {
    let n_thresh = cfg.thresholds.len();
    let mut groups: BTreeMap<String, Vec<&CaseScore>> = BTreeMap::new();
    for case in cases {
        assert_eq!(case.bs_fc.len(), n_thresh, "per-case Brier vector length");
        assert_eq!(case.bs_raw.len(), n_thresh, "per-case Brier vector length");
        groups.entry(axis.key(case)).or_default().push(case);
    }

    let mut rows = Vec::with_capacity(groups.len());
    for (key, mut group) in groups {
        group.sort_by(|a, b| {
            (a.init_time, &a.station_id, a.lead_minutes)
                .cmp(&(b.init_time, &b.station_id, b.lead_minutes))
        });
        let n = group.len();

        let mean_crps_fc = mean(group.iter().map(|c| c.crps_fc));
        let mean_crps_raw = mean(group.iter().map(|c| c.crps_raw));
        let crps_pairs_raw: Vec<(f64, f64)> =
            group.iter().map(|c| (c.crps_fc, c.crps_raw)).collect();

        let clim_subset: Vec<&&CaseScore> =
            group.iter().filter(|c| c.crps_clim.is_some()).collect();
        let n_clim = clim_subset.len();
        let (mean_crps_clim, crpss_vs_clim, crpss_raw_vs_clim, clim_pairs) = if n_clim > 0 {
            let mc = mean(clim_subset.iter().map(|c| c.crps_clim.unwrap()));
            let mf = mean(clim_subset.iter().map(|c| c.crps_fc));
            let mr = mean(clim_subset.iter().map(|c| c.crps_raw));
            let pairs: Vec<(f64, f64)> = clim_subset
                .iter()
                .map(|c| (c.crps_fc, c.crps_clim.unwrap()))
                .collect();
            (Some(mc), skill_score(mf, mc), skill_score(mr, mc), pairs)
        } else {
            (None, None, None, Vec::new())
        };

        let boot_seed = |score: &str| subseed(cfg.seed, &["boot", axis.name(), &key, score]);
        let crpss_vs_raw_ci =
            skill_interval(&crps_pairs_raw, cfg.n_boot, cfg.mean_block_len, boot_seed("crps_raw"))?;
        let crpss_vs_clim_ci =
            skill_interval(&clim_pairs, cfg.n_boot, cfg.mean_block_len, boot_seed("crps_clim"))?;

        let mut mean_bs_fc = Vec::with_capacity(n_thresh);
        let mut mean_bs_raw = Vec::with_capacity(n_thresh);
        let mut bss_vs_raw = Vec::with_capacity(n_thresh);
        let mut bss_vs_raw_ci = Vec::with_capacity(n_thresh);
        for i in 0..n_thresh {
            let bf = mean(group.iter().map(|c| c.bs_fc[i]));
            let br = mean(group.iter().map(|c| c.bs_raw[i]));
            bss_vs_raw.push(skill_score(bf, br));
            if cfg.bss_ci {
                let pairs: Vec<(f64, f64)> =
                    group.iter().map(|c| (c.bs_fc[i], c.bs_raw[i])).collect();
                bss_vs_raw_ci.push(skill_interval(
                    &pairs,
                    cfg.n_boot,
                    cfg.mean_block_len,
                    boot_seed(&format!("bs{i}")),
                )?);
            } else {
                bss_vs_raw_ci.push(None);
            }
            mean_bs_fc.push(bf);
            mean_bs_raw.push(br);
        }

        let obs: Vec<f64> = group.iter().map(|c| c.observation).collect();
        let med_fc: Vec<f64> = group.iter().map(|c| c.median_fc).collect();
        let med_raw: Vec<f64> = group.iter().map(|c| c.median_raw).collect();
        let mean_fc: Vec<f64> = group.iter().map(|c| c.mean_fc).collect();
        let mean_raw: Vec<f64> = group.iter().map(|c| c.mean_raw).collect();

        rows.push(ScoreRow {
            axis,
            key,
            n_cases: n,
            n_clim,
            mean_crps_fc,
            mean_crps_raw,
            mean_crps_clim,
            crpss_vs_raw: skill_score(mean_crps_fc, mean_crps_raw),
            crpss_vs_raw_ci,
            crpss_vs_clim,
            crpss_vs_clim_ci,
            crpss_raw_vs_clim,
            mean_bs_fc,
            mean_bs_raw,
            bss_vs_raw,
            bss_vs_raw_ci,
            coverage_fc: 100.0 * mean(group.iter().map(|c| c.cover_fc)),
            coverage_raw: 100.0 * mean(group.iter().map(|c| c.cover_raw)),
            nominal_coverage: cfg.nominal_coverage,
            mae_fc: mae_rmse(&med_fc, &obs)?.0,
            mae_raw: mae_rmse(&med_raw, &obs)?.0,
            rmse_fc: mae_rmse(&mean_fc, &obs)?.1,
            rmse_raw: mae_rmse(&mean_raw, &obs)?.1,
        });
    }
    Ok(rows)
}
