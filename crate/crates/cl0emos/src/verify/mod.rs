//! Forecast verification: proper scores, calibration diagnostics, skill
//! scores with bootstrap confidence intervals, reference forecasts, and
//! aggregation along reporting axes.

pub mod bootstrap;
pub mod histogram;
pub mod reference;
pub mod report;
pub mod scores;

pub use bootstrap::{bootstrap_ci, default_mean_block_len, SkillCi};
pub use histogram::{kolmogorov_uniform, pit_histogram, rank_histogram, Histogram, HistogramKind};
pub use reference::{climatology_members, ObsIndex};
pub use report::{aggregate, AggregateConfig, Axis, CaseScore, ScoreRow};
pub use scores::{
    brier, coverage_ensemble, coverage_parametric, crps_empirical, crps_parametric, ensemble_cdf,
    ensemble_mean, ensemble_median, mae_rmse, nominal_coverage, pit, rank, skill_score, SS_EPS,
};
