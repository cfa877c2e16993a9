//! Run configuration: one JSON file drives train, predict, and verify.
//!
//! Command-line flags override individual fields; unknown keys are
//! rejected so typos fail loudly instead of silently using defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::emos::LinkKind;
use crate::error::{Error, Result};
use crate::training::{TemporalScheme, TrainingScheme};

/// Model variant selector, the config-file spelling of [`LinkKind`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Simple,
    SimpleExchangeable,
    Periodic1,
    Periodic2,
}

impl Variant {
    pub fn to_kind(self) -> LinkKind {
        match self {
            Variant::Simple => LinkKind::Simple,
            Variant::SimpleExchangeable => LinkKind::SimpleExchangeable,
            Variant::Periodic1 => LinkKind::PeriodicExchangeable1,
            Variant::Periodic2 => LinkKind::PeriodicExchangeable2,
        }
    }

    /// Exchangeable variants need an explicit member grouping; the simple
    /// variant treats every member as its own group.
    pub fn needs_groups(self) -> bool {
        !matches!(self, Variant::Simple)
    }
}

/// Target variable: raw irradiance, or clear-sky index (irradiance divided
/// by the archive's clear-sky column before fitting).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Irradiance,
    Csi,
}

/// How verification scores a forecast row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMethod {
    /// Parametric CRPS for irradiance-mode rows, the 100-quantile empirical
    /// forecast for clear-sky-index rows.
    #[default]
    Auto,
    Parametric,
    Quantiles,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    pub temporal: TemporalScheme,
    pub spatial: crate::training::SpatialPool,
    /// Minimum training cases per fit; default is twice the variant's
    /// parameter count.
    #[serde(default)]
    pub min_cases: Option<usize>,
}

fn default_quantile_levels() -> Vec<f64> {
    vec![0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95]
}

fn default_csi_quantile_count() -> usize {
    100
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionConfig {
    /// Quantile levels emitted per forecast row.
    #[serde(default = "default_quantile_levels")]
    pub quantile_levels: Vec<f64>,
    /// Size of the equidistant quantile ladder written for clear-sky-index
    /// rows (levels i/(n+1)).
    #[serde(default = "default_csi_quantile_count")]
    pub csi_quantile_count: usize,
}

impl Default for PredictionConfig {
    fn default() -> Self {
        Self {
            quantile_levels: default_quantile_levels(),
            csi_quantile_count: default_csi_quantile_count(),
        }
    }
}

fn default_thresholds() -> Vec<f64> {
    // 40th/60th/90th/95th percentiles of observed nonzero irradiance in the
    // mid-European archives this tool was built around; override per dataset
    vec![25.0, 127.0, 498.0, 604.0]
}

fn default_n_boot() -> usize {
    2000
}

fn default_pit_bins() -> usize {
    20
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerificationConfig {
    /// Brier-score thresholds, same unit as the observations.
    pub thresholds: Vec<f64>,
    /// Central-interval miss probability; default 2/(M+1) so the nominal
    /// coverage matches the raw M-member ensemble range.
    pub alpha: Option<f64>,
    /// Bootstrap replicates for skill-score intervals; 0 disables them.
    pub n_boot: usize,
    /// Mean block length for the stationary bootstrap; default is the cube
    /// root of the series length, rounded up.
    pub mean_block_len: Option<f64>,
    /// Also bootstrap Brier skill scores (slower).
    pub bss_ci: bool,
    pub pit_bins: usize,
    pub score_method: ScoreMethod,
    /// Days of past observations forming the climatology reference;
    /// defaults to the rolling window length, or 365 for monthly-expanding
    /// training.
    pub climatology_window_days: Option<u32>,
}

impl Default for VerificationConfig {
    fn default() -> Self {
        Self {
            thresholds: default_thresholds(),
            alpha: None,
            n_boot: default_n_boot(),
            mean_block_len: None,
            bss_ci: false,
            pit_bins: default_pit_bins(),
            score_method: ScoreMethod::Auto,
            climatology_window_days: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Forecast archive CSV.
    pub archive: PathBuf,
    /// Member-grouping JSON; required for every variant except `simple`.
    #[serde(default)]
    pub groups: Option<PathBuf>,
    pub variant: Variant,
    pub mode: Mode,
    /// Clear-sky irradiance (W/m²) below which CSI-mode cases skip the
    /// transform and fall back to the raw ensemble. Defaults to the
    /// built-in sunrise/sunset guard; set to 0 to transform every case
    /// with positive clear-sky irradiance.
    #[serde(default)]
    pub csi_threshold: Option<f64>,
    /// Master seed for every random draw (PIT randomization, tie-broken
    /// ranks, bootstrap). The `--seed` flag overrides it and is mandatory
    /// when this field is absent.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub training: TrainingConfig,
    #[serde(default)]
    pub prediction: PredictionConfig,
    #[serde(default)]
    pub verification: VerificationConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("invalid config {}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    /// Structural validation. Returns human-readable warnings for legal but
    /// suspicious settings (the caller decides where to print them).
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();

        if self.variant.needs_groups() && self.groups.is_none() {
            return Err(Error::Config(format!(
                "variant {:?} requires a member-grouping file (`groups`)",
                self.variant
            )));
        }
        if let Some(t) = self.csi_threshold {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::Config(
                    "csi_threshold must be finite and nonnegative".into(),
                ));
            }
        }

        self.scheme()?.validate()?;
        if let TemporalScheme::Rolling { length_days } = self.training.temporal {
            if self.variant.to_kind().harmonic_order().is_some() && length_days < 180 {
                warnings.push(format!(
                    "periodic variant with a {length_days}-day rolling window: \
                     harmonic coefficients need at least ~180 days to be identifiable"
                ));
            }
        }
        if self.training.min_cases == Some(0) {
            return Err(Error::Config("training.min_cases must be positive".into()));
        }

        let levels = &self.prediction.quantile_levels;
        if levels.is_empty() {
            return Err(Error::Config("prediction.quantile_levels must be nonempty".into()));
        }
        if !levels.windows(2).all(|w| w[0] < w[1]) || levels[0] <= 0.0 || levels[levels.len() - 1] >= 1.0 {
            return Err(Error::Config(
                "prediction.quantile_levels must be strictly increasing within (0, 1)".into(),
            ));
        }
        if self.prediction.csi_quantile_count == 0 {
            return Err(Error::Config("prediction.csi_quantile_count must be positive".into()));
        }

        let v = &self.verification;
        if let Some(alpha) = v.alpha {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::Config("verification.alpha must lie in (0, 1)".into()));
            }
        }
        if v.thresholds.is_empty() || !v.thresholds.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config(
                "verification.thresholds must be nonempty and strictly increasing".into(),
            ));
        }
        if v.thresholds.iter().any(|t| !t.is_finite()) {
            return Err(Error::Config("verification.thresholds must be finite".into()));
        }
        if let Some(b) = v.mean_block_len {
            if !(b >= 1.0) {
                return Err(Error::Config("verification.mean_block_len must be at least 1".into()));
            }
        }
        if v.pit_bins < 2 {
            return Err(Error::Config("verification.pit_bins must be at least 2".into()));
        }
        if v.climatology_window_days == Some(0) {
            return Err(Error::Config(
                "verification.climatology_window_days must be positive".into(),
            ));
        }

        Ok(warnings)
    }

    pub fn scheme(&self) -> Result<TrainingScheme> {
        Ok(TrainingScheme {
            temporal: self.training.temporal,
            spatial: self.training.spatial,
            min_cases: self.training.min_cases.unwrap_or(0), // pipeline fills the default
        })
    }

    /// Effective CSI passthrough threshold (W/m²).
    pub fn csi_threshold(&self) -> f64 {
        self.csi_threshold.unwrap_or(crate::csi::CSI_EPS)
    }

    /// Climatology window: explicit setting, else the training window
    /// length, else a full year for expanding schemes.
    pub fn climatology_window_days(&self) -> u32 {
        self.verification.climatology_window_days.unwrap_or(match self.training.temporal {
            TemporalScheme::Rolling { length_days } => length_days,
            TemporalScheme::MonthlyExpanding { .. } => 365,
        })
    }
}

/// Environment variable naming the fallback output directory.
pub const OUT_DIR_ENV: &str = "CL0EMOS_OUT_DIR";

/// Output directory precedence: explicit flag, config field, environment.
pub fn resolve_output_dir(flag: Option<PathBuf>, config: &RunConfig) -> Result<PathBuf> {
    flag.or_else(|| config.output_dir.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .ok_or_else(|| {
            Error::Config(format!(
                "no output directory: pass --out, set `output_dir` in the config, or set {OUT_DIR_ENV}"
            ))
        })
}

/// Seed precedence: explicit flag, config field; mandatory for commands
/// that draw random numbers.
pub fn resolve_seed(flag: Option<u64>, config: &RunConfig) -> Result<u64> {
    flag.or(config.seed).ok_or_else(|| {
        Error::Config("no seed: pass --seed or set `seed` in the config".into())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::training::SpatialPool;

    fn base_json() -> serde_json::Value {
        serde_json::json!({
            "archive": "archive.csv",
            "groups": "groups.json",
            "variant": "simple_exchangeable",
            "mode": "irradiance",
            "seed": 42,
            "training": {
                "temporal": {"rolling": {"length_days": 31}},
                "spatial": "regional"
            }
        })
    }

    fn parse(v: serde_json::Value) -> RunConfig {
        serde_json::from_value(v).unwrap()
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse(base_json());
        assert!(c.validate().unwrap().is_empty());
        assert_eq!(c.prediction.quantile_levels.len(), 7);
        assert_eq!(c.prediction.csi_quantile_count, 100);
        assert_eq!(c.verification.thresholds, vec![25.0, 127.0, 498.0, 604.0]);
        assert_eq!(c.verification.n_boot, 2000);
        assert_eq!(c.verification.pit_bins, 20);
        assert_eq!(c.verification.score_method, ScoreMethod::Auto);
        assert_eq!(c.climatology_window_days(), 31);
        assert_eq!(c.training.min_cases, None);
        assert_eq!(resolve_seed(None, &c).unwrap(), 42);
        assert_eq!(resolve_seed(Some(7), &c).unwrap(), 7);
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut v = base_json();
        v["trainnig"] = serde_json::json!({});
        assert!(serde_json::from_value::<RunConfig>(v).is_err());
    }

    #[test]
    fn variant_spellings() {
        for (name, kind) in [
            ("simple", LinkKind::Simple),
            ("simple_exchangeable", LinkKind::SimpleExchangeable),
            ("periodic1", LinkKind::PeriodicExchangeable1),
            ("periodic2", LinkKind::PeriodicExchangeable2),
        ] {
            let v: Variant = serde_json::from_value(serde_json::json!(name)).unwrap();
            assert_eq!(v.to_kind(), kind);
        }
        assert!(serde_json::from_value::<Variant>(serde_json::json!("periodic_3")).is_err());
    }

    #[test]
    fn exchangeable_variants_require_groups() {
        let mut v = base_json();
        v.as_object_mut().unwrap().remove("groups");
        let c = parse(v.clone());
        assert!(matches!(c.validate(), Err(Error::Config(_))));

        v["variant"] = serde_json::json!("simple");
        let c = parse(v);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn short_window_periodic_warns() {
        let mut v = base_json();
        v["variant"] = serde_json::json!("periodic1");
        let c = parse(v);
        let warnings = c.validate().unwrap();
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("180"));
    }

    #[test]
    fn bad_settings_rejected() {
        let cases = [
            ("prediction", serde_json::json!({"quantile_levels": [0.5, 0.5]})),
            ("prediction", serde_json::json!({"quantile_levels": [0.0, 0.5]})),
            ("prediction", serde_json::json!({"quantile_levels": []})),
            ("prediction", serde_json::json!({"csi_quantile_count": 0})),
            ("verification", serde_json::json!({"alpha": 1.5})),
            ("verification", serde_json::json!({"thresholds": []})),
            ("verification", serde_json::json!({"thresholds": [127.0, 25.0]})),
            ("verification", serde_json::json!({"mean_block_len": 0.5})),
            ("verification", serde_json::json!({"pit_bins": 1})),
            ("verification", serde_json::json!({"climatology_window_days": 0})),
            ("training", serde_json::json!({
                "temporal": {"rolling": {"length_days": 0}},
                "spatial": "local"
            })),
        ];
        for (key, val) in cases {
            let mut v = base_json();
            v[key] = val;
            let c = parse(v.clone());
            assert!(c.validate().is_err(), "expected rejection for {key} = {v:?}");
        }
    }

    #[test]
    fn scheme_and_spatial_round_trip() {
        let c = parse(base_json());
        let s = c.scheme().unwrap();
        assert_eq!(s.spatial, SpatialPool::Regional);
        assert!(matches!(s.temporal, TemporalScheme::Rolling { length_days: 31 }));

        let monthly = serde_json::json!({"monthly_expanding": {"start": "2020-01-01"}});
        let mut v = base_json();
        v["training"]["temporal"] = monthly;
        let c = parse(v);
        assert_eq!(c.climatology_window_days(), 365);
    }

    #[test]
    fn output_dir_precedence() {
        let mut c = parse(base_json());
        let flag = Some(PathBuf::from("/tmp/flag"));
        assert_eq!(resolve_output_dir(flag, &c).unwrap(), PathBuf::from("/tmp/flag"));
        c.output_dir = Some(PathBuf::from("/tmp/conf"));
        assert_eq!(resolve_output_dir(None, &c).unwrap(), PathBuf::from("/tmp/conf"));
    }

    #[test]
    fn config_json_round_trips() {
        let c = parse(base_json());
        let text = serde_json::to_string_pretty(&c).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), serde_json::to_string(&c).unwrap());
    }
}
