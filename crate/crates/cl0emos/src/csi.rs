//! Clear-sky-index workflow: normalize irradiance by clear-sky irradiance
//! before fitting, and map predictive quantiles back to irradiance space.
//!
//! Dividing by the clear-sky value removes most of the deterministic
//! diurnal/annual cycle, so one set of EMOS coefficients serves a wider
//! range of sun elevations. Because scaling commutes with censoring at zero
//! (`c·max(0, L) = max(0, c·L)`), the irradiance-space predictive
//! distribution is again censored-logistic with both parameters scaled.

use serde::{Deserialize, Serialize};

use crate::data::ForecastCase;
use crate::dist::CensoredLogistic;
use crate::error::{Error, Result};

/// Clear-sky irradiance below this (W/m²) skips the CSI transform: the
/// division becomes unstable around sunrise/sunset and is pointless at
/// night.
pub const CSI_EPS: f64 = 5.0;

/// Result of the forward transform.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiCase {
    pub case: ForecastCase,
    /// False when the case was passed through untransformed (clear-sky
    /// value below [`CSI_EPS`]).
    pub transformed: bool,
}

/// Divides observation and members by the clear-sky irradiance. Cases whose
/// clear-sky value is below [`CSI_EPS`] are passed through untransformed
/// with `transformed = false`; a missing clear-sky value is an error (the
/// archive lacks the column the mode requires).
pub fn to_csi(case: &ForecastCase) -> Result<CsiCase> {
    to_csi_with(case, CSI_EPS)
}

/// [`to_csi`] with an explicit passthrough threshold: the transform runs
/// only when the clear-sky irradiance is at least `threshold`. A zero
/// threshold still passes exact-zero clear-sky cases through (the division
/// would be undefined).
pub fn to_csi_with(case: &ForecastCase, threshold: f64) -> Result<CsiCase> {
    let cs = case.clear_sky.ok_or_else(|| {
        Error::Data(format!(
            "clear_sky missing for ({}, {}, {} min); required in CSI mode",
            case.station_id,
            case.init_time.to_rfc3339(),
            case.lead_minutes
        ))
    })?;
    if cs < threshold || cs <= 0.0 {
        return Ok(CsiCase {
            case: case.clone(),
            transformed: false,
        });
    }
    let mut out = case.clone();
    out.observation = case.observation.map(|y| y / cs);
    out.members = case.members.iter().map(|m| m / cs).collect();
    Ok(CsiCase {
        case: out,
        transformed: true,
    })
}

/// A nonparametric forecast as a ladder of quantiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileForecast {
    /// Strictly increasing probabilities in (0, 1).
    pub levels: Vec<f64>,
    /// Nondecreasing values, same length as `levels`.
    pub values: Vec<f64>,
}

impl QuantileForecast {
    pub fn new(levels: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if levels.len() != values.len() {
            return Err(Error::Config("quantile levels/values length mismatch".into()));
        }
        if levels.windows(2).any(|w| w[0] >= w[1])
            || levels.first().is_some_and(|&p| p <= 0.0)
            || levels.last().is_some_and(|&p| p >= 1.0)
        {
            return Err(Error::Config(
                "quantile levels must be strictly increasing inside (0, 1)".into(),
            ));
        }
        if values.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Config("quantile values must be nondecreasing".into()));
        }
        Ok(Self { levels, values })
    }
}

/// `n` equidistant interior probability levels `i/(n+1)`, `i = 1..n`.
pub fn quantile_levels(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 / (n + 1) as f64).collect()
}

/// Back-transforms a CSI-space predictive distribution to an irradiance
/// quantile ladder: `value_i = clear_sky · quantile(p_i)`.
///
/// The ladder doubles as an `n`-member empirical forecast when scoring
/// CSI-mode output.
pub fn csi_quantiles_to_irradiance(
    params: &CensoredLogistic,
    clear_sky: f64,
    n_levels: usize,
) -> QuantileForecast {
    assert!(clear_sky >= 0.0, "clear-sky irradiance must be nonnegative");
    let levels = quantile_levels(n_levels);
    let values = levels.iter().map(|&p| clear_sky * params.quantile(p)).collect();
    QuantileForecast { levels, values }
}
