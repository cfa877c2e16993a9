//! Training-set assembly: temporal windows (rolling or monthly expanding)
//! and spatial pooling (local or regional), keyed per lead time and
//! initialization hour.
//!
//! Selection never sees the target date and never returns cases with
//! missing observations, so fits cannot leak verification information.

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::data::ForecastCase;
use crate::error::{Error, Result};

/// Temporal window shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemporalScheme {
    /// The `length_days` calendar days preceding the target date
    /// (init dates in `[target - n, target - 1]`).
    Rolling { length_days: u32 },
    /// All data from `start` up to (excluding) the first day of the target
    /// date's month; grows as the target advances.
    MonthlyExpanding { start: NaiveDate },
}

/// Spatial pooling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpatialPool {
    /// Only the target station contributes; one coefficient set per station.
    Local,
    /// All stations contribute to one shared coefficient set.
    Regional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingScheme {
    pub temporal: TemporalScheme,
    pub spatial: SpatialPool,
    /// Fits are refused below this case count; the caller falls back to the
    /// most recent fit, or to raw-ensemble passthrough when none exists.
    pub min_cases: usize,
}

impl TrainingScheme {
    /// Config-level sanity checks.
    pub fn validate(&self) -> Result<()> {
        match self.temporal {
            TemporalScheme::Rolling { length_days } if length_days < 1 => Err(Error::Config(
                "rolling window length must be at least 1 day".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// The cell and date a fit is for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellTarget<'a> {
    pub station_id: &'a str,
    pub init_minutes: u32,
    pub lead_minutes: u32,
    pub target_date: NaiveDate,
}

impl std::fmt::Display for CellTarget<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "station {} init +{}min lead {}min target {}",
            self.station_id, self.init_minutes, self.lead_minutes, self.target_date
        )
    }
}

/// Selects the training cases for one cell and target date, in archive
/// order. See the module docs for the selection rules.
///
/// `min_cases` bounds the *informative* cases: those with any nonzero
/// member or observation. All-zero (night) cases still enter the window --
/// they anchor the zero-fraction predictor -- but they carry no scale
/// information, so a window of mostly-night cases with a handful of dawn
/// cases is rejected rather than fitted from a few effective samples. A
/// window that is entirely night is accepted whenever it meets the raw
/// count: it fits the degenerate night model, which needs no estimation.
pub fn select<'a>(
    archive: &'a [ForecastCase],
    scheme: &TrainingScheme,
    target: &CellTarget,
) -> Result<Vec<&'a ForecastCase>> {
    let (date_lo, date_hi) = date_bounds(&scheme.temporal, target.target_date)?;

    let picked: Vec<&ForecastCase> = archive
        .iter()
        .filter(|c| {
            c.lead_minutes == target.lead_minutes
                && c.init_minutes_of_day() == target.init_minutes
                && c.observation.is_some()
                && {
                    let d = c.init_time.date_naive();
                    d >= date_lo && d <= date_hi
                }
                && (scheme.spatial == SpatialPool::Regional
                    || c.station_id == target.station_id)
        })
        .collect();

    debug_assert!(picked
        .iter()
        .all(|c| c.init_time.date_naive() < target.target_date));

    let informative = picked
        .iter()
        .filter(|c| {
            c.observation.is_some_and(|y| y > 0.0) || c.members.iter().any(|&m| m > 0.0)
        })
        .count();
    if picked.len() < scheme.min_cases || (informative > 0 && informative < scheme.min_cases) {
        return Err(Error::Data(format!(
            "insufficient training data for cell [{target}]: {} cases ({} informative), need {}",
            picked.len(),
            informative,
            scheme.min_cases
        )));
    }
    Ok(picked)
}

/// Inclusive init-date bounds of the training window for a target date.
pub fn date_bounds(temporal: &TemporalScheme, target_date: NaiveDate) -> Result<(NaiveDate, NaiveDate)> {
    match *temporal {
        TemporalScheme::Rolling { length_days } => {
            let hi = target_date
                .pred_opt()
                .ok_or_else(|| Error::Config("target date out of range".into()))?;
            let lo = target_date - chrono::Duration::days(i64::from(length_days));
            Ok((lo, hi))
        }
        TemporalScheme::MonthlyExpanding { start } => {
            let month_start = NaiveDate::from_ymd_opt(target_date.year(), target_date.month(), 1)
                .expect("first of month is always valid");
            if start >= month_start {
                return Err(Error::Config(format!(
                    "monthly-expanding start {start} does not precede the month of target {target_date}"
                )));
            }
            let hi = month_start.pred_opt().expect("date in range");
            Ok((start, hi))
        }
    }
}

/// The key a fit is stored under: the exact date for rolling windows, the
/// month for monthly-expanding (every date in a month shares one fit).
pub fn fit_period_key(temporal: &TemporalScheme, target_date: NaiveDate) -> String {
    match temporal {
        TemporalScheme::Rolling { .. } => target_date.format("%Y-%m-%d").to_string(),
        TemporalScheme::MonthlyExpanding { .. } => target_date.format("%Y-%m").to_string(),
    }
}
