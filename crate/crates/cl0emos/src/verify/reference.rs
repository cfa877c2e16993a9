//! Climatology reference forecasts: past observations reused as an
//! empirical ensemble.
//!
//! For each case, the reference ensemble collects the observations at the
//! same station and the same valid time-of-day over the training window
//! preceding the case's init date. A 31-day window yields a 31-member
//! persistence climate, a 365-day window a full annual climate (minus
//! archive gaps).

use std::collections::BTreeMap;

use chrono::{NaiveDate, Timelike};

use crate::data::ForecastCase;
use crate::error::{Error, Result};

/// Observations indexed by (station, valid time-of-day in minutes) and then
/// by valid date. Distinct (init, lead) pairs verifying at the same instant
/// share one observation, so the index also deduplicates.
#[derive(Debug, Default, Clone)]
pub struct ObsIndex {
    map: BTreeMap<(String, u32), BTreeMap<NaiveDate, f64>>,
}

impl ObsIndex {
    pub fn build(cases: &[ForecastCase]) -> Self {
        let mut map: BTreeMap<(String, u32), BTreeMap<NaiveDate, f64>> = BTreeMap::new();
        for c in cases {
            if let Some(y) = c.observation {
                let vt = c.valid_time();
                let tod = vt.time().num_seconds_from_midnight() / 60;
                map.entry((c.station_id.clone(), tod))
                    .or_default()
                    .insert(vt.date_naive(), y);
            }
        }
        Self { map }
    }

    /// Observation at one station and valid instant, if archived.
    pub fn get(&self, station: &str, valid_date: NaiveDate, tod_minutes: u32) -> Option<f64> {
        self.map
            .get(&(station.to_owned(), tod_minutes))
            .and_then(|by_date| by_date.get(&valid_date))
            .copied()
    }
}

/// Climatology ensemble for one case: observations at the case's station
/// and valid time-of-day whose valid dates correspond to init dates in
/// `[init_date − window_days, init_date − 1]`. Members are in
/// chronological order; archive gaps shrink the ensemble. May be empty at
/// the start of the archive.
pub fn climatology_members(
    index: &ObsIndex,
    station: &str,
    init_date: NaiveDate,
    init_minutes: u32,
    lead_minutes: u32,
    window_days: u32,
) -> Result<Vec<f64>> {
    if window_days == 0 {
        return Err(Error::Config("climatology window must be at least 1 day".into()));
    }
    let total = init_minutes + lead_minutes;
    let tod = total % 1440;
    let day_offset = i64::from(total / 1440);

    let mut members = Vec::new();
    for back in (1..=i64::from(window_days)).rev() {
        let past_valid = init_date + chrono::Duration::days(day_offset - back);
        if let Some(y) = index.get(station, past_valid, tod) {
            members.push(y);
        }
    }
    Ok(members)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::crps_empirical;
    use chrono::{TimeZone, Utc};

    fn archive_days(station: &str, days: u32, lead: u32, obs: impl Fn(u32) -> f64) -> Vec<ForecastCase> {
        (0..days)
            .map(|d| ForecastCase {
                station_id: station.into(),
                init_time: Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap()
                    + chrono::Duration::days(i64::from(d)),
                lead_minutes: lead,
                observation: Some(obs(d)),
                clear_sky: None,
                members: vec![0.0],
            })
            .collect()
    }

    #[test]
    fn window_members_in_order() {
        let cases = archive_days("A", 60, 720, |d| d as f64);
        let index = ObsIndex::build(&cases);
        let target = NaiveDate::from_ymd_opt(2020, 2, 10).unwrap(); // day 40
        let members = climatology_members(&index, "A", target, 0, 720, 31).unwrap();
        assert_eq!(members.len(), 31);
        // chronological: days 9..39
        assert_eq!(members[0], 9.0);
        assert_eq!(members[30], 39.0);
    }

    #[test]
    fn lead_past_midnight_shifts_valid_date() {
        // lead 1560 min = 26 h: valid tod 02:00, valid date = init + 1
        let cases = archive_days("A", 60, 1560, |d| 100.0 + d as f64);
        let index = ObsIndex::build(&cases);
        let target = NaiveDate::from_ymd_opt(2020, 2, 10).unwrap();
        let members = climatology_members(&index, "A", target, 0, 1560, 31).unwrap();
        assert_eq!(members.len(), 31);
        // training init day 9 verifies on day 10
        assert_eq!(members[0], 109.0);
    }

    #[test]
    fn gaps_and_stations_respected() {
        let mut cases = archive_days("A", 40, 720, |_| 5.0);
        cases[10].observation = None;
        cases.extend(archive_days("B", 40, 720, |_| 9.0));
        let index = ObsIndex::build(&cases);
        let target = NaiveDate::from_ymd_opt(2020, 2, 5).unwrap(); // day 35
        let members = climatology_members(&index, "A", target, 0, 720, 31).unwrap();
        assert_eq!(members.len(), 30);
        assert!(members.iter().all(|&m| m == 5.0));
    }

    #[test]
    fn duplicate_valid_times_deduplicate() {
        // two (init, lead) pairs verifying at the same instant
        let mut cases = archive_days("A", 40, 1440, |d| d as f64); // day d + 1 at 00:00
        cases.extend(archive_days("A", 40, 2880, |d| d as f64)); // day d + 2 at 00:00
        let index = ObsIndex::build(&cases);
        let target = NaiveDate::from_ymd_opt(2020, 2, 5).unwrap();
        let members = climatology_members(&index, "A", target, 0, 1440, 10).unwrap();
        assert_eq!(members.len(), 10);
    }

    #[test]
    fn constant_history_scores_zero() {
        let cases = archive_days("A", 40, 720, |_| 7.5);
        let index = ObsIndex::build(&cases);
        let target = NaiveDate::from_ymd_opt(2020, 2, 5).unwrap();
        let members = climatology_members(&index, "A", target, 0, 720, 31).unwrap();
        assert_eq!(crps_empirical(&members, 7.5).unwrap(), 0.0);
    }

    #[test]
    fn empty_window_rejected() {
        let index = ObsIndex::default();
        assert!(climatology_members(&index, "A", NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(), 0, 0, 0).is_err());
    }
}
