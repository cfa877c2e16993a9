//! Synthetic forecast archives with known truth.
//!
//! The generator builds a stylized irradiance process: a deterministic
//! clear-sky envelope (diurnal arc, annual amplitude and day-length cycle,
//! per-station level), a slowly varying cloud state (daily AR(1)
//! clearness), and logistic observation noise censored at zero. Ensemble
//! members are draws around the truth with configurable additive bias and
//! spread deflation, so a perfectly calibrated ensemble (`bias 0`,
//! `spread 1`) and a miscalibrated one (`bias 0.2`, `spread 0.5`) come from
//! the same process. Because the observation noise is logistic and the
//! censoring is at zero, the post-processing family fits this process
//! exactly; end-to-end tests can therefore measure recovery rather than
//! approximation error.

use chrono::{Datelike, NaiveDate, TimeZone, Utc};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::data::{Archive, ForecastCase, GroupDef, GroupSpecFile, IngestSummary};
use crate::error::{Error, Result};
use crate::seed::subseed;

/// Peak clear-sky irradiance of the brightest station at the annual
/// maximum, W/m².
const PEAK_IRRADIANCE: f64 = 700.0;
/// Clear-sky envelopes below this are treated as deep night: exact zeros.
const NIGHT_LIMIT: f64 = 1.0;

/// Preset miscalibration settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Members drawn from the same distribution as the observation.
    Calibrated,
    /// Members 20% low with half the observation spread.
    Biased,
}

impl Scenario {
    pub fn bias_spread(self) -> (f64, f64) {
        match self {
            Scenario::Calibrated => (0.0, 1.0),
            Scenario::Biased => (0.2, 0.5),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulateSpec {
    pub stations: usize,
    pub start: NaiveDate,
    pub days: u32,
    /// Daily forecast initialization, minutes after midnight UTC.
    pub init_minutes: u32,
    pub lead_start_minutes: u32,
    pub lead_step_minutes: u32,
    pub lead_count: u32,
    pub members: usize,
    /// Additive member bias as a fraction of the truth signal.
    pub bias_frac: f64,
    /// Member spread as a multiple of the observation noise scale.
    pub spread_factor: f64,
    pub seed: u64,
}

impl SimulateSpec {
    /// Daily archive: one 00 UTC init, hourly leads covering the next day,
    /// an eleven-member ensemble (one control plus ten exchangeable
    /// members).
    pub fn new(stations: usize, start: NaiveDate, days: u32, scenario: Scenario, seed: u64) -> Self {
        let (bias_frac, spread_factor) = scenario.bias_spread();
        Self {
            stations,
            start,
            days,
            init_minutes: 0,
            lead_start_minutes: 60,
            lead_step_minutes: 60,
            lead_count: 24,
            members: 11,
            bias_frac,
            spread_factor,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.stations == 0 || self.stations > 99 {
            return Err(Error::Config("stations must lie in 1..=99".into()));
        }
        if self.days == 0 {
            return Err(Error::Config("days must be positive".into()));
        }
        if self.lead_count == 0 || self.lead_step_minutes == 0 {
            return Err(Error::Config("lead grid must be nonempty with a positive step".into()));
        }
        if self.members < 2 {
            return Err(Error::Config("at least two ensemble members required".into()));
        }
        if self.init_minutes >= 1440 {
            return Err(Error::Config("init_minutes must lie within the day".into()));
        }
        if !(self.bias_frac.is_finite() && self.bias_frac < 1.0) {
            return Err(Error::Config("bias_frac must be finite and below 1".into()));
        }
        if !(self.spread_factor.is_finite() && self.spread_factor > 0.0) {
            return Err(Error::Config("spread_factor must be positive".into()));
        }
        Ok(())
    }
}

/// Standard logistic draw by inverse transform.
fn logistic_draw<R: Rng>(rng: &mut R) -> f64 {
    let u: f64 = rng.gen();
    u.ln() - (1.0 - u).ln()
}

/// Clear-sky envelope for one station at one instant, W/m². Zero outside
/// the daylight arc; day length and amplitude follow an annual cycle
/// peaking near the June solstice, and stations get slightly different
/// levels so regional pooling has structure.
pub fn clear_sky_envelope(station_idx: usize, date: NaiveDate, minutes_of_day: u32) -> f64 {
    let doy = date.ordinal() as f64;
    let season = (std::f64::consts::TAU * (doy - 81.0) / 365.0).sin();
    let amplitude = 1.0 + 0.35 * season;
    let half_day = 6.0 + 2.2 * season;
    let (rise, set) = (12.0 - half_day, 12.0 + half_day);
    let h = minutes_of_day as f64 / 60.0;
    if h <= rise || h >= set {
        return 0.0;
    }
    let arc = (std::f64::consts::PI * (h - rise) / (set - rise)).sin();
    let level = 1.0 - 0.06 * station_idx as f64;
    PEAK_IRRADIANCE * level * amplitude * arc.powf(1.3)
}

/// Truth signal and observation-noise scale at one instant, given the
/// day's clearness state. Returns `(truth, noise_scale)`; both zero in
/// deep night.
fn truth_at(envelope: f64, clearness: f64, wiggle: f64) -> (f64, f64) {
    if envelope < NIGHT_LIMIT {
        return (0.0, 0.0);
    }
    let g = (envelope * clearness * (1.0 + 0.15 * wiggle)).max(0.0);
    let sigma = 0.12 * g + 0.03 * envelope + 2.0;
    (g, sigma)
}

/// Generate the archive and the matching member grouping (control plus one
/// exchangeable group). Deterministic in `spec.seed`; stations are
/// independent streams, so changing the station count does not disturb
/// existing stations.
pub fn simulate(spec: &SimulateSpec) -> Result<(Archive, GroupSpecFile)> {
    spec.validate()?;

    let member_columns: Vec<String> =
        (1..=spec.members).map(|i| format!("member_{i:02}")).collect();
    let groups = GroupSpecFile {
        groups: vec![
            GroupDef { name: "control".into(), members: member_columns[..1].to_vec() },
            GroupDef { name: "perturbed".into(), members: member_columns[1..].to_vec() },
        ],
    };

    // horizon may reach past the last init day
    let horizon_days = ((spec.init_minutes
        + spec.lead_start_minutes
        + (spec.lead_count - 1) * spec.lead_step_minutes)
        / 1440) as i64
        + 1;

    let mut cases = Vec::new();
    for s in 0..spec.stations {
        let station_id = format!("S{:02}", s + 1);
        let mut rng_truth =
            ChaCha8Rng::seed_from_u64(subseed(spec.seed, &["sim", &station_id, "truth"]));
        let mut rng_members =
            ChaCha8Rng::seed_from_u64(subseed(spec.seed, &["sim", &station_id, "members"]));

        // daily AR(1) clearness, then hourly truth over the covered span
        let total_days = i64::from(spec.days) + horizon_days;
        let mut clearness = Vec::with_capacity(total_days as usize);
        let mut kappa = 0.65;
        for _ in 0..total_days {
            kappa = (0.65 + 0.8 * (kappa - 0.65) + 0.18 * 0.55 * logistic_draw(&mut rng_truth))
                .clamp(0.05, 1.1);
            clearness.push(kappa);
        }

        // truth and observation per (day, minute-of-day) on the lead grid
        let mut truth = std::collections::BTreeMap::new();
        for d in 0..total_days {
            let date = spec.start + chrono::Duration::days(d);
            for lead in 0..spec.lead_count {
                let minutes = spec.init_minutes
                    + spec.lead_start_minutes
                    + lead * spec.lead_step_minutes;
                let (day_offset, mod_minutes) = (i64::from(minutes / 1440), minutes % 1440);
                let valid_date = date + chrono::Duration::days(day_offset);
                let day_idx = d + day_offset;
                if day_idx >= total_days {
                    continue;
                }
                let key = (valid_date, mod_minutes);
                if truth.contains_key(&key) {
                    continue;
                }
                let envelope = clear_sky_envelope(s, valid_date, mod_minutes);
                let wiggle = logistic_draw(&mut rng_truth);
                let (g, sigma) = truth_at(envelope, clearness[day_idx as usize], wiggle);
                let obs = if sigma == 0.0 {
                    0.0
                } else {
                    (g + sigma * logistic_draw(&mut rng_truth)).max(0.0)
                };
                truth.insert(key, (envelope, g, sigma, obs));
            }
        }

        for d in 0..i64::from(spec.days) {
            let init_date = spec.start + chrono::Duration::days(d);
            let init_time = Utc
                .with_ymd_and_hms(init_date.year(), init_date.month(), init_date.day(), 0, 0, 0)
                .unwrap()
                + chrono::Duration::minutes(i64::from(spec.init_minutes));
            for lead in 0..spec.lead_count {
                let lead_minutes = spec.lead_start_minutes + lead * spec.lead_step_minutes;
                let minutes = spec.init_minutes + lead_minutes;
                let valid_date = init_date + chrono::Duration::days(i64::from(minutes / 1440));
                let key = (valid_date, minutes % 1440);
                let &(envelope, g, sigma, obs) = truth.get(&key).expect("truth covers horizon");
                let members: Vec<f64> = if sigma == 0.0 {
                    vec![0.0; spec.members]
                } else {
                    (0..spec.members)
                        .map(|_| {
                            ((1.0 - spec.bias_frac) * g
                                + spec.spread_factor * sigma * logistic_draw(&mut rng_members))
                            .max(0.0)
                        })
                        .collect()
                };
                cases.push(ForecastCase {
                    station_id: station_id.clone(),
                    init_time,
                    lead_minutes,
                    observation: Some(obs),
                    clear_sky: Some(envelope),
                    members,
                });
            }
        }
    }

    cases.sort_by(|a, b| {
        (&a.station_id, a.init_time, a.lead_minutes)
            .cmp(&(&b.station_id, b.init_time, b.lead_minutes))
    });
    let archive = Archive {
        member_columns,
        has_clear_sky: true,
        ingest: IngestSummary { rows: cases.len(), ..IngestSummary::default() },
        cases,
    };
    Ok((archive, groups))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(days: u32, scenario: Scenario, seed: u64) -> SimulateSpec {
        SimulateSpec::new(2, NaiveDate::from_ymd_opt(2021, 3, 1).unwrap(), days, scenario, seed)
    }

    #[test]
    fn shape_and_ordering() {
        let (archive, groups) = simulate(&spec(10, Scenario::Biased, 5)).unwrap();
        assert_eq!(archive.cases.len(), 2 * 10 * 24);
        assert_eq!(archive.member_columns.len(), 11);
        assert_eq!(groups.groups.len(), 2);
        assert_eq!(groups.groups[0].members.len(), 1);
        assert_eq!(groups.groups[1].members.len(), 10);
        assert!(archive
            .cases
            .windows(2)
            .all(|w| (&w[0].station_id, w[0].init_time, w[0].lead_minutes)
                <= (&w[1].station_id, w[1].init_time, w[1].lead_minutes)));
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let a = simulate(&spec(5, Scenario::Biased, 5)).unwrap().0;
        let b = simulate(&spec(5, Scenario::Biased, 5)).unwrap().0;
        let c = simulate(&spec(5, Scenario::Biased, 6)).unwrap().0;
        assert_eq!(a.cases, b.cases);
        assert_ne!(a.cases, c.cases);
    }

    #[test]
    fn extra_station_does_not_disturb_existing_ones() {
        let mut two = spec(5, Scenario::Biased, 5);
        let mut three = spec(5, Scenario::Biased, 5);
        two.stations = 2;
        three.stations = 3;
        let a = simulate(&two).unwrap().0;
        let b = simulate(&three).unwrap().0;
        let first: Vec<ForecastCase> =
            b.cases.iter().filter(|c| c.station_id != "S03").cloned().collect();
        assert_eq!(a.cases, first);
    }

    #[test]
    fn night_is_exactly_zero_and_day_is_not() {
        let (archive, _) = simulate(&spec(30, Scenario::Biased, 5)).unwrap();
        let night: Vec<_> = archive
            .cases
            .iter()
            .filter(|c| c.clear_sky.unwrap() < NIGHT_LIMIT)
            .collect();
        let day: Vec<_> = archive
            .cases
            .iter()
            .filter(|c| c.clear_sky.unwrap() >= 100.0)
            .collect();
        assert!(!night.is_empty() && !day.is_empty());
        assert!(night
            .iter()
            .all(|c| c.observation == Some(0.0) && c.members.iter().all(|&m| m == 0.0)));
        // daylight observations are not all zero and members track the signal
        assert!(day.iter().filter(|c| c.observation.unwrap() > 0.0).count() > day.len() / 2);
    }

    #[test]
    fn biased_members_sit_below_observations_on_average() {
        let (archive, _) = simulate(&spec(60, Scenario::Biased, 5)).unwrap();
        let mut diff = 0.0;
        let mut n = 0.0;
        for c in archive.cases.iter().filter(|c| c.clear_sky.unwrap() >= 100.0) {
            let mean = c.members.iter().sum::<f64>() / c.members.len() as f64;
            diff += c.observation.unwrap() - mean;
            n += 1.0;
        }
        assert!(diff / n > 10.0, "mean obs-minus-ensemble {}", diff / n);
    }

    #[test]
    fn calibrated_members_center_on_observations() {
        let (archive, _) = simulate(&spec(60, Scenario::Calibrated, 5)).unwrap();
        let mut diff = 0.0;
        let mut scale = 0.0;
        let mut n = 0.0;
        for c in archive.cases.iter().filter(|c| c.clear_sky.unwrap() >= 100.0) {
            let mean = c.members.iter().sum::<f64>() / c.members.len() as f64;
            diff += c.observation.unwrap() - mean;
            scale += c.observation.unwrap();
            n += 1.0;
        }
        assert!((diff / n).abs() < 0.02 * (scale / n), "relative offset {}", diff / scale);
    }

    #[test]
    fn envelope_annual_and_diurnal_shape() {
        let june = NaiveDate::from_ymd_opt(2021, 6, 21).unwrap();
        let dec = NaiveDate::from_ymd_opt(2021, 12, 21).unwrap();
        assert!(clear_sky_envelope(0, june, 12 * 60) > clear_sky_envelope(0, dec, 12 * 60));
        assert_eq!(clear_sky_envelope(0, june, 0), 0.0);
        assert!(clear_sky_envelope(0, june, 12 * 60) > clear_sky_envelope(0, june, 8 * 60));
        // brighter station index 0
        assert!(clear_sky_envelope(0, june, 12 * 60) > clear_sky_envelope(3, june, 12 * 60));
        // winter mid-day still daylight, winter 07:00 is night
        assert!(clear_sky_envelope(0, dec, 12 * 60) > 0.0);
        assert_eq!(clear_sky_envelope(0, dec, 7 * 60), 0.0);
    }

    #[test]
    fn validation_rejects_bad_specs() {
        let good = spec(5, Scenario::Biased, 1);
        for f in [
            |s: &mut SimulateSpec| s.stations = 0,
            |s: &mut SimulateSpec| s.days = 0,
            |s: &mut SimulateSpec| s.lead_count = 0,
            |s: &mut SimulateSpec| s.members = 1,
            |s: &mut SimulateSpec| s.bias_frac = 1.5,
            |s: &mut SimulateSpec| s.spread_factor = 0.0,
            |s: &mut SimulateSpec| s.init_minutes = 1500,
        ] {
            let mut s = good.clone();
            f(&mut s);
            assert!(simulate(&s).is_err());
        }
    }
}
