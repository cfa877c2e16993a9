//! End-to-end orchestration: train a model store over all cells, predict
//! forecast rows, verify them against the archive, and read/write every
//! artifact deterministically.
//!
//! A *cell* is one (station-or-region, init time-of-day, lead time)
//! combination; fits are keyed by cell plus training period. Within a
//! cell, periods are fitted chronologically and each fit warm-starts from
//! the previous one; cells are independent and may run in parallel without
//! affecting results.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write as _;
use std::path::Path;

use chrono::{DateTime, Datelike, NaiveDate, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Mode, RunConfig, ScoreMethod};
use crate::csi::{csi_quantiles_to_irradiance, to_csi_with};
use crate::data::{
    compute_stats, fmt_f64, read_archive, read_group_spec, Archive, ForecastCase, GroupSpec,
    Schema,
};
use crate::dist::{CensoredLogistic, SIGMA_FLOOR};
use crate::emos::{estimate, link, EmosCoefficients, FitDiagnostics, LinkVariant, TrainingPoint};
use crate::error::{Error, Result};
use crate::seasonal::day_index;
use crate::seed::subseed;
use crate::training::{fit_period_key, select, CellTarget, SpatialPool, TemporalScheme};
use crate::verify::{
    aggregate, brier, climatology_members, coverage_ensemble, coverage_parametric, crps_empirical,
    ensemble_cdf, ensemble_mean, ensemble_median, kolmogorov_uniform, nominal_coverage, pit,
    pit_histogram, rank, rank_histogram, AggregateConfig, Axis, CaseScore, Histogram, ObsIndex,
    ScoreRow,
};

/// Station key used for regionally pooled cells.
const REGIONAL_KEY: &str = "*";

// ---------------------------------------------------------------------------
// model store

/// One fitted record: coefficients for a cell and training period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    /// Station id, or `"*"` for regionally pooled coefficients.
    pub station: String,
    pub init_minutes: u32,
    pub lead_minutes: u32,
    /// Training-period key: the target date for rolling windows
    /// (`YYYY-MM-DD`), the target month for expanding windows (`YYYY-MM`).
    pub period: String,
    pub coefficients: EmosCoefficients,
    pub diagnostics: FitDiagnostics,
}

/// Every fitted record of a run, with enough context to apply them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelStore {
    pub variant: LinkVariant,
    pub mode: Mode,
    pub temporal: TemporalScheme,
    pub spatial: SpatialPool,
    pub member_columns: Vec<String>,
    /// Sorted by (station, init_minutes, lead_minutes, period).
    pub records: Vec<ModelRecord>,
}

pub fn write_model_store(store: &ModelStore, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(store)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_model_store(path: &Path) -> Result<ModelStore> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read model store {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

// ---------------------------------------------------------------------------
// training

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    /// Distinct (station, init, lead) cells seen in the archive.
    pub cells: usize,
    /// Successful fits (including degenerate night fits).
    pub fits: usize,
    /// Night fits: every training observation and member exactly zero.
    pub degenerate: usize,
    /// Fits that hit the iteration cap before the tolerances.
    pub unconverged: usize,
    /// Cell-periods skipped for lack of training data (e.g. the archive
    /// lead-in before the first full window).
    pub skipped_insufficient: usize,
    /// Cell-periods whose fit failed outright.
    pub failed: usize,
    /// Human-readable warnings and first few failure messages.
    pub warnings: Vec<String>,
}

/// Resolve the member grouping for the configured variant: the grouping
/// file when one is required, singleton groups otherwise.
pub fn load_groups(config: &RunConfig, archive: &Archive) -> Result<GroupSpec> {
    if config.variant.needs_groups() {
        let path = config.groups.as_ref().ok_or_else(|| {
            Error::Config("exchangeable variants need a member-grouping file".into())
        })?;
        read_group_spec(path, &archive.member_columns)
    } else {
        Ok(GroupSpec::singletons(archive.member_columns.len()))
    }
}

pub fn load_archive(config: &RunConfig) -> Result<Archive> {
    read_archive(&config.archive, &Schema::default())
}

/// Training view of the archive: irradiance cases as-is, or clear-sky-index
/// cases with untransformed (night) passthrough cases dropped, since their
/// values would mix units with the transformed ones.
fn training_cases(config: &RunConfig, archive: &Archive) -> Result<Vec<ForecastCase>> {
    match config.mode {
        Mode::Irradiance => Ok(archive.cases.clone()),
        Mode::Csi => {
            let threshold = config.csi_threshold();
            let mut out = Vec::with_capacity(archive.cases.len());
            for case in &archive.cases {
                let csi = to_csi_with(case, threshold)?;
                if csi.transformed {
                    out.push(csi.case);
                }
            }
            Ok(out)
        }
    }
}

/// Fit every cell-period of the archive under `config`.
///
/// Periods lacking a full training window are skipped and counted, not
/// failed: a fresh archive always has a lead-in shorter than the window,
/// and prediction falls back to the raw ensemble there. Hard optimizer
/// errors are counted per cell-period; the caller decides whether a
/// nonzero count aborts the run.
pub fn train(config: &RunConfig, archive: &Archive) -> Result<(ModelStore, TrainSummary)> {
    let mut warnings = config.validate()?;
    let group_spec = load_groups(config, archive)?;
    let variant = LinkVariant { kind: config.variant.to_kind(), group_spec };
    let scheme = {
        let mut s = config.scheme()?;
        if s.min_cases == 0 {
            s.min_cases = 2 * variant.parameter_count();
        }
        s
    };
    let cases = training_cases(config, archive)?;
    let regression_groups = variant.regression_groups();

    // distinct cells and, per cell, the distinct target periods
    let mut cells: BTreeMap<(String, u32, u32), BTreeSet<NaiveDate>> = BTreeMap::new();
    for case in &cases {
        let station = match scheme.spatial {
            SpatialPool::Local => case.station_id.clone(),
            SpatialPool::Regional => REGIONAL_KEY.to_owned(),
        };
        let key = (station, case.init_minutes_of_day(), case.lead_minutes);
        let target = match scheme.temporal {
            TemporalScheme::Rolling { .. } => case.init_time.date_naive(),
            // one fit per month, keyed by its first day
            TemporalScheme::MonthlyExpanding { .. } => {
                case.init_time.date_naive().with_day(1).unwrap()
            }
        };
        cells.entry(key).or_default().insert(target);
    }
    if let (TemporalScheme::MonthlyExpanding { start }, Some(order)) =
        (scheme.temporal, variant.kind.harmonic_order())
    {
        let _ = order;
        if let Some(first_month) = cells.values().flatten().min() {
            let span = (*first_month - start).num_days();
            if span < 180 {
                warnings.push(format!(
                    "periodic variant with a {span}-day initial expanding window: harmonic \
                     coefficients need at least ~180 days to be identifiable"
                ));
            }
        }
    }

    struct CellOutcome {
        records: Vec<ModelRecord>,
        skipped: usize,
        failed: usize,
        messages: Vec<String>,
    }

    let cell_list: Vec<(&(String, u32, u32), &BTreeSet<NaiveDate>)> = cells.iter().collect();
    let outcomes: Vec<CellOutcome> = cell_list
        .par_iter()
        .map(|((station, init_minutes, lead_minutes), targets)| {
            let mut out = CellOutcome {
                records: Vec::new(),
                skipped: 0,
                failed: 0,
                messages: Vec::new(),
            };
            let mut warm: Option<EmosCoefficients> = None;
            for &target_date in targets.iter() {
                let cell = CellTarget {
                    station_id: station,
                    init_minutes: *init_minutes,
                    lead_minutes: *lead_minutes,
                    target_date,
                };
                let picked = match select(&cases, &scheme, &cell) {
                    Ok(p) => p,
                    Err(_) => {
                        out.skipped += 1;
                        continue;
                    }
                };
                let points: Vec<TrainingPoint> = picked
                    .iter()
                    .map(|c| TrainingPoint {
                        stats: compute_stats(&c.members, &regression_groups),
                        t: day_index(c.valid_time()),
                        observation: c.observation.expect("select keeps observed cases"),
                    })
                    .collect();
                match estimate(&variant, &points, warm.as_ref()) {
                    Ok((coefficients, diagnostics)) => {
                        warm = Some(coefficients.clone());
                        out.records.push(ModelRecord {
                            station: (*station).clone(),
                            init_minutes: *init_minutes,
                            lead_minutes: *lead_minutes,
                            period: fit_period_key(&scheme.temporal, target_date),
                            coefficients,
                            diagnostics,
                        });
                    }
                    Err(e) => {
                        out.failed += 1;
                        if out.messages.len() < 4 {
                            out.messages.push(format!("fit failed for [{cell}]: {e}"));
                        }
                    }
                }
            }
            out
        })
        .collect();

    let mut summary = TrainSummary { cells: cell_list.len(), warnings, ..TrainSummary::default() };
    let mut records = Vec::new();
    for out in outcomes {
        summary.skipped_insufficient += out.skipped;
        summary.failed += out.failed;
        for m in out.messages {
            if summary.warnings.len() < 16 {
                summary.warnings.push(m);
            }
        }
        records.extend(out.records);
    }
    records.sort_by(|a, b| {
        (&a.station, a.init_minutes, a.lead_minutes, &a.period)
            .cmp(&(&b.station, b.init_minutes, b.lead_minutes, &b.period))
    });
    summary.fits = records.len();
    summary.degenerate = records.iter().filter(|r| r.diagnostics.degenerate).count();
    summary.unconverged = records
        .iter()
        .filter(|r| !r.diagnostics.converged && !r.diagnostics.degenerate)
        .count();

    if summary.fits == 0 {
        return Err(Error::Data(format!(
            "no cell could be fitted: {} cell-periods lacked training data, {} failed",
            summary.skipped_insufficient, summary.failed
        )));
    }
    let store = ModelStore {
        variant,
        mode: config.mode,
        temporal: scheme.temporal,
        spatial: scheme.spatial,
        member_columns: archive.member_columns.clone(),
        records,
    };
    Ok((store, summary))
}

// ---------------------------------------------------------------------------
// prediction

/// One forecast row. Parametric fields are absent on passthrough rows,
/// which re-emit the raw ensemble (as empirical quantiles) because no
/// fitted model covers the case.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastRow {
    pub station_id: String,
    pub init_time: DateTime<Utc>,
    pub lead_minutes: u32,
    pub passthrough: bool,
    /// Predictive distribution in irradiance space (clear-sky-index fits
    /// are rescaled by the case's clear-sky irradiance, which is exact for
    /// this family).
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub point_mass: Option<f64>,
    pub mean: f64,
    pub median: f64,
    /// Values at the configured quantile levels.
    pub quantiles: Vec<f64>,
    /// Equidistant quantile ladder (clear-sky-index mode only): the
    /// score-ready empirical forecast in irradiance space.
    pub ladder: Option<Vec<f64>>,
}

/// Forecast rows plus the quantile levels their `quantiles` refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct Forecasts {
    pub levels: Vec<f64>,
    pub rows: Vec<ForecastRow>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PredictSummary {
    pub rows: usize,
    /// Rows scored from a fitted model.
    pub modeled: usize,
    /// Raw-ensemble fallback rows (uncovered cell-period, or clear-sky
    /// below the transform threshold in clear-sky-index mode).
    pub passthrough: usize,
}

/// Linear-interpolation quantile of a sorted sample.
fn empirical_quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = p * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn passthrough_row(case: &ForecastCase, levels: &[f64]) -> ForecastRow {
    let mut sorted = case.members.clone();
    sorted.sort_by(f64::total_cmp);
    ForecastRow {
        station_id: case.station_id.clone(),
        init_time: case.init_time,
        lead_minutes: case.lead_minutes,
        passthrough: true,
        mu: None,
        sigma: None,
        point_mass: None,
        mean: ensemble_mean(&case.members),
        median: ensemble_median(&case.members),
        quantiles: levels.iter().map(|&p| empirical_quantile(&sorted, p)).collect(),
        ladder: None,
    }
}

/// Predict every archive case from the fitted store. Cases whose cell or
/// period has no fit (and, in clear-sky-index mode, cases below the
/// transform threshold) become passthrough rows rather than errors.
pub fn predict(
    config: &RunConfig,
    archive: &Archive,
    store: &ModelStore,
) -> Result<(Forecasts, PredictSummary)> {
    if store.member_columns != archive.member_columns {
        return Err(Error::Data(format!(
            "model store was fitted on member columns {:?}, archive has {:?}",
            store.member_columns, archive.member_columns
        )));
    }
    if store.mode != config.mode {
        return Err(Error::Config(
            "config mode does not match the model store's mode".into(),
        ));
    }
    let levels = config.prediction.quantile_levels.clone();
    let ladder_n = config.prediction.csi_quantile_count;
    let regression_groups = store.variant.regression_groups();

    // (station, init, lead) -> period -> record index; lookups take the
    // exact period when fitted, else the most recent earlier one
    let mut index: BTreeMap<(&str, u32, u32), BTreeMap<&str, usize>> = BTreeMap::new();
    for (i, r) in store.records.iter().enumerate() {
        index
            .entry((r.station.as_str(), r.init_minutes, r.lead_minutes))
            .or_default()
            .insert(r.period.as_str(), i);
    }

    let mut rows = Vec::with_capacity(archive.cases.len());
    let mut summary = PredictSummary::default();
    for case in &archive.cases {
        let station_key = match store.spatial {
            SpatialPool::Local => case.station_id.as_str(),
            SpatialPool::Regional => REGIONAL_KEY,
        };
        let period = fit_period_key(&store.temporal, case.init_time.date_naive());
        let record = index
            .get(&(station_key, case.init_minutes_of_day(), case.lead_minutes))
            .and_then(|by_period| {
                by_period
                    .range::<str, _>((
                        std::ops::Bound::Unbounded,
                        std::ops::Bound::Included(period.as_str()),
                    ))
                    .next_back()
            })
            .map(|(_, &i)| &store.records[i]);

        let row = match (record, config.mode) {
            (None, _) => passthrough_row(case, &levels),
            (Some(record), Mode::Irradiance) => {
                let d = link(
                    &record.coefficients,
                    &store.variant,
                    &compute_stats(&case.members, &regression_groups),
                    day_index(case.valid_time()),
                )?;
                parametric_row(case, &d, &levels, None)
            }
            (Some(record), Mode::Csi) => {
                let csi = to_csi_with(case, config.csi_threshold())?;
                if !csi.transformed {
                    passthrough_row(case, &levels)
                } else {
                    let d_csi = link(
                        &record.coefficients,
                        &store.variant,
                        &compute_stats(&csi.case.members, &regression_groups),
                        day_index(case.valid_time()),
                    )?;
                    let cs = case.clear_sky.expect("transformed case has clear_sky");
                    let d = CensoredLogistic::new(
                        cs * d_csi.mu(),
                        (cs * d_csi.sigma()).max(SIGMA_FLOOR),
                    )?;
                    let ladder = csi_quantiles_to_irradiance(&d_csi, cs, ladder_n);
                    parametric_row(case, &d, &levels, Some(ladder.values))
                }
            }
        };
        if row.passthrough {
            summary.passthrough += 1;
        } else {
            summary.modeled += 1;
        }
        rows.push(row);
    }
    summary.rows = rows.len();
    Ok((Forecasts { levels, rows }, summary))
}

fn parametric_row(
    case: &ForecastCase,
    d: &CensoredLogistic,
    levels: &[f64],
    ladder: Option<Vec<f64>>,
) -> ForecastRow {
    ForecastRow {
        station_id: case.station_id.clone(),
        init_time: case.init_time,
        lead_minutes: case.lead_minutes,
        passthrough: false,
        mu: Some(d.mu()),
        sigma: Some(d.sigma()),
        point_mass: Some(d.point_mass()),
        mean: d.mean(),
        median: d.quantile(0.5),
        quantiles: levels.iter().map(|&p| d.quantile(p)).collect(),
        ladder,
    }
}

fn opt_field(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn write_forecasts(forecasts: &Forecasts, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let ladder_n = forecasts.rows.iter().find_map(|r| r.ladder.as_ref().map(Vec::len));
    let mut header: Vec<String> = [
        "station_id",
        "init_time",
        "lead_minutes",
        "passthrough",
        "mu",
        "sigma",
        "point_mass",
        "mean",
        "median",
    ]
    .map(str::to_owned)
    .into();
    header.extend(forecasts.levels.iter().map(|&p| format!("q_{}", fmt_f64(p))));
    if let Some(n) = ladder_n {
        header.extend((1..=n).map(|i| format!("ladder_{i:03}")));
    }
    w.write_record(&header)?;

    for row in &forecasts.rows {
        let mut rec: Vec<String> = vec![
            row.station_id.clone(),
            row.init_time.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            row.lead_minutes.to_string(),
            u8::from(row.passthrough).to_string(),
            opt_field(row.mu),
            opt_field(row.sigma),
            opt_field(row.point_mass),
            fmt_f64(row.mean),
            fmt_f64(row.median),
        ];
        rec.extend(row.quantiles.iter().map(|&v| fmt_f64(v)));
        if let Some(n) = ladder_n {
            match &row.ladder {
                Some(ladder) => {
                    if ladder.len() != n {
                        return Err(Error::Data("inconsistent ladder lengths across rows".into()));
                    }
                    rec.extend(ladder.iter().map(|&v| fmt_f64(v)));
                }
                None => rec.extend(std::iter::repeat_with(String::new).take(n)),
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_forecasts(path: &Path) -> Result<Forecasts> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| Error::Data(format!("cannot read forecasts {}: {e}", path.display())))?;
    let headers = r.headers()?.clone();
    let fixed = [
        "station_id",
        "init_time",
        "lead_minutes",
        "passthrough",
        "mu",
        "sigma",
        "point_mass",
        "mean",
        "median",
    ];
    if headers.len() < fixed.len()
        || headers.iter().take(fixed.len()).ne(fixed.iter().copied())
    {
        return Err(Error::Data(format!(
            "unexpected forecast header in {}",
            path.display()
        )));
    }
    let mut levels = Vec::new();
    let mut ladder_cols = 0usize;
    for h in headers.iter().skip(fixed.len()) {
        if let Some(level) = h.strip_prefix("q_") {
            if ladder_cols > 0 {
                return Err(Error::Data("quantile columns after ladder columns".into()));
            }
            levels.push(level.parse::<f64>().map_err(|e| {
                Error::Data(format!("bad quantile level column {h}: {e}"))
            })?);
        } else if h.starts_with("ladder_") {
            ladder_cols += 1;
        } else {
            return Err(Error::Data(format!("unexpected forecast column {h}")));
        }
    }

    let parse_f64 = |s: &str, what: &str, line: u64| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|e| Error::Data(format!("line {line}: bad {what} {s:?}: {e}")))
    };
    let parse_opt = |s: &str, what: &str, line: u64| -> Result<Option<f64>> {
        if s.is_empty() { Ok(None) } else { parse_f64(s, what, line).map(Some) }
    };

    let mut rows = Vec::new();
    for record in r.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let get = |i: usize| record.get(i).unwrap_or_default();
        let init_time = DateTime::parse_from_rfc3339(get(1))
            .map_err(|e| Error::Data(format!("line {line}: bad init_time {:?}: {e}", get(1))))?
            .with_timezone(&Utc);
        let n_q = levels.len();
        let quantiles: Vec<f64> = (0..n_q)
            .map(|i| parse_f64(get(fixed.len() + i), "quantile", line))
            .collect::<Result<_>>()?;
        let ladder_fields: Vec<&str> =
            (0..ladder_cols).map(|i| get(fixed.len() + n_q + i)).collect();
        let ladder = if ladder_cols == 0 || ladder_fields.iter().all(|s| s.is_empty()) {
            None
        } else {
            Some(
                ladder_fields
                    .iter()
                    .map(|s| parse_f64(s, "ladder value", line))
                    .collect::<Result<Vec<f64>>>()?,
            )
        };
        rows.push(ForecastRow {
            station_id: get(0).to_owned(),
            init_time,
            lead_minutes: get(2)
                .parse()
                .map_err(|e| Error::Data(format!("line {line}: bad lead_minutes: {e}")))?,
            passthrough: get(3) == "1",
            mu: parse_opt(get(4), "mu", line)?,
            sigma: parse_opt(get(5), "sigma", line)?,
            point_mass: parse_opt(get(6), "point_mass", line)?,
            mean: parse_f64(get(7), "mean", line)?,
            median: parse_f64(get(8), "median", line)?,
            quantiles,
            ladder,
        });
    }
    Ok(Forecasts { levels, rows })
}

// ---------------------------------------------------------------------------
// verification

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyCounts {
    pub forecast_rows: usize,
    /// Forecast rows without a matching archive case.
    pub unmatched: usize,
    /// Matched rows whose observation is missing.
    pub missing_observation: usize,
    /// Scored cases.
    pub scored: usize,
    /// Scored cases that were passthrough rows.
    pub passthrough: usize,
    /// Scored cases with no climatology window in the archive.
    pub climatology_missing: usize,
}

/// Complete verification output: aggregated rows per axis, calibration
/// histograms, and the per-case scores they were built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub alpha: f64,
    pub nominal_coverage: f64,
    pub thresholds: Vec<f64>,
    pub counts: VerifyCounts,
    /// Aggregated score rows keyed by axis name
    /// (lead/hour/month/station/pooled).
    pub axes: BTreeMap<String, Vec<ScoreRow>>,
    pub pit_histogram: Histogram,
    pub rank_histogram: Histogram,
    /// Kolmogorov distance of the PIT sample from uniform.
    pub pit_ks: f64,
    pub case_scores: Vec<CaseScore>,
}

/// Score forecast rows against the archive and aggregate along every axis.
///
/// All scoring happens in irradiance space. Non-passthrough rows are scored
/// by the configured method: parametrically from (mu, sigma), or as the
/// empirical quantile-ladder forecast (`auto` picks the ladder exactly when
/// the row carries one). PIT and interval coverage always come from the
/// parametric distribution; the raw ensemble and the climatology reference
/// are scored on the identical case set.
pub fn verify(
    config: &RunConfig,
    archive: &Archive,
    forecasts: &Forecasts,
    seed: u64,
) -> Result<VerifyReport> {
    let m = archive.member_columns.len();
    let alpha = config.verification.alpha.unwrap_or(2.0 / (m as f64 + 1.0));
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config("verification.alpha must lie in (0, 1)".into()));
    }
    let thresholds = config.verification.thresholds.clone();
    let window_days = config.climatology_window_days();
    let obs_index = ObsIndex::build(&archive.cases);

    let mut by_key: BTreeMap<(&str, DateTime<Utc>, u32), &ForecastCase> = BTreeMap::new();
    for case in &archive.cases {
        by_key.insert((case.station_id.as_str(), case.init_time, case.lead_minutes), case);
    }

    let mut counts = VerifyCounts { forecast_rows: forecasts.rows.len(), ..Default::default() };
    let mut case_scores = Vec::new();
    for row in &forecasts.rows {
        let Some(case) = by_key
            .get(&(row.station_id.as_str(), row.init_time, row.lead_minutes))
            .copied()
        else {
            counts.unmatched += 1;
            continue;
        };
        let Some(y) = case.observation else {
            counts.missing_observation += 1;
            continue;
        };

        let init_iso = row.init_time.to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
        let lead_str = row.lead_minutes.to_string();
        let tags = [row.station_id.as_str(), init_iso.as_str(), lead_str.as_str()];

        // raw-ensemble scores
        let crps_raw = crps_empirical(&case.members, y)?;
        let bs_raw: Vec<f64> =
            thresholds.iter().map(|&z| brier(ensemble_cdf(&case.members, z), y, z)).collect();
        let cover_raw = f64::from(coverage_ensemble(&case.members, y));
        let rank_value = rank(
            &case.members,
            y,
            subseed(seed, &["rank", tags[0], tags[1], tags[2]]),
        );

        // forecast scores
        let (crps_fc, bs_fc, cover_fc, pit_value, median_fc, mean_fc);
        if row.passthrough {
            crps_fc = crps_raw;
            bs_fc = bs_raw.clone();
            cover_fc = cover_raw;
            pit_value = None;
            median_fc = row.median;
            mean_fc = row.mean;
        } else {
            let (mu, sigma) = match (row.mu, row.sigma) {
                (Some(mu), Some(sigma)) => (mu, sigma),
                _ => {
                    return Err(Error::Data(format!(
                        "forecast row ({}, {init_iso}, {lead_str}) has no distribution parameters",
                        row.station_id
                    )))
                }
            };
            let d = CensoredLogistic::new(mu, sigma)?;
            let use_ladder = match config.verification.score_method {
                ScoreMethod::Parametric => false,
                ScoreMethod::Quantiles => true,
                ScoreMethod::Auto => row.ladder.is_some(),
            };
            if use_ladder {
                // ladder from the file when present (clear-sky-index rows),
                // else derived from the parametric distribution
                let computed;
                let values: &[f64] = match &row.ladder {
                    Some(l) => l,
                    None => {
                        computed = crate::csi::quantile_levels(
                            config.prediction.csi_quantile_count,
                        )
                        .iter()
                        .map(|&p| d.quantile(p))
                        .collect::<Vec<f64>>();
                        &computed
                    }
                };
                crps_fc = crps_empirical(values, y)?;
                bs_fc = thresholds.iter().map(|&z| brier(ensemble_cdf(values, z), y, z)).collect();
            } else {
                crps_fc = d.crps(y);
                bs_fc = thresholds.iter().map(|&z| brier(d.cdf(z), y, z)).collect();
            }
            cover_fc = f64::from(coverage_parametric(&d, y, alpha));
            pit_value = Some(pit(&d, y, subseed(seed, &["pit", tags[0], tags[1], tags[2]])));
            median_fc = row.median;
            mean_fc = row.mean;
        }

        // climatology reference on the same case
        let clim = climatology_members(
            &obs_index,
            &row.station_id,
            row.init_time.date_naive(),
            case.init_minutes_of_day(),
            row.lead_minutes,
            window_days,
        )?;
        let crps_clim = if clim.is_empty() {
            counts.climatology_missing += 1;
            None
        } else {
            Some(crps_empirical(&clim, y)?)
        };

        counts.scored += 1;
        counts.passthrough += usize::from(row.passthrough);
        case_scores.push(CaseScore {
            station_id: row.station_id.clone(),
            init_time: row.init_time,
            lead_minutes: row.lead_minutes,
            observation: y,
            clear_sky: case.clear_sky,
            passthrough: row.passthrough,
            crps_fc,
            crps_raw,
            crps_clim,
            bs_fc,
            bs_raw,
            cover_fc,
            cover_raw,
            pit: pit_value,
            rank: rank_value,
            median_fc,
            mean_fc,
            median_raw: ensemble_median(&case.members),
            mean_raw: ensemble_mean(&case.members),
        });
    }

    if case_scores.is_empty() {
        return Err(Error::Data(format!(
            "no forecast case could be scored ({} unmatched, {} without observation)",
            counts.unmatched, counts.missing_observation
        )));
    }

    let agg = AggregateConfig {
        thresholds: thresholds.clone(),
        nominal_coverage: 100.0 * (1.0 - alpha),
        n_boot: config.verification.n_boot,
        mean_block_len: config.verification.mean_block_len,
        bss_ci: config.verification.bss_ci,
        seed,
    };
    let mut axes = BTreeMap::new();
    for axis in Axis::ALL {
        axes.insert(axis.name().to_owned(), aggregate(&case_scores, axis, &agg)?);
    }

    let pits: Vec<f64> = case_scores.iter().filter_map(|c| c.pit).collect();
    let ranks: Vec<usize> = case_scores.iter().map(|c| c.rank).collect();
    Ok(VerifyReport {
        alpha,
        nominal_coverage: nominal_coverage(m),
        thresholds,
        counts,
        axes,
        pit_histogram: pit_histogram(&pits, config.verification.pit_bins),
        rank_histogram: rank_histogram(&ranks, m),
        pit_ks: kolmogorov_uniform(&pits),
        case_scores,
    })
}

// ---------------------------------------------------------------------------
// report files

fn opt_str(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn score_table(rows: &[ScoreRow], thresholds: &[f64]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![
        "key".to_owned(),
        "n_cases".to_owned(),
        "n_clim".to_owned(),
        "mean_crps_fc".to_owned(),
        "mean_crps_raw".to_owned(),
        "mean_crps_clim".to_owned(),
        "crpss_vs_raw".to_owned(),
        "crpss_vs_raw_lo".to_owned(),
        "crpss_vs_raw_hi".to_owned(),
        "crpss_vs_clim".to_owned(),
        "crpss_vs_clim_lo".to_owned(),
        "crpss_vs_clim_hi".to_owned(),
        "crpss_raw_vs_clim".to_owned(),
    ];
    for t in thresholds {
        let t = fmt_f64(*t);
        header.push(format!("mean_bs_fc_{t}"));
        header.push(format!("mean_bs_raw_{t}"));
        header.push(format!("bss_{t}"));
        header.push(format!("bss_{t}_lo"));
        header.push(format!("bss_{t}_hi"));
    }
    header.extend(
        [
            "coverage_fc",
            "coverage_raw",
            "nominal_coverage",
            "mae_fc",
            "mae_raw",
            "rmse_fc",
            "rmse_raw",
        ]
        .map(str::to_owned),
    );
    w.write_record(&header)?;

    for r in rows {
        let mut rec = vec![
            r.key.clone(),
            r.n_cases.to_string(),
            r.n_clim.to_string(),
            fmt_f64(r.mean_crps_fc),
            fmt_f64(r.mean_crps_raw),
            opt_str(r.mean_crps_clim),
            opt_str(r.crpss_vs_raw),
            opt_str(r.crpss_vs_raw_ci.map(|c| c.low)),
            opt_str(r.crpss_vs_raw_ci.map(|c| c.high)),
            opt_str(r.crpss_vs_clim),
            opt_str(r.crpss_vs_clim_ci.map(|c| c.low)),
            opt_str(r.crpss_vs_clim_ci.map(|c| c.high)),
            opt_str(r.crpss_raw_vs_clim),
        ];
        for i in 0..thresholds.len() {
            rec.push(fmt_f64(r.mean_bs_fc[i]));
            rec.push(fmt_f64(r.mean_bs_raw[i]));
            rec.push(opt_str(r.bss_vs_raw[i]));
            rec.push(opt_str(r.bss_vs_raw_ci[i].map(|c| c.low)));
            rec.push(opt_str(r.bss_vs_raw_ci[i].map(|c| c.high)));
        }
        rec.push(fmt_f64(r.coverage_fc));
        rec.push(fmt_f64(r.coverage_raw));
        rec.push(fmt_f64(r.nominal_coverage));
        rec.push(fmt_f64(r.mae_fc));
        rec.push(fmt_f64(r.mae_raw));
        rec.push(fmt_f64(r.rmse_fc));
        rec.push(fmt_f64(r.rmse_raw));
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn case_table(cases: &[CaseScore], thresholds: &[f64]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = [
        "station_id",
        "init_time",
        "lead_minutes",
        "observation",
        "clear_sky",
        "passthrough",
        "crps_fc",
        "crps_raw",
        "crps_clim",
    ]
    .map(str::to_owned)
    .into();
    for t in thresholds {
        let t = fmt_f64(*t);
        header.push(format!("bs_fc_{t}"));
        header.push(format!("bs_raw_{t}"));
    }
    header.extend(
        [
            "cover_fc", "cover_raw", "pit", "rank", "median_fc", "mean_fc", "median_raw",
            "mean_raw",
        ]
        .map(str::to_owned),
    );
    w.write_record(&header)?;
    for c in cases {
        let mut rec = vec![
            c.station_id.clone(),
            c.init_time.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            c.lead_minutes.to_string(),
            fmt_f64(c.observation),
            opt_str(c.clear_sky),
            u8::from(c.passthrough).to_string(),
            fmt_f64(c.crps_fc),
            fmt_f64(c.crps_raw),
            opt_str(c.crps_clim),
        ];
        for i in 0..thresholds.len() {
            rec.push(fmt_f64(c.bs_fc[i]));
            rec.push(fmt_f64(c.bs_raw[i]));
        }
        rec.push(fmt_f64(c.cover_fc));
        rec.push(fmt_f64(c.cover_raw));
        rec.push(opt_str(c.pit));
        rec.push(c.rank.to_string());
        rec.push(fmt_f64(c.median_fc));
        rec.push(fmt_f64(c.mean_fc));
        rec.push(fmt_f64(c.median_raw));
        rec.push(fmt_f64(c.mean_raw));
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn histogram_table(h: &Histogram) -> String {
    let mut out = String::from("bin,low,high,count\n");
    let bins = h.counts.len();
    for (i, &c) in h.counts.iter().enumerate() {
        match h.kind {
            crate::verify::HistogramKind::Pit => {
                let low = i as f64 / bins as f64;
                let high = (i + 1) as f64 / bins as f64;
                out.push_str(&format!("{},{},{},{}\n", i + 1, fmt_f64(low), fmt_f64(high), c));
            }
            crate::verify::HistogramKind::Rank => {
                out.push_str(&format!("{},{},{},{}\n", i + 1, i + 1, i + 1, c));
            }
        }
    }
    out
}

/// Write every verification artifact into `dir`: one score table per axis,
/// both histograms, the per-case scores, and a structured `scores.json`
/// holding everything except the per-case table.
pub fn write_verify_outputs(report: &VerifyReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (axis, rows) in &report.axes {
        std::fs::write(
            dir.join(format!("scores_{axis}.csv")),
            score_table(rows, &report.thresholds)?,
        )?;
    }
    std::fs::write(
        dir.join("case_scores.csv"),
        case_table(&report.case_scores, &report.thresholds)?,
    )?;
    std::fs::write(dir.join("pit_histogram.csv"), histogram_table(&report.pit_histogram))?;
    std::fs::write(dir.join("rank_histogram.csv"), histogram_table(&report.rank_histogram))?;

    // scores.json: the full report minus the bulky per-case list
    let mut doc = serde_json::to_value(report)?;
    doc.as_object_mut().expect("report is an object").remove("case_scores");
    let mut file = std::fs::File::create(dir.join("scores.json"))?;
    let text = serde_json::to_string_pretty(&doc)?;
    file.write_all(text.as_bytes())?;
    file.write_all(b"\n")?;
    Ok(())
}
