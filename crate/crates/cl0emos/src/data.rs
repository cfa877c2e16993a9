//! Forecast archive model: cases, exchangeable member groups, ensemble
//! statistics, and CSV ingestion/serialization.
//!
//! The archive format is a UTF-8 comma-separated file with a header row:
//!
//! ```text
//! station_id,init_time,lead_minutes,obs,clear_sky,m1,...,mM
//! ```
//!
//! `init_time` is an ISO-8601 UTC timestamp (`2020-06-09T00:00:00Z`), the
//! `clear_sky` column is optional, missing values are empty fields and every
//! remaining column is an ensemble member. Member count must be constant
//! across rows.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, Duration, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values with magnitude at or below this count as "zero" when computing the
/// zero-member fraction; archives that went through text round trips carry
/// representation noise.
pub const ZERO_TOL: f64 = 1e-9;

/// One ensemble forecast with its verifying observation.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastCase {
    pub station_id: String,
    pub init_time: DateTime<Utc>,
    pub lead_minutes: u32,
    /// Verifying observation in W/m²; `None` when the archive has a gap.
    pub observation: Option<f64>,
    /// Clear-sky irradiance in W/m², required for CSI-mode runs.
    pub clear_sky: Option<f64>,
    /// Member values in W/m², all non-negative after ingestion.
    pub members: Vec<f64>,
}

impl ForecastCase {
    /// Time the forecast verifies at.
    pub fn valid_time(&self) -> DateTime<Utc> {
        self.init_time + Duration::minutes(i64::from(self.lead_minutes))
    }

    /// Minutes after midnight UTC of the initialization time; models are
    /// keyed per initialization hour and this generalizes to sub-hourly
    /// cycles.
    pub fn init_minutes_of_day(&self) -> u32 {
        use chrono::Timelike;
        self.init_time.time().num_seconds_from_midnight() / 60
    }
}

/// Exchangeable member groups: an ordered partition of member indices.
///
/// Members of one group share EMOS coefficients; the group order fixes the
/// coefficient order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub groups: Vec<Group>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub id: String,
    /// Zero-based indices into `ForecastCase::members`.
    pub member_indices: Vec<usize>,
}

/// On-disk form of a group spec: group name to member column names.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupSpecFile {
    pub groups: Vec<GroupDef>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupDef {
    pub name: String,
    pub members: Vec<String>,
}

impl GroupSpec {
    /// Resolves a group-spec file against the archive's member columns.
    /// The groups must partition the member columns exactly.
    pub fn resolve(file: &GroupSpecFile, member_columns: &[String]) -> Result<Self> {
        let mut seen = vec![false; member_columns.len()];
        let mut groups = Vec::with_capacity(file.groups.len());
        for def in &file.groups {
            if def.members.is_empty() {
                return Err(Error::Config(format!("group '{}' has no members", def.name)));
            }
            let mut idx = Vec::with_capacity(def.members.len());
            for col in &def.members {
                let i = member_columns
                    .iter()
                    .position(|c| c == col)
                    .ok_or_else(|| {
                        Error::Config(format!(
                            "group '{}' references unknown member column '{col}'",
                            def.name
                        ))
                    })?;
                if seen[i] {
                    return Err(Error::Config(format!(
                        "member column '{col}' assigned to more than one group"
                    )));
                }
                seen[i] = true;
                idx.push(i);
            }
            groups.push(Group {
                id: def.name.clone(),
                member_indices: idx,
            });
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::Config(format!(
                "member column '{}' not assigned to any group",
                member_columns[i]
            )));
        }
        Ok(Self { groups })
    }

    /// One singleton group per member, in member order. The simple
    /// (non-exchangeable) link is the exchangeable link over singletons.
    pub fn singletons(member_count: usize) -> Self {
        let groups = (0..member_count)
            .map(|i| Group {
                id: format!("m{}", i + 1),
                member_indices: vec![i],
            })
            .collect();
        Self { groups }
    }

    /// Number of groups K.
    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    /// Total member count M.
    pub fn member_count(&self) -> usize {
        self.groups.iter().map(|g| g.member_indices.len()).sum()
    }

    /// Group sizes M_k in group order.
    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.member_indices.len()).collect()
    }
}

/// Summary statistics of one ensemble, the regression inputs of the EMOS
/// links.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    /// Group means in group order.
    pub group_means: Vec<f64>,
    /// Size-weighted recombination of the group means,
    /// `(Σ_k M_k · mean_k) / M`.
    pub overall_mean: f64,
    /// Unbiased sample variance over all members; 0 for a single member.
    pub variance: f64,
    /// Fraction of members equal to zero (|value| ≤ [`ZERO_TOL`]).
    pub zero_fraction: f64,
}

/// Computes group means, overall mean, unbiased variance and zero fraction.
///
/// # Panics
///
/// Panics if the group spec does not match the member count; specs are
/// validated against the archive at resolution time.
pub fn compute_stats(members: &[f64], groups: &GroupSpec) -> EnsembleStats {
    let m = members.len();
    assert_eq!(groups.member_count(), m, "group spec does not match member count");
    assert!(m > 0, "ensemble must be nonempty");

    // every sum runs over a sorted copy, so the statistics depend only on
    // the member multiset (exchangeable members can be listed in any order)
    let mut scratch: Vec<f64> = Vec::with_capacity(m);
    let mut group_means = Vec::with_capacity(groups.group_count());
    let mut weighted = 0.0;
    for g in &groups.groups {
        scratch.clear();
        scratch.extend(g.member_indices.iter().map(|&i| members[i]));
        scratch.sort_by(f64::total_cmp);
        let mean = scratch.iter().sum::<f64>() / scratch.len() as f64;
        group_means.push(mean);
        weighted += scratch.len() as f64 * mean;
    }
    let overall_mean = weighted / m as f64;

    scratch.clear();
    scratch.extend_from_slice(members);
    scratch.sort_by(f64::total_cmp);
    let plain_mean = scratch.iter().sum::<f64>() / m as f64;
    let variance = if m > 1 {
        scratch.iter().map(|&x| (x - plain_mean).powi(2)).sum::<f64>() / (m - 1) as f64
    } else {
        0.0
    };
    let zeros = scratch.iter().filter(|&&x| x.abs() <= ZERO_TOL).count();

    EnsembleStats {
        group_means,
        overall_mean,
        variance,
        zero_fraction: zeros as f64 / m as f64,
    }
}

/// Column-name mapping for the fixed archive columns.
#[derive(Debug, Clone)]
pub struct Schema {
    pub station_id: String,
    pub init_time: String,
    pub lead_minutes: String,
    pub obs: String,
    pub clear_sky: String,
}

impl Default for Schema {
    fn default() -> Self {
        Self {
            station_id: "station_id".into(),
            init_time: "init_time".into(),
            lead_minutes: "lead_minutes".into(),
            obs: "obs".into(),
            clear_sky: "clear_sky".into(),
        }
    }
}

/// Ingestion counters surfaced as warnings, not errors.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub rows: usize,
    pub missing_observations: usize,
    /// Negative member values clamped to zero.
    pub clamped_members: usize,
    /// Negative observations clamped to zero.
    pub clamped_observations: usize,
}

/// An ingested archive: cases sorted by (station, init time, lead), plus
/// the member column names the group spec resolves against.
#[derive(Debug, Clone, PartialEq)]
pub struct Archive {
    pub member_columns: Vec<String>,
    pub has_clear_sky: bool,
    pub cases: Vec<ForecastCase>,
    pub ingest: IngestSummary,
}

impl Archive {
    pub fn member_count(&self) -> usize {
        self.member_columns.len()
    }
}

/// Reads an archive file. See the module docs for the format.
pub fn read_archive(path: &Path, schema: &Schema) -> Result<Archive> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Data(format!("cannot open archive {}: {e}", path.display())))?;
    read_archive_from(file, schema)
}

/// Reads an archive from any reader.
pub fn read_archive_from<R: Read>(reader: R, schema: &Schema) -> Result<Archive> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);

    let headers = rdr
        .headers()
        .map_err(|e| Error::Data(format!("cannot read archive header: {e}")))?
        .clone();
    let cols: Vec<String> = headers.iter().map(str::to_owned).collect();

    let required = [
        &schema.station_id,
        &schema.init_time,
        &schema.lead_minutes,
        &schema.obs,
    ];
    for (i, want) in required.iter().enumerate() {
        if cols.get(i).map(String::as_str) != Some(want.as_str()) {
            return Err(Error::Data(format!(
                "archive column {} must be '{want}', found '{}'",
                i + 1,
                cols.get(i).map(String::as_str).unwrap_or("<missing>")
            )));
        }
    }
    let has_clear_sky = cols.get(4).map(String::as_str) == Some(schema.clear_sky.as_str());
    let member_start = if has_clear_sky { 5 } else { 4 };
    let member_columns: Vec<String> = cols[member_start..].to_vec();
    if member_columns.is_empty() {
        return Err(Error::Data("archive has no member columns".into()));
    }

    let mut summary = IngestSummary::default();
    let mut cases = Vec::new();
    for (row_idx, record) in rdr.records().enumerate() {
        let line = row_idx + 2; // 1-based, after the header
        let record =
            record.map_err(|e| Error::Data(format!("archive line {line}: {e}")))?;
        let field = |i: usize| record.get(i).unwrap_or("");

        let station_id = field(0).to_owned();
        if station_id.is_empty() {
            return Err(Error::Data(format!("archive line {line}: empty station_id")));
        }
        let init_time = DateTime::parse_from_rfc3339(field(1))
            .map_err(|e| Error::Data(format!("archive line {line}: bad init_time: {e}")))?
            .with_timezone(&Utc);
        let lead_minutes: u32 = field(2)
            .parse()
            .map_err(|e| Error::Data(format!("archive line {line}: bad lead_minutes: {e}")))?;

        let parse_opt = |raw: &str, what: &str| -> Result<Option<f64>> {
            if raw.is_empty() {
                return Ok(None);
            }
            let v: f64 = raw
                .parse()
                .map_err(|e| Error::Data(format!("archive line {line}: bad {what}: {e}")))?;
            if !v.is_finite() {
                return Err(Error::Data(format!(
                    "archive line {line}: non-finite {what}"
                )));
            }
            Ok(Some(v))
        };

        let mut observation = parse_opt(field(3), "obs")?;
        match observation {
            None => summary.missing_observations += 1,
            Some(v) if v < 0.0 => {
                summary.clamped_observations += 1;
                observation = Some(0.0);
            }
            _ => {}
        }
        let clear_sky = if has_clear_sky {
            parse_opt(field(4), "clear_sky")?
        } else {
            None
        };

        let mut members = Vec::with_capacity(member_columns.len());
        for (j, _) in member_columns.iter().enumerate() {
            let raw = field(member_start + j);
            let v = parse_opt(raw, "member")?.ok_or_else(|| {
                Error::Data(format!(
                    "archive line {line}: empty member field '{}'",
                    member_columns[j]
                ))
            })?;
            if v < 0.0 {
                summary.clamped_members += 1;
                members.push(0.0);
            } else {
                members.push(v);
            }
        }

        summary.rows += 1;
        cases.push(ForecastCase {
            station_id,
            init_time,
            lead_minutes,
            observation,
            clear_sky,
            members,
        });
    }

    cases.sort_by(|a, b| {
        (&a.station_id, a.init_time, a.lead_minutes)
            .cmp(&(&b.station_id, b.init_time, b.lead_minutes))
    });
    let mut keys = BTreeSet::new();
    for c in &cases {
        if !keys.insert((c.station_id.clone(), c.init_time, c.lead_minutes)) {
            return Err(Error::Data(format!(
                "duplicate case ({}, {}, {} min)",
                c.station_id,
                c.init_time.to_rfc3339_opts(SecondsFormat::Secs, true),
                c.lead_minutes
            )));
        }
    }

    Ok(Archive {
        member_columns,
        has_clear_sky,
        cases,
        ingest: summary,
    })
}

/// Formats an f64 with the shortest representation that parses back to the
/// same bits; used for all numeric CSV output so round trips are lossless.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Writes an archive back out in the ingestion format.
pub fn write_archive(archive: &Archive, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_archive_to(archive, file)
}

/// Writes an archive to any writer.
pub fn write_archive_to<W: Write>(archive: &Archive, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec![
        "station_id".to_owned(),
        "init_time".to_owned(),
        "lead_minutes".to_owned(),
        "obs".to_owned(),
    ];
    if archive.has_clear_sky {
        header.push("clear_sky".to_owned());
    }
    header.extend(archive.member_columns.iter().cloned());
    wtr.write_record(&header)?;

    for c in &archive.cases {
        let mut rec = vec![
            c.station_id.clone(),
            c.init_time.to_rfc3339_opts(SecondsFormat::AutoSi, true),
            c.lead_minutes.to_string(),
            c.observation.map(fmt_f64).unwrap_or_default(),
        ];
        if archive.has_clear_sky {
            rec.push(c.clear_sky.map(fmt_f64).unwrap_or_default());
        }
        rec.extend(c.members.iter().map(|&m| fmt_f64(m)));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a group-spec file (JSON) and resolves it against member columns.
pub fn read_group_spec(path: &Path, member_columns: &[String]) -> Result<GroupSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read group spec {}: {e}", path.display())))?;
    let file: GroupSpecFile = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("bad group spec {}: {e}", path.display())))?;
    GroupSpec::resolve(&file, member_columns)
}
