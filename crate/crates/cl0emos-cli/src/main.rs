//! Command-line pipeline: `train`, `predict` and `verify` run the three
//! stages of censored-logistic ensemble post-processing from a single JSON
//! run config; `simulate` generates synthetic archives for testing.
//!
//! Exit codes: 0 success, 1 config error, 2 data/numerics error, 3 partial
//! failure (some cells failed but output was written).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cl0emos::config::{resolve_output_dir, resolve_seed, RunConfig};
use cl0emos::data::write_archive;
use cl0emos::pipeline::{
    load_archive, predict, read_forecasts, read_model_store, train, verify, write_forecasts,
    write_model_store, write_verify_outputs,
};
use cl0emos::simulate::{simulate, Scenario, SimulateSpec};
use cl0emos::{Error, Result};

#[derive(Parser)]
#[command(
    name = "cl0emos",
    version,
    about = "EMOS post-processing of ensemble solar-irradiance forecasts \
             with a zero-censored logistic predictive distribution"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by the pipeline stages; every path flag overrides the
/// corresponding config entry.
#[derive(Args)]
struct StageArgs {
    /// Run-config JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Forecast archive CSV (overrides the config).
    #[arg(long)]
    archive: Option<PathBuf>,
    /// Output directory (overrides the config and CL0EMOS_OUT_DIR).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit coefficients for every station/init/lead cell and training
    /// period in the archive.
    Train {
        #[command(flatten)]
        stage: StageArgs,
        /// Member-grouping JSON (overrides the config).
        #[arg(long)]
        groups: Option<PathBuf>,
        /// Model-store output file (default: <out>/models.json).
        #[arg(long)]
        models: Option<PathBuf>,
    },
    /// Apply a fitted model store to every case of an archive.
    Predict {
        #[command(flatten)]
        stage: StageArgs,
        /// Model-store file (default: <out>/models.json).
        #[arg(long)]
        models: Option<PathBuf>,
        /// Forecast output CSV (default: <out>/forecasts.csv).
        #[arg(long)]
        forecasts: Option<PathBuf>,
    },
    /// Score a forecast file against the archive's observations and write
    /// the report tables.
    Verify {
        #[command(flatten)]
        stage: StageArgs,
        /// Forecast CSV to score (default: <out>/forecasts.csv).
        #[arg(long)]
        forecasts: Option<PathBuf>,
        /// Master seed for PIT randomization, rank tie-breaking and the
        /// bootstrap (overrides the config; mandatory in one of the two).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Generate a synthetic archive with diurnal and annual cycles and a
    /// configurable forecast error structure.
    Simulate {
        /// Output directory for archive.csv and groups.json.
        #[arg(long)]
        out: PathBuf,
        /// Seed for all simulated randomness.
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = CliScenario::Biased)]
        scenario: CliScenario,
        /// Number of stations.
        #[arg(long, default_value_t = 5)]
        stations: usize,
        /// First init date (YYYY-MM-DD).
        #[arg(long, default_value = "2020-01-01")]
        start: String,
        /// Number of daily init times.
        #[arg(long, default_value_t = 120)]
        days: u32,
        /// Ensemble size.
        #[arg(long, default_value_t = 11)]
        members: usize,
        /// First lead time in minutes.
        #[arg(long, default_value_t = 60)]
        lead_start: u32,
        /// Lead-time step in minutes.
        #[arg(long, default_value_t = 60)]
        lead_step: u32,
        /// Number of lead times.
        #[arg(long, default_value_t = 24)]
        lead_count: u32,
        /// Additive ensemble bias as a fraction of the signal (overrides
        /// the scenario).
        #[arg(long)]
        bias: Option<f64>,
        /// Ensemble spread multiplier (overrides the scenario).
        #[arg(long)]
        spread: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CliScenario {
    /// Unbiased ensemble with correct spread.
    Calibrated,
    /// 20% additive bias, spread halved.
    Biased,
}

impl From<CliScenario> for Scenario {
    fn from(s: CliScenario) -> Scenario {
        match s {
            CliScenario::Calibrated => Scenario::Calibrated,
            CliScenario::Biased => Scenario::Biased,
        }
    }
}

fn load_config(stage: &StageArgs, groups: Option<&PathBuf>) -> Result<RunConfig> {
    let mut config = RunConfig::load(&stage.config)?;
    if let Some(archive) = &stage.archive {
        config.archive = archive.clone();
    }
    if let Some(groups) = groups {
        config.groups = Some(groups.clone());
    }
    Ok(config)
}

fn print_warnings(config: &RunConfig) -> Result<()> {
    for w in config.validate()? {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn cmd_train(stage: StageArgs, groups: Option<PathBuf>, models: Option<PathBuf>) -> Result<()> {
    let config = load_config(&stage, groups.as_ref())?;
    print_warnings(&config)?;
    let archive = load_archive(&config)?;
    let stations: std::collections::BTreeSet<&str> =
        archive.cases.iter().map(|c| c.station_id.as_str()).collect();
    eprintln!(
        "archive: {} cases, {} members, {} stations",
        archive.cases.len(),
        archive.member_columns.len(),
        stations.len()
    );
    let (store, summary) = train(&config, &archive)?;
    for w in &summary.warnings {
        eprintln!("warning: {w}");
    }
    let path = match models {
        Some(p) => p,
        None => resolve_output_dir(stage.out, &config).and_then(|dir| {
            std::fs::create_dir_all(&dir)?;
            Ok(dir.join("models.json"))
        })?,
    };
    write_model_store(&store, &path)?;
    eprintln!(
        "trained {} fits over {} cells ({} skipped for data, {} night, {} unconverged) -> {}",
        summary.fits,
        summary.cells,
        summary.skipped_insufficient,
        summary.degenerate,
        summary.unconverged,
        path.display()
    );
    if summary.failed > 0 {
        return Err(Error::Partial {
            failed: summary.failed,
            total: summary.failed + summary.fits,
            detail: "see warnings above; the model store holds the successful fits".into(),
        });
    }
    Ok(())
}

fn cmd_predict(
    stage: StageArgs,
    models: Option<PathBuf>,
    forecasts: Option<PathBuf>,
) -> Result<()> {
    let config = load_config(&stage, None)?;
    print_warnings(&config)?;
    let archive = load_archive(&config)?;
    let out_dir = |clo: Option<PathBuf>| resolve_output_dir(clo, &config);
    let models_path = match models {
        Some(p) => p,
        None => out_dir(stage.out.clone())?.join("models.json"),
    };
    let store = read_model_store(&models_path)?;
    let (fc, summary) = predict(&config, &archive, &store)?;
    let path = match forecasts {
        Some(p) => p,
        None => {
            let dir = out_dir(stage.out)?;
            std::fs::create_dir_all(&dir)?;
            dir.join("forecasts.csv")
        }
    };
    write_forecasts(&fc, &path)?;
    eprintln!(
        "predicted {} rows ({} modeled, {} passthrough) -> {}",
        summary.rows,
        summary.modeled,
        summary.passthrough,
        path.display()
    );
    Ok(())
}

fn cmd_verify(stage: StageArgs, forecasts: Option<PathBuf>, seed: Option<u64>) -> Result<()> {
    let config = load_config(&stage, None)?;
    print_warnings(&config)?;
    let seed = resolve_seed(seed, &config)?;
    let archive = load_archive(&config)?;
    let dir = resolve_output_dir(stage.out, &config)?;
    let forecasts_path = forecasts.unwrap_or_else(|| dir.join("forecasts.csv"));
    let fc = read_forecasts(&forecasts_path)?;
    let report = verify(&config, &archive, &fc, seed)?;
    std::fs::create_dir_all(&dir)?;
    write_verify_outputs(&report, &dir)?;
    let c = &report.counts;
    if c.unmatched > 0 || c.missing_observation > 0 {
        eprintln!(
            "warning: {} rows without archive case, {} without observation",
            c.unmatched, c.missing_observation
        );
    }
    let pooled = &report.axes["pooled"][0];
    eprintln!(
        "scored {} cases ({} passthrough): mean CRPS {:.3} vs raw {:.3}, skill {} -> {}",
        c.scored,
        c.passthrough,
        pooled.mean_crps_fc,
        pooled.mean_crps_raw,
        pooled
            .crpss_vs_raw
            .map_or_else(|| "n/a".to_owned(), |s| format!("{s:.4}")),
        dir.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    out: PathBuf,
    seed: u64,
    scenario: CliScenario,
    stations: usize,
    start: String,
    days: u32,
    members: usize,
    lead_start: u32,
    lead_step: u32,
    lead_count: u32,
    bias: Option<f64>,
    spread: Option<f64>,
) -> Result<()> {
    let start = start
        .parse::<chrono::NaiveDate>()
        .map_err(|e| Error::Config(format!("bad --start date: {e}")))?;
    let mut spec = SimulateSpec {
        members,
        lead_start_minutes: lead_start,
        lead_step_minutes: lead_step,
        lead_count,
        ..SimulateSpec::new(stations, start, days, scenario.into(), seed)
    };
    if let Some(b) = bias {
        spec.bias_frac = b;
    }
    if let Some(s) = spread {
        spec.spread_factor = s;
    }
    let (archive, groups) = simulate(&spec)?;
    std::fs::create_dir_all(&out)?;
    let archive_path = out.join("archive.csv");
    write_archive(&archive, &archive_path)?;
    let mut groups_text = serde_json::to_string_pretty(&groups)
        .map_err(cl0emos::Error::from)?;
    groups_text.push('\n');
    std::fs::write(out.join("groups.json"), groups_text)?;
    eprintln!(
        "simulated {} cases ({} stations x {} days x {} leads, {} members) -> {}",
        archive.cases.len(),
        stations,
        days,
        lead_count,
        members,
        out.display()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { stage, groups, models } => cmd_train(stage, groups, models),
        Command::Predict { stage, models, forecasts } => cmd_predict(stage, models, forecasts),
        Command::Verify { stage, forecasts, seed } => cmd_verify(stage, forecasts, seed),
        Command::Simulate {
            out,
            seed,
            scenario,
            stations,
            start,
            days,
            members,
            lead_start,
            lead_step,
            lead_count,
            bias,
            spread,
        } => cmd_simulate(
            out, seed, scenario, stations, start, days, members, lead_start, lead_step,
            lead_count, bias, spread,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(u8::try_from(e.exit_code()).unwrap_or(2))
        }
    }
}
