//! `curved-rs`: runs the identity suite, the gauge dichotomy scan and the
//! constraint evaluation from the command line.

mod commands;
mod render;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use curved_rs::identity_suite::MetricSource;
use curved_rs::spacetimes::{parse_metric_config, PresetId};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(curved_rs::Error),
    #[error("{0}")]
    Infrastructure(curved_rs::Error),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Infrastructure(_) | CliError::Io { .. } => 3,
        }
    }

    /// Errors raised while running: bad parameters are the user's, the rest
    /// are numerical or environmental.
    pub fn from_run(e: curved_rs::Error) -> CliError {
        use curved_rs::Error as E;
        match e {
            E::InvalidParameter { .. } | E::UnknownPreset(_) | E::Parse { .. } => {
                CliError::Config(e)
            }
            other => CliError::Infrastructure(other),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "curved-rs",
    version,
    about = "Spin-3/2 field identities on curved backgrounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every registered identity check at sampled points.
    Identities(Common),
    /// Gradient-field residuals against the Einstein-tensor prediction.
    Gauge(Common),
    /// Constraint residuals and the Einstein-space mass scan.
    Constraints {
        #[command(flatten)]
        common: Common,
        /// Mass scan range `LO..HI`.
        #[arg(long, default_value = "0..2", value_parser = parse_range)]
        mass_range: (f64, f64),
        #[arg(long, default_value_t = 40, value_parser = clap::value_parser!(u32).range(1..))]
        mass_steps: u32,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Preset name; `minkowski_cartesian` when no metric is given.
    #[arg(long, conflicts_with = "metric_file")]
    metric: Option<String>,
    /// Metric configuration document.
    #[arg(long)]
    metric_file: Option<PathBuf>,
    /// Metric parameter `NAME=VALUE`; repeatable.
    #[arg(long = "param", value_parser = parse_key_value)]
    params: Vec<(String, f64)>,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    points: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Random fields per point.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    fixtures: u64,
    /// Run only this check; repeatable. Identities command only.
    #[arg(long = "check")]
    checks: Vec<String>,
    /// Tolerance override `CHECK_OR_CLASS=VALUE`; repeatable.
    #[arg(long = "tol", value_parser = parse_key_value)]
    tolerances: Vec<(String, f64)>,
    #[arg(long, default_value_t = 0.7)]
    mass: f64,
    /// Charge coupling a fixed uniform field strength.
    #[arg(long, default_value_t = 0.0)]
    charge: f64,
    /// Write the report here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

impl Common {
    pub fn source(&self) -> Result<MetricSource, CliError> {
        let params: BTreeMap<String, f64> = self.params.iter().cloned().collect();
        let Some(path) = &self.metric_file else {
            let name = self
                .metric
                .as_deref()
                .unwrap_or(PresetId::MinkowskiCartesian.name());
            return PresetId::from_name(name, &params)
                .map(MetricSource::Preset)
                .map_err(CliError::Config);
        };
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Usage(format!("cannot read metric file {}: {e}", path.display()))
        })?;
        let mut cfg = parse_metric_config(&text).map_err(CliError::Config)?;
        for (k, v) in params {
            if !cfg.params.contains_key(&k) {
                return Err(CliError::Usage(format!(
                    "metric file has no parameter `{k}`"
                )));
            }
            cfg.params.insert(k, v);
        }
        Ok(MetricSource::Config(cfg))
    }

    pub fn tolerance_map(&self) -> BTreeMap<String, f64> {
        self.tolerances.iter().cloned().collect()
    }

    fn emit(&self, text: String, json: String) -> Result<(), CliError> {
        let body = match self.format {
            Format::Text => text,
            Format::Json => json + "\n",
        };
        match &self.output {
            Some(path) => std::fs::write(path, body).map_err(|source| CliError::Io {
                context: format!("writing {}", path.display()),
                source,
            }),
            None => {
                print!("{body}");
                Ok(())
            }
        }
    }
}

fn parse_key_value(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    let v: f64 = v
        .trim()
        .parse()
        .map_err(|_| format!("`{v}` is not a number"))?;
    Ok((k.trim().to_string(), v))
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| format!("expected LO..HI, got `{s}`"))?;
    let lo: f64 = lo
        .trim()
        .parse()
        .map_err(|_| format!("`{lo}` is not a number"))?;
    let hi: f64 = hi
        .trim()
        .parse()
        .map_err(|_| format!("`{hi}` is not a number"))?;
    if !(lo >= 0.0 && hi > lo) {
        return Err("need 0 <= LO < HI".to_string());
    }
    Ok((lo, hi))
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("CURVED_RS_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| {
        CliError::Usage(format!(
            "CURVED_RS_THREADS must be a non-negative integer, got `{raw}`"
        ))
    })?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, CliError> {
    configure_threads()?;
    match cli.command {
        Command::Identities(common) => {
            let out = commands::identities(&common)?;
            common.emit(out.text, out.json)?;
            Ok(out.passed)
        }
        Command::Gauge(common) => {
            let out = commands::gauge(&common)?;
            common.emit(out.text, out.json)?;
            Ok(out.passed)
        }
        Command::Constraints {
            common,
            mass_range,
            mass_steps,
        } => {
            let out = commands::constraints(&common, mass_range, mass_steps as usize)?;
            common.emit(out.text, out.json)?;
            Ok(out.passed)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
