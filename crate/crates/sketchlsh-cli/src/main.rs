//! Command-line front end: `bench` (recall-versus-L sweeps), `validate`
//! (Monte-Carlo checks of the collision laws and sketch distribution),
//! `scaling` (space and time tables over a grid of code lengths), and `info`
//! (resolved configuration and sensitivity numbers).
//!
//! Every output begins with a one-line JSON manifest of the fully resolved
//! configuration; a run is reproducible from that line alone (wall-time
//! fields aside). Exit codes: 0 success, 1 usage error, 2 validation
//! failure, 3 I/O error.

mod commands;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Validation(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Validation(m) => write!(f, "validation failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<sketchlsh::Error> for CliError {
    fn from(e: sketchlsh::Error) -> Self {
        match e {
            sketchlsh::Error::Io(_) | sketchlsh::Error::Csv(_) | sketchlsh::Error::Json(_) => {
                CliError::Io(e.to_string())
            }
            other => CliError::Usage(other.to_string()),
        }
    }
}

/// The fully resolved configuration echoed into every output file header.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    pub threads: usize,
    pub flags: BTreeMap<String, serde_json::Value>,
}

impl RunManifest {
    pub fn new(command: &str, flags: BTreeMap<String, serde_json::Value>) -> Self {
        RunManifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            threads: sketchlsh::exec::worker_threads(),
            flags,
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("manifest serializes")
    }
}

/// Synthetic dataset shape, written `n=5000,d=1024`.
#[derive(Debug, Clone, Copy)]
pub struct SynthSpec {
    pub n: usize,
    pub d: usize,
}

fn parse_synth(s: &str) -> Result<SynthSpec, String> {
    let mut n = None;
    let mut d = None;
    for part in s.split(',') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, got '{part}'"))?;
        let value: usize = value
            .trim()
            .parse()
            .map_err(|_| format!("'{}' is not a positive integer", value.trim()))?;
        match key.trim() {
            "n" => n = Some(value),
            "d" => d = Some(value),
            other => return Err(format!("unknown key '{other}' (expected n and d)")),
        }
    }
    match (n, d) {
        (Some(n), Some(d)) if n >= 1 && d >= 1 => Ok(SynthSpec { n, d }),
        (Some(_), Some(_)) => Err("n and d must be at least 1".to_string()),
        _ => Err("both n and d are required, e.g. n=5000,d=1024".to_string()),
    }
}

/// Table counts to sweep: an inclusive range `1..20`, a single value, or a
/// comma list.
#[derive(Debug, Clone)]
pub struct LRange(Vec<usize>);

impl LRange {
    pub fn values(&self) -> Vec<usize> {
        self.0.clone()
    }

    pub fn display(&self) -> String {
        let v = &self.0;
        let contiguous = v.windows(2).all(|w| w[1] == w[0] + 1);
        if v.len() > 1 && contiguous {
            format!("{}..{}", v[0], v[v.len() - 1])
        } else {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        }
    }
}

fn parse_l_range(s: &str) -> Result<LRange, String> {
    let parse_one = |t: &str| -> Result<usize, String> {
        let v: usize = t
            .trim()
            .parse()
            .map_err(|_| format!("'{}' is not a positive integer", t.trim()))?;
        if v == 0 {
            return Err("table counts must be at least 1".to_string());
        }
        Ok(v)
    };
    if let Some((lo, hi)) = s.split_once("..") {
        let lo = parse_one(lo)?;
        let hi = parse_one(hi)?;
        if lo > hi {
            return Err(format!("empty range {lo}..{hi}"));
        }
        return Ok(LRange((lo..=hi).collect()));
    }
    let mut values: Vec<usize> = s
        .split(',')
        .map(parse_one)
        .collect::<Result<Vec<_>, _>>()?;
    values.sort_unstable();
    values.dedup();
    Ok(LRange(values))
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
pub struct DataArgs {
    /// Synthetic Gaussian dataset, e.g. n=5000,d=1024
    #[arg(long, value_name = "SPEC", value_parser = parse_synth)]
    pub synth: Option<SynthSpec>,
    /// CSV dataset: one vector per row, optional header, '#' comments
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
    /// fvecs dataset (little-endian dimension-prefixed float records)
    #[arg(long, value_name = "PATH")]
    pub fvecs: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Comma-separated schemes: e2lsh, srp, cs-e2lsh, cs-srp, hcs-e2lsh,
    /// hcs-srp, or 'all'
    #[arg(long, value_delimiter = ',', default_value = "all")]
    pub schemes: Vec<String>,
    /// Hash coordinates per table
    #[arg(long, default_value_t = 8)]
    pub m: usize,
    /// Neighbors to retrieve (and size of the exact ground-truth set)
    #[arg(long, default_value_t = 50)]
    pub k: usize,
    /// Table counts to sweep: inclusive range like 1..20, or a comma list
    #[arg(long = "L", value_name = "RANGE", value_parser = parse_l_range, default_value = "1..50")]
    pub l: LRange,
    /// Bucket width for the Euclidean schemes (default 4.0)
    #[arg(long)]
    pub w: Option<f64>,
    /// Tensor order for the higher-order schemes
    #[arg(long, default_value_t = 2)]
    pub order: usize,
    /// Independent repetitions (distinct derived seeds) per scheme
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    /// Tail rows held out as the query set
    #[arg(long, default_value_t = 100)]
    pub queries: usize,
    /// Hold out a random tenth of the rows as queries instead of the tail
    #[arg(long)]
    pub random_split: bool,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Stop the sweep once mean recall reaches this threshold (0.99 when the
    /// flag is given bare)
    #[arg(long, value_name = "RECALL", num_args = 0..=1, default_missing_value = "0.99")]
    pub auto_stop: Option<f64>,
    /// Output file (stdout when omitted)
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Output format: csv or jsonl
    #[arg(long, default_value = "csv")]
    pub format: String,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    /// Monte-Carlo trials per (scheme, geometry) cell
    #[arg(long, default_value_t = 20_000)]
    pub trials: usize,
    /// Input dimension
    #[arg(long, default_value_t = 10_000)]
    pub d: usize,
    /// Independent plans for the sketch-distribution diagnostics
    #[arg(long, default_value_t = 1_000)]
    pub plans: usize,
    /// Sketch length for the diagnostics
    #[arg(long, default_value_t = 16)]
    pub m: usize,
    /// Comma-separated schemes or 'all'
    #[arg(long, value_delimiter = ',', default_value = "all")]
    pub schemes: Vec<String>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output file (stdout when omitted)
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ScalingArgs {
    /// Input dimension
    #[arg(long, default_value_t = 10_000)]
    pub d: usize,
    /// Code lengths to tabulate
    #[arg(long, value_delimiter = ',', default_values_t = [8usize, 16, 32, 64])]
    pub m: Vec<usize>,
    /// Tensor orders for the higher-order schemes
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 3])]
    pub orders: Vec<usize>,
    /// Timing repetitions per cell
    #[arg(long, default_value_t = 300)]
    pub reps: usize,
    /// Comma-separated schemes or 'all'
    #[arg(long, value_delimiter = ',', default_value = "all")]
    pub schemes: Vec<String>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output file (stdout when omitted)
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct InfoArgs {
    /// Scheme to describe
    #[arg(long, default_value = "e2lsh")]
    pub scheme: String,
    #[arg(long, default_value_t = 10_000)]
    pub d: usize,
    #[arg(long, default_value_t = 8)]
    pub m: usize,
    #[arg(long, default_value_t = 2)]
    pub order: usize,
    #[arg(long, default_value_t = 4.0)]
    pub w: f64,
    /// Near Euclidean threshold
    #[arg(long, default_value_t = 1.0)]
    pub r1: f64,
    /// Far Euclidean threshold
    #[arg(long, default_value_t = 2.0)]
    pub r2: f64,
    /// Near angle in radians
    #[arg(long, default_value_t = PI / 6.0)]
    pub theta1: f64,
    /// Far angle in radians
    #[arg(long, default_value_t = PI / 3.0)]
    pub theta2: f64,
    /// Output file (stdout when omitted)
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Recall-versus-L benchmark over one or more schemes
    Bench(BenchArgs),
    /// Monte-Carlo validation of the collision laws and sketch distribution
    Validate(ValidateArgs),
    /// Space and hash-time tables over a grid of code lengths
    Scaling(ScalingArgs),
    /// Resolved configuration, sensitivity numbers, and validity warnings
    Info(InfoArgs),
}

#[derive(Parser, Debug)]
#[command(
    name = "sketchlsh",
    version,
    about = "Locality-sensitive hashing with sketched projections: benchmark, validate, and inspect"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Ok(raw) = std::env::var("SKETCHLSH_THREADS") {
        match raw.trim().parse::<usize>() {
            Ok(n) if n >= 1 => {
                sketchlsh::exec::set_worker_threads(n);
            }
            _ => {
                eprintln!("usage error: SKETCHLSH_THREADS='{raw}' is not a positive integer");
                return ExitCode::from(1);
            }
        }
    }
    let result = match &cli.command {
        Command::Bench(args) => commands::cmd_bench(args),
        Command::Validate(args) => commands::cmd_validate(args),
        Command::Scaling(args) => commands::cmd_scaling(args),
        Command::Info(args) => commands::cmd_info(args),
    };
    match result {
        Ok(code) => {
            if code != 0 {
                eprintln!("validation failure: one or more checks exceeded their bounds");
            }
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
