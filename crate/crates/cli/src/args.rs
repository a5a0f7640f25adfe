use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::{Serialize, Serializer};

#[derive(Debug, Parser)]
#[command(name = "evqc", version, about = "Expectation-value quantum computing experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one classification protocol on a function.
    Classify(ClassifyArgs),
    /// Tabulate E(f) over every function of a class (n <= 3).
    Survey(SurveyArgs),
    /// Search for the largest |c|/Lambda(M) among operators isospectral with F_x.
    SearchC(SearchArgs),
    /// Check the classical adversary on random and exhaustive query sets.
    Adversary(AdversaryArgs),
    /// Sample the time-domain signal and its spectrum.
    Signal(SignalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    Pseudopure,
    CnThermal,
    Lifted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassArg {
    Constant,
    Balanced,
    Cn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurveyClass {
    All,
    Constant,
    Balanced,
    Cn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateArg {
    PureW,
    Pseudopure,
    Thermal,
    Pulsed,
}

/// Measurement operator selector: `w`, `fx`, `fy` or `ixj:<i>` (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureArg {
    W,
    Fx,
    Fy,
    Ixj(usize),
}

impl FromStr for MeasureArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "w" => Ok(MeasureArg::W),
            "fx" => Ok(MeasureArg::Fx),
            "fy" => Ok(MeasureArg::Fy),
            _ => s
                .strip_prefix("ixj:")
                .and_then(|i| i.parse().ok())
                .filter(|&i| i >= 1)
                .map(MeasureArg::Ixj)
                .ok_or_else(|| format!("unknown measurement '{s}' (expected w, fx, fy or ixj:<i>)")),
        }
    }
}

impl fmt::Display for MeasureArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasureArg::W => f.write_str("w"),
            MeasureArg::Fx => f.write_str("fx"),
            MeasureArg::Fy => f.write_str("fy"),
            MeasureArg::Ixj(i) => write!(f, "ixj:{i}"),
        }
    }
}

impl Serialize for MeasureArg {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Args, Serialize)]
#[command(group(ArgGroup::new("input").required(true).args(["func", "class"])))]
pub struct ClassifyArgs {
    #[arg(long, value_enum)]
    pub protocol: Protocol,
    /// Resolution parameter.
    #[arg(long)]
    pub eps: f64,
    /// Function file ("n=<int>" header, then bits or 0x-hex).
    #[arg(long = "fn", value_name = "PATH", conflicts_with = "class")]
    pub func: Option<PathBuf>,
    /// Draw the function from a class instead of reading a file.
    #[arg(long, value_enum, requires = "n")]
    pub class: Option<ClassArg>,
    /// Bit count of the function (with --class).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Pseudopure polarization.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Spin-system JSON; defaults to the built-in demo system.
    #[arg(long, value_name = "PATH")]
    pub sys: Option<PathBuf>,
    /// Also write the record to this file.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SurveyArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = SurveyClass::All)]
    pub class: SurveyClass,
    #[arg(long, default_value = "w")]
    pub measure: MeasureArg,
    #[arg(long, value_enum, default_value_t = StateArg::PureW)]
    pub state: StateArg,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, value_name = "PATH")]
    pub sys: Option<PathBuf>,
    /// CSV destination; the table goes to stdout when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SearchArgs {
    #[arg(long)]
    pub n: usize,
    /// Total objective evaluations across restarts.
    #[arg(long, default_value_t = 100_000)]
    pub budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub restarts: usize,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct AdversaryArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SignalArgs {
    #[arg(long, value_name = "PATH")]
    pub sys: PathBuf,
    /// Sampling interval.
    #[arg(long)]
    pub dt: f64,
    #[arg(long, default_value_t = 1024)]
    pub count: usize,
    #[arg(long, default_value = "fx")]
    pub measure: MeasureArg,
    #[arg(long, value_enum, default_value_t = StateArg::Pulsed)]
    pub state: StateArg,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Apply this function's oracle to the state before sampling.
    #[arg(long = "fn", value_name = "PATH")]
    pub func: Option<PathBuf>,
    /// Directory for trace.csv and spectrum.csv.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Also dump the measurement operator in the text dump format.
    #[arg(long, value_name = "PATH")]
    pub dump_op: Option<PathBuf>,
}
