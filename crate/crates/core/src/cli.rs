//! The `ria` command line.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::decoder::DEFAULT_TOLERANCE;
use crate::dof;
use crate::error::{DofError, ProtocolError};
use crate::protocol::TrialConfig;
use crate::report::{self, Parameters, Report};
use crate::sim;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "ria",
    version,
    about = "Sum-DoF theory and simulation for the K-user MISO interference channel with delayed local CSIT"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sum DoF, per-order DoF and comparators for one K.
    Theory {
        #[arg(long)]
        k: usize,
        /// Also evaluate the objective at this n.
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Sum DoF and comparators for K = 2..=k.
    Sweep {
        #[arg(long, alias = "k-max")]
        k: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Replication plan: rounds and slots of every phase.
    Plan {
        #[arg(long)]
        k: usize,
        /// Active transmitters in phase 1 [default: optimal n].
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Seeded end-to-end trials with backward decoding.
    Simulate {
        #[arg(long)]
        k: usize,
        /// Active transmitters in phase 1 [default: optimal n].
        #[arg(long)]
        n: Option<usize>,
        /// Antennas per transmitter, K or K-1 [default: K].
        #[arg(long)]
        antennas: Option<usize>,
        #[arg(long, default_value_t = 10)]
        trials: u64,
        #[arg(long, env = "RIA_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Runtime(String),
}

impl From<DofError> for Failure {
    fn from(e: DofError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<ProtocolError> for Failure {
    fn from(e: ProtocolError) -> Self {
        match e {
            ProtocolError::Config(_) | ProtocolError::Dof(_) => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn default_n(k: usize) -> Result<usize, DofError> {
    Ok(dof::sum_dof(k)?.n_star)
}

fn emit(report: &Report, output: &OutputArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let mut bytes = Vec::new();
    match output.format {
        Format::Json => bytes.extend_from_slice(report.to_json().as_bytes()),
        Format::Csv => report
            .write_csv(&mut bytes)
            .map_err(|e| Failure::Runtime(e.to_string()))?,
    }
    let written = match &output.out {
        Some(path) => File::create(path).and_then(|mut f| f.write_all(&bytes)),
        None => stdout.write_all(&bytes),
    };
    written.map_err(|e| Failure::Runtime(format!("cannot write report: {e}")))
}

fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<bool, Failure> {
    match cli.command {
        Command::Theory { k, n, output } => {
            let mut r = Report::new(
                "theory",
                Parameters {
                    k,
                    n,
                    ..Default::default()
                },
            );
            r.theory = Some(report::theory(k, n)?);
            emit(&r, &output, stdout)?;
            Ok(true)
        }
        Command::Sweep { k, output } => {
            let mut r = Report::new(
                "sweep",
                Parameters {
                    k,
                    ..Default::default()
                },
            );
            r.sweep = Some(report::sweep(k)?);
            emit(&r, &output, stdout)?;
            Ok(true)
        }
        Command::Plan { k, n, output } => {
            let n = match n {
                Some(n) => n,
                None => default_n(k)?,
            };
            let mut r = Report::new(
                "plan",
                Parameters {
                    k,
                    n: Some(n),
                    ..Default::default()
                },
            );
            r.plan = Some(report::plan(k, n)?);
            emit(&r, &output, stdout)?;
            Ok(true)
        }
        Command::Simulate {
            k,
            n,
            antennas,
            trials,
            seed,
            tol,
            output,
        } => {
            let n = match n {
                Some(n) => n,
                None => default_n(k)?,
            };
            let antennas = antennas.unwrap_or(k);
            let cfg = TrialConfig::new(k, n, antennas, seed)?;
            let campaign = sim::simulate(&cfg, trials, tol)?;
            let ok = campaign.all_passed();
            let mut r = Report::new(
                "simulate",
                Parameters {
                    k,
                    n: Some(n),
                    antennas: Some(antennas),
                    seed: Some(seed),
                    trials: Some(trials),
                    tolerance: Some(tol),
                },
            );
            r.simulation = Some(campaign);
            emit(&r, &output, stdout)?;
            Ok(ok)
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code: 0 on success, 1 if any trial failed, 2 for bad input.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                return EXIT_CONFIG;
            }
            let _ = write!(stdout, "{}", e.render());
            return EXIT_OK;
        }
    };
    match execute(cli, stdout) {
        Ok(true) => EXIT_OK,
        Ok(false) => {
            let _ = writeln!(stderr, "ria: one or more trials failed to decode");
            EXIT_FAILED
        }
        Err(Failure::Config(msg)) => {
            let _ = writeln!(stderr, "ria: {msg}");
            EXIT_CONFIG
        }
        Err(Failure::Runtime(msg)) => {
            let _ = writeln!(stderr, "ria: {msg}");
            EXIT_FAILED
        }
    }
}

pub fn main_with_env() -> i32 {
    run(
        std::env::args_os(),
        &mut io::stdout().lock(),
        &mut io::stderr().lock(),
    )
}
