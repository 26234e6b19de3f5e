//! Command-line interface.
//!
//! Exit codes: 0 success, 1 failed verification or I/O error, 2 bad input
//! (syntax, domain, declarations, usage, config), 3 the integration or the
//! convergence analysis failed.

mod commands;
pub mod config;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::analysis::AnalysisError;
use crate::compiler::{CompileError, LogSystem};
use crate::crn::CrnError;
use crate::sim::SimError;

#[derive(Debug, Parser)]
#[command(name = "crncalc", version, about = "Compile expressions into reaction networks and certify their convergence rates")]
pub struct Cli {
    /// `key = value` file supplying defaults for any long flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compile a circuit and write its network and metadata sidecar.
    Compile {
        #[command(flatten)]
        circuit: CircuitArgs,
        /// Network file [default: circuit.crn].
        #[arg(long, short = 'o')]
        out: Option<PathBuf>,
        /// Metadata sidecar [default: <out>.meta].
        #[arg(long)]
        meta: Option<PathBuf>,
    },
    /// Integrate a circuit and write its trajectory.
    Simulate {
        #[command(flatten)]
        circuit: CircuitArgs,
        #[command(flatten)]
        run: RunArgs,
        /// `species=value` initial override, checked against derived rules.
        #[arg(long = "init", value_name = "SPECIES=V")]
        init: Vec<String>,
        /// `species=value` initial override applied without checks.
        #[arg(long = "perturb-init", value_name = "SPECIES=V")]
        perturb_init: Vec<String>,
        /// Trajectory CSV [default: trajectory.csv].
        #[arg(long, short = 'o')]
        out: Option<PathBuf>,
        /// Also write `t log10|error|` data for gnuplot.
        #[arg(long)]
        gnuplot: Option<PathBuf>,
    },
    /// Estimate convergence rates over a grid of constant inputs.
    Sweep {
        #[command(flatten)]
        circuit: CircuitArgs,
        #[command(flatten)]
        run: RunArgs,
        /// `name=v1,v2,...`; several grids form a cartesian product.
        #[arg(long, value_name = "NAME=V,..")]
        grid: Vec<String>,
        /// Rate every grid point must reach.
        #[arg(long, allow_negative_numbers = true)]
        threshold: Option<f64>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        gnuplot: Option<PathBuf>,
    },
    /// Run the built-in acceptance checks.
    Verify {
        /// `all`, a check name or a criterion number.
        selector: Option<String>,
        /// Skip the high-accuracy confirmation runs.
        #[arg(long)]
        quick: bool,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Write a circuit as a reaction list or as ODE text.
    Export {
        #[command(flatten)]
        circuit: CircuitArgs,
        /// `crn` or `ode`.
        #[arg(long)]
        format: Option<String>,
        /// Output file [default: stdout].
        #[arg(long, short = 'o')]
        out: Option<PathBuf>,
    },
}

/// Where the circuit comes from: an expression, a library module, or a
/// network/ODE file.
#[derive(Debug, Clone, Default, Args)]
pub struct CircuitArgs {
    pub expr: Option<String>,
    /// Library module by name, e.g. `log6`, `exp_real`, `root3`.
    #[arg(long, conflicts_with_all = ["expr", "network"])]
    pub module: Option<String>,
    /// Reaction list or ODE text file.
    #[arg(long, conflicts_with = "expr")]
    pub network: Option<PathBuf>,
    /// Output species of `--network`.
    #[arg(long)]
    pub output: Option<String>,
    /// Input declaration `name:real`, `name:nonneg(lo,hi)`, `name:pos`.
    #[arg(long = "in", value_name = "DECL")]
    pub decls: Vec<String>,
    /// Logarithm construction: 1, 1r, 2, 3, 4, 5 or 6.
    #[arg(long)]
    pub log_system: Option<LogSystem>,
    /// `static` or `synthesized`.
    #[arg(long)]
    pub const_e: Option<String>,
    /// Accept input values outside a module's domain.
    #[arg(long)]
    pub relax_domain: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// `name=v` for a constant input or `name=from:to@rate` for one relaxing
    /// exponentially.
    #[arg(long = "value", value_name = "NAME=V")]
    pub values: Vec<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub t_end: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub rel_tol: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub abs_tol: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub max_step: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Tight tolerances and a confirming second run.
    #[arg(long)]
    pub oracle: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        CliError { code, message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        CliError::new(2, message)
    }

    pub fn io(what: &str, e: std::io::Error) -> Self {
        CliError::new(1, format!("{what}: {e}"))
    }

    /// Compile errors, with a caret under the offending byte for syntax
    /// errors.
    pub fn compile(e: CompileError, source: Option<&str>) -> Self {
        match (&e, source) {
            (CompileError::Syntax(s), Some(src)) => {
                let col = src[..s.offset.min(src.len())].chars().count();
                CliError::usage(format!("{e}\n  {src}\n  {}^", " ".repeat(col)))
            }
            _ => CliError::usage(e.to_string()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<CompileError> for CliError {
    fn from(e: CompileError) -> Self {
        CliError::compile(e, None)
    }
}

impl From<CrnError> for CliError {
    fn from(e: CrnError) -> Self {
        CliError::usage(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::InvalidConfig(_) | SimError::Dimension { .. } | SimError::Csv { .. } => {
                CliError::usage(e.to_string())
            }
            SimError::StepFailure { .. } | SimError::NonFinite { .. } | SimError::OracleDisagreement { .. } => {
                CliError::new(3, e.to_string())
            }
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Sim(s) => s.into(),
            AnalysisError::Compile(c) => c.into(),
            AnalysisError::NotConverged { .. } | AnalysisError::DegenerateFit(_) => CliError::new(3, e.to_string()),
        }
    }
}

/// Parses arguments, runs the command and returns the exit code.
/// Summaries go to stdout and diagnostics to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match commands::dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
