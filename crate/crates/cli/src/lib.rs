//! `autolab` command-line front end.
//!
//! Exit codes: 0 success, 1 a validation or comparison check failed, 2 bad input
//! (arguments, configuration, missing or mismatched solution dump), 3 I/O failure,
//! 4 numerical failure (stability bound, non-finite values).

pub mod commands;
pub mod config;
pub mod output;
pub mod plots;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{split_assignment, FlagValues, Format};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Io(String),
    Numerical(String),
    /// The run completed but one of its checks failed.
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::CheckFailed(_) => EXIT_CHECK_FAILED,
            CliError::Input(_) => EXIT_INPUT,
            CliError::Io(_) => EXIT_IO,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::CheckFailed(m) => write!(f, "check failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<autolab_core::Error> for CliError {
    fn from(e: autolab_core::Error) -> Self {
        use autolab_core::Error as E;
        match e {
            E::Io(err) => CliError::Io(err.to_string()),
            E::Stability { .. } | E::NonFinite { .. } | E::ControlOutOfRange { .. } => CliError::Numerical(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "autolab", version, about = "Autonomy depletion under AI transparency: analysis, simulation, optimal control")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Parameter preset.
    #[arg(long)]
    pub preset: Option<String>,
    /// Flat `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Inline override, repeatable: `--set kappa=3`.
    #[arg(long = "set", value_parser = split_assignment)]
    pub sets: Vec<(String, String)>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of sample paths.
    #[arg(long)]
    pub paths: Option<usize>,
    /// Simulation time step.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Structured)]
    pub format: Format,
    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

impl Common {
    fn flag_values(&self, extra: Vec<(String, String)>) -> FlagValues {
        let mut flags = Vec::new();
        if let Some(s) = self.seed {
            flags.push(("master_seed".to_string(), s.to_string()));
        }
        if let Some(n) = self.paths {
            flags.push(("n_paths".to_string(), n.to_string()));
        }
        if let Some(dt) = self.dt {
            flags.push(("dt".to_string(), format!("{dt:?}")));
        }
        flags.extend(extra);
        FlagValues { preset: self.preset.clone(), config: self.config.clone(), sets: self.sets.clone(), flags }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum What {
    CriticalThreshold,
    Drift,
    Moments,
    Hitting,
    Boundary,
    Quality,
    All,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form quantities: drift, critical threshold, moments, hitting times.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = What::All)]
        what: What,
    },
    /// Simulate an ensemble under a policy: optimal, max, none or constant:<level>.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "max")]
        policy: String,
        /// Solution dump, required for the optimal policy.
        #[arg(long)]
        solution: Option<PathBuf>,
        /// Disable absorption at the disengagement boundary.
        #[arg(long)]
        no_boundary: bool,
        /// Also write the first N individual paths.
        #[arg(long, default_value_t = 0)]
        dump_paths: usize,
    },
    /// Solve the HJB equation and write a solution dump.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n_a: Option<usize>,
        #[arg(long)]
        n_i: Option<usize>,
        #[arg(long)]
        n_t: Option<usize>,
        #[arg(long)]
        a_max: Option<f64>,
        /// Skip the half-resolution refinement comparison.
        #[arg(long)]
        no_refine: bool,
        /// Skip the simulated check of the value at the initial state.
        #[arg(long)]
        no_verify: bool,
    },
    /// Compare optimal, maximum and no transparency on a shared seed.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Solution dump written by `solve`.
        #[arg(long)]
        solution: Option<PathBuf>,
    },
    /// Run the five prediction checks and the table reproductions.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Collate outputs already present in a directory; computes nothing.
    Report {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn opt(key: &str, v: Option<impl ToString>) -> Option<(String, String)> {
    v.map(|v| (key.to_string(), v.to_string()))
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Input(format!("cannot start {n} worker threads: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    use config::RunConfig;
    match cli.command {
        Command::Analyze { common, what } => {
            let cfg = RunConfig::resolve(&common.flag_values(vec![]), 5000, common.format, &common.out)?;
            commands::analyze(&cfg, what)
        }
        Command::Simulate { common, policy, solution, no_boundary, dump_paths } => {
            let extra = if no_boundary { vec![("boundary_enabled".to_string(), "false".to_string())] } else { vec![] };
            let cfg = RunConfig::resolve(&common.flag_values(extra), 5000, common.format, &common.out)?;
            with_threads(common.threads, || commands::simulate(&cfg, &policy, solution.as_deref(), dump_paths))?
        }
        Command::Solve { common, n_a, n_i, n_t, a_max, no_refine, no_verify } => {
            let extra = [opt("n_a", n_a), opt("n_i", n_i), opt("n_t", n_t), opt("a_max", a_max.map(|x| format!("{x:?}")))]
                .into_iter()
                .flatten()
                .collect();
            let cfg = RunConfig::resolve(&common.flag_values(extra), 5000, common.format, &common.out)?;
            with_threads(common.threads, || commands::solve(&cfg, !no_refine, !no_verify))?
        }
        Command::Compare { common, solution } => {
            let cfg = RunConfig::resolve(&common.flag_values(vec![]), 1000, common.format, &common.out)?;
            let solution = solution.ok_or_else(|| CliError::Input("compare needs --solution <dump> (write one with `solve`)".into()))?;
            with_threads(common.threads, || commands::compare(&cfg, &solution))?
        }
        Command::Validate { common } => {
            let cfg = RunConfig::resolve(&common.flag_values(vec![]), 5000, common.format, &common.out)?;
            with_threads(common.threads, || commands::validate(&cfg))?
        }
        Command::Report { out } => commands::report(&out),
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("autolab: {e}");
            e.exit_code()
        }
    }
}
