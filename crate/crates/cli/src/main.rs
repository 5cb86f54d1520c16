//! `betaflow` command-line front end.
//!
//! Exit codes: 0 pass, 1 verification failure, 2 usage error, 3 numeric or
//! I/O error.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Suite;
use config::{Family, Format, RunConfig, SamplerArg};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numeric(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<betaflow::Error> for CliError {
    fn from(e: betaflow::Error) -> Self {
        use betaflow::Error as E;
        match e {
            E::Numeric(_) | E::SimulationDiverged { .. } => CliError::Numeric(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "betaflow",
    version,
    about = "High-temperature beta Dyson and Laguerre processes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// u-table, m_n(t) curves and the ξ covariance on a time grid.
    Moments,
    /// Exact p_n, q_n, P_n coefficients and identity verdicts.
    Poly,
    /// ν_c on a grid, its moment check, and a Gauss rule.
    Density,
    /// Simulate replicas and write moment-process series.
    Simulate,
    /// Run a verification suite; exits 1 if any pass flag is false.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
    },
}

/// Flags override the config file, which overrides the defaults.
#[derive(Args, Debug)]
struct Opts {
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// gaussian | laguerre
    #[arg(long, global = true)]
    kind: Option<String>,
    /// Number of particles.
    #[arg(short = 'N', long = "particles", global = true)]
    particles: Option<usize>,
    /// Association parameter (rational, e.g. `1/2`).
    #[arg(short = 'c', long, global = true, allow_hyphen_values = true)]
    c: Option<String>,
    /// Laguerre parameter α > 1/2 (rational).
    #[arg(short = 'a', long, global = true)]
    alpha: Option<String>,
    /// Time horizon.
    #[arg(short = 'T', long = "horizon", global = true)]
    horizon: Option<f64>,
    #[arg(long, global = true)]
    steps: Option<usize>,
    #[arg(long, global = true)]
    substep_factor: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    replicas: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
    /// Highest moment or polynomial order.
    #[arg(long, global = true)]
    nmax: Option<usize>,
    /// Statistic order for the LLN/CLT suites.
    #[arg(short = 'n', long = "order", global = true)]
    order: Option<usize>,
    #[arg(long, global = true)]
    grid_points: Option<usize>,
    /// Quadrature / identity tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, value_enum, global = true)]
    sampler: Option<SamplerArg>,
    /// Jacobi family for the Gauss rule.
    #[arg(long, value_enum, global = true)]
    family: Option<Family>,
    /// Gauss rule size.
    #[arg(long, global = true)]
    nodes: Option<usize>,
    /// Density grid half-width and moment cutoff.
    #[arg(long, global = true)]
    x_max: Option<f64>,
    /// Also write every particle position on the grid.
    #[arg(long, global = true)]
    dump_paths: bool,
}

fn resolve(opts: &Opts) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &opts.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        cfg.apply_file(&text)?;
    }
    fn s<T: ToString>(v: &Option<T>) -> Option<String> {
        v.as_ref().map(T::to_string)
    }
    fn e<T: clap::ValueEnum>(v: &Option<T>) -> Option<String> {
        v.as_ref()
            .and_then(|x| x.to_possible_value())
            .map(|p| p.get_name().to_owned())
    }
    let flags = [
        ("kind", opts.kind.clone()),
        ("N", s(&opts.particles)),
        ("c", opts.c.clone()),
        ("alpha", opts.alpha.clone()),
        ("T", opts.horizon.map(|v| format!("{v:?}"))),
        ("steps", s(&opts.steps)),
        ("substep_factor", s(&opts.substep_factor)),
        ("seed", s(&opts.seed)),
        ("replicas", s(&opts.replicas)),
        ("out", opts.out.as_ref().map(|p| p.display().to_string())),
        ("format", e(&opts.format)),
        ("nmax", s(&opts.nmax)),
        ("n", s(&opts.order)),
        ("grid_points", s(&opts.grid_points)),
        ("tol", opts.tol.map(|v| format!("{v:?}"))),
        ("sampler", e(&opts.sampler)),
        ("family", e(&opts.family)),
        ("nodes", s(&opts.nodes)),
        ("x_max", opts.x_max.map(|v| format!("{v:?}"))),
        ("dump_paths", opts.dump_paths.then(|| "true".to_owned())),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            cfg.set(k, &v)?;
        }
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let cfg = resolve(&cli.opts)?;
    let name = match &cli.command {
        Command::Moments => "moments",
        Command::Poly => "poly",
        Command::Density => "density",
        Command::Simulate => "simulate",
        Command::Verify { .. } => "verify",
    };
    let mut w = output::Writer::new(&cfg, name)?;
    let pass = match cli.command {
        Command::Moments => commands::moments(&cfg, &mut w).map(|_| true),
        Command::Poly => commands::poly(&cfg, &mut w).map(|_| true),
        Command::Density => commands::density(&cfg, &mut w).map(|_| true),
        Command::Simulate => commands::simulate(&cfg, &mut w).map(|_| true),
        Command::Verify { suite } => commands::verify(&cfg, suite, &mut w),
    }?;
    eprintln!("wrote {}", output::display(w.written()));
    Ok(pass)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("betaflow: {e}");
            ExitCode::from(e.code())
        }
    }
}
