//! `tongues`: command-line front end for the tongue lab.
//!
//! Exit status: 0 on success, 1 on numerical failure (details on stderr),
//! 2 on usage errors.

mod commands;
mod config;
mod error;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use config::{Format, Layers, Resolved};
use error::CliError;
use output::{Meta, Report};

#[derive(Parser, Debug)]
#[command(
    name = "tongues",
    version,
    about = "Arnold tongues of the drifted standard map"
)]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Periodic orbits at fixed eps and delta (multistart Newton)
    Orbit,
    /// Drift profile Delta(x0) at one eps
    Profile,
    /// Tongue boundaries for each eps
    Tongue,
    /// Power-series coefficients of Delta and Y in eps
    Series,
    /// Integrate the sine-Gordon chain and classify its attractor
    Chain,
    /// Log-log fit of tongue width against eps
    Fit,
}

impl Cmd {
    fn name(self) -> &'static str {
        match self {
            Cmd::Orbit => "orbit",
            Cmd::Profile => "profile",
            Cmd::Tongue => "tongue",
            Cmd::Series => "series",
            Cmd::Chain => "chain",
            Cmd::Fit => "fit",
        }
    }

    fn default_format(self) -> Format {
        match self {
            Cmd::Series | Cmd::Chain | Cmd::Fit => Format::Json,
            _ => Format::Csv,
        }
    }
}

#[derive(Args, Debug)]
struct Opts {
    /// key=value file with the same keys as the flags; flags win
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Forcing: sin, cos, sinK, cosK, inline {"cos":[..],"sin":[..]} or a JSON file
    #[arg(long, global = true)]
    f: Option<String>,
    /// Period
    #[arg(long, global = true)]
    q: Option<String>,
    /// Twist (rotation number p/q)
    #[arg(long, global = true, allow_hyphen_values = true)]
    p: Option<String>,
    /// Comma-separated perturbation strengths
    #[arg(long, global = true)]
    eps: Option<String>,
    /// Drift (map) or torque (chain)
    #[arg(long, global = true, allow_hyphen_values = true)]
    delta: Option<String>,
    /// Series truncation order
    #[arg(long, global = true)]
    order: Option<String>,
    /// Number of x0 grid points (at least 8q)
    #[arg(long, global = true)]
    grid: Option<String>,
    /// Chain damping
    #[arg(long, global = true)]
    gamma: Option<String>,
    /// Chain time step
    #[arg(long, global = true)]
    dt: Option<String>,
    /// Chain integration time
    #[arg(long, global = true)]
    horizon: Option<String>,
    /// Output file (stdout when absent)
    #[arg(long, global = true)]
    out: Option<String>,
    /// Worker threads
    #[arg(long, global = true)]
    jobs: Option<String>,
    #[arg(long, global = true, value_parser = ["csv", "json", "svg"])]
    format: Option<String>,
    /// Chain: also locate the critical torque by quasi-static bisection
    #[arg(long, global = true)]
    critical: bool,
}

fn resolve(cmd: Cmd, o: &Opts) -> Result<Resolved, CliError> {
    let file = match &o.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            config::parse_file(&text)?
        }
        None => Default::default(),
    };
    let mut layers = Layers::from_file(file);
    for (key, value) in [
        ("f", &o.f),
        ("q", &o.q),
        ("p", &o.p),
        ("eps", &o.eps),
        ("delta", &o.delta),
        ("order", &o.order),
        ("grid", &o.grid),
        ("gamma", &o.gamma),
        ("dt", &o.dt),
        ("horizon", &o.horizon),
        ("out", &o.out),
        ("jobs", &o.jobs),
        ("format", &o.format),
    ] {
        layers.set(key, value.clone());
    }
    if o.critical {
        layers.set("critical", Some("true".into()));
    }
    Resolved::from_layers(&layers, cmd.default_format())
}

fn compute(cmd: Cmd, c: &Resolved) -> Result<Report, CliError> {
    match cmd {
        Cmd::Orbit => commands::orbit(c),
        Cmd::Profile => commands::profile_cmd(c),
        Cmd::Tongue => commands::tongue(c),
        Cmd::Series => commands::series(c),
        Cmd::Chain => commands::chain(c),
        Cmd::Fit => commands::fit(c),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let c = resolve(cli.cmd, &cli.opts)?;
    let start = Instant::now();
    let report = tongues_core::exec::with_jobs(c.jobs, || compute(cli.cmd, &c))?;
    let meta = Meta::new(cli.cmd.name(), c.as_map(), start.elapsed().as_secs_f64());
    let text = output::render(&report, c.format, &meta)?;
    output::emit(&text, c.out.as_deref(), c.format, &meta)?;
    if report.failures.is_empty() {
        return Ok(());
    }
    for f in &report.failures {
        eprintln!("{f}");
    }
    Err(CliError::Numerical(format!(
        "{} item(s) failed",
        report.failures.len()
    )))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tongues: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
