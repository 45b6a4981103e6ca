use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ssbh::cli::{self, Command, Format, RunConfig};

#[derive(Parser)]
#[command(name = "ssbh", version, about = "Steady states, currents and relaxation dynamics of a single interacting bosonic site between two thermal baths")]
struct Cli {
    #[command(subcommand)]
    command: Mode,
}

#[derive(Subcommand)]
enum Mode {
    /// Steady-state populations and observables
    Ness(Common),
    /// Parameter sweep along one axis (chi, t1, gamma, delta_t)
    Scan(Common),
    /// Transient relaxation on a log-spaced time grid
    Dynamics(Common),
    /// Relaxation time versus interaction strength
    Tss(Common),
}

#[derive(Args)]
struct Common {
    /// Config file: line-oriented `key = value`, or JSON output of a prior run
    #[arg(long)]
    config: Option<PathBuf>,

    /// Override a config key, e.g. --set chi=4 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,

    /// Output path (stdout when omitted)
    #[arg(long)]
    output: Option<PathBuf>,

    /// Output format
    #[arg(long, default_value = "csv")]
    format: String,

    /// Relative tolerance for truncation and quadrature
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,

    /// Suppress warnings on stderr
    #[arg(long)]
    quiet: bool,

    /// Worker threads for sweeps (default: available parallelism)
    #[arg(long)]
    threads: Option<usize>,
}

fn run(cmd: Command, opts: &Common) -> ssbh::Result<()> {
    let format: Format = opts.format.parse()?;
    let mut map = match &opts.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ssbh::Error::Config(format!("cannot read {}: {e}", path.display())))?;
            cli::parse_config_text(&text)?
        }
        None => BTreeMap::new(),
    };
    cli::apply_overrides(&mut map, &opts.sets)?;
    let cfg = RunConfig::from_map(map, opts.tol)?;

    if let Some(n) = opts.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().ok();
    }
    if !opts.quiet {
        for warning in cfg.setup.warnings() {
            eprintln!("warning: {warning}");
        }
    }

    let table = cli::execute(cmd, &cfg)?;
    let text = cli::render(&table, format);
    match &opts.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| ssbh::Error::Config(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Cli::parse();
    let (cmd, opts) = match &args.command {
        Mode::Ness(o) => (Command::Ness, o),
        Mode::Scan(o) => (Command::Scan, o),
        Mode::Dynamics(o) => (Command::Dynamics, o),
        Mode::Tss(o) => (Command::Tss, o),
    };
    match run(cmd, opts) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(cli::exit_code(&err) as u8)
        }
    }
}
