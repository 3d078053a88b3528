use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use holomem_cli::commands;
use holomem_cli::config::OutputConfig;
use holomem_cli::{CliError, RunConfig};

/// Geometric-phase quantum memory simulator.
#[derive(Parser)]
#[command(name = "holomem", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write, read and decode one input; writes report, phase and trajectory files.
    Run(Common),
    /// Repeat `run` over the config's sweep axis and write one CSV row per point.
    Sweep(Common),
    /// Geometric phases of the schedule without any time evolution.
    Phase(Common),
    /// Finite-N bosonization errors and random dark-state residuals.
    Validate(Common),
    /// Plot-ready columns rebuilt from a finished run in --out.
    Plotdata(PlotArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads for sweeps; 0 picks one per core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Overrides `integrator.tol`.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct PlotArgs {
    /// Only its `output.report` name is used, to locate the report.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

impl Common {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(tol) = self.tol {
            cfg.integrator.tol = tol;
        }
        Ok(cfg)
    }
}

fn execute(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Run(a) => {
            let r = commands::run(&a.load()?, &a.out)?;
            Ok(format!(
                "{}: fidelity_decoded {:.6e}, fidelity_raw {:.6e}, gamma_used {:.12e}, leakage_max {:.3e}",
                r.schedule_id, r.fidelity_decoded, r.fidelity_raw, r.gamma_used, r.leakage_max
            ))
        }
        Command::Sweep(a) => {
            let t = commands::sweep(&a.load()?, &a.out, a.jobs)?;
            Ok(format!("{} sweep points written", t.rows.len()))
        }
        Command::Phase(a) => {
            let p = commands::phase(&a.load()?, &a.out)?;
            Ok(format!("gamma_loop {:.12e}, gamma_time {:.12e}", p.gamma_loop, p.gamma_time))
        }
        Command::Validate(a) => {
            let (b, d) = commands::validate(&a.load()?, &a.out)?;
            Ok(format!("{} bosonization rows, {} dark-state rows", b.rows.len(), d.rows.len()))
        }
        Command::Plotdata(a) => {
            let name = match &a.config {
                Some(path) => RunConfig::load(path)?.output.report,
                None => OutputConfig::default().report,
            };
            commands::plotdata(&a.out, &name)?;
            Ok(format!("plot data written to {}", a.out.display()))
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("holomem: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
