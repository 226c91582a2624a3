use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use semiwave::io::{self, RunConfig};
use semiwave::Result;

/// Exact controls for the semilinear 1D wave equation.
#[derive(Parser)]
#[command(name = "semiwave", version)]
struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured method and write iterations.csv and manifest.json.
    Solve { config: PathBuf },
    /// Run every point of the [sweep] table and write summary.csv.
    Sweep { config: PathBuf },
    /// Measure the Lipschitz constant of the Picard map.
    ProbeContraction { config: PathBuf },
    /// Validate the config without running anything.
    Check { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match dispatch(&cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: &Command) -> Result<i32> {
    match command {
        Command::Solve { config } => {
            let cfg = io::parse_config(config)?;
            let s = io::run(&cfg)?;
            println!(
                "{}: {} after {} rows, E = {}, deviation = {} ({})",
                s.method,
                s.status,
                s.iterations,
                fmt(s.final_e),
                fmt(s.final_deviation),
                s.output_dir.display()
            );
            if let Some(e) = &s.error {
                eprintln!("{e}");
            }
            Ok(s.exit_code)
        }
        Command::Sweep { config } => {
            let cfg = io::parse_config(config)?;
            let summary = io::sweep(&cfg)?;
            let mut worst = 0;
            for p in &summary.points {
                let code = p.exit_code();
                worst = worst.max(code);
                let status = match &p.outcome {
                    Ok(s) => s.status.clone(),
                    Err(e) => e.to_string(),
                };
                println!("run_{:04}: exit {code}, {status}", p.index);
            }
            println!("summary: {}", summary.dir.join("summary.csv").display());
            Ok(worst)
        }
        Command::ProbeContraction { config } => {
            let cfg = io::parse_config(config)?;
            for row in io::probe_contraction(&cfg)? {
                println!(
                    "amplitude {}: rho_max = {:e}, gap slope = {:e} (R^2 = {:.4})",
                    fmt(row.amplitude),
                    row.report.rho_max,
                    row.report.gap_slope,
                    row.report.gap_r2
                );
            }
            Ok(0)
        }
        Command::Check { config } => {
            let cfg = io::parse_config(config)?;
            describe(&cfg)?;
            Ok(0)
        }
    }
}

fn fmt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:e}")).unwrap_or_else(|| "-".into())
}

fn describe(cfg: &RunConfig) -> Result<()> {
    let setup = cfg.setup()?;
    let nl = cfg.build_nonlinearity()?;
    println!("method      {}", cfg.method);
    println!(
        "grid        nx = {}, nt = {}, dx = {:e}, dt = {:e}, dt/dx = {:.4}",
        setup.nx(),
        setup.nt(),
        setup.dx(),
        setup.dt(),
        setup.cfl()
    );
    println!(
        "window      ({}, {}), T = {} > {}",
        setup.omega().left,
        setup.omega().right,
        setup.horizon(),
        setup.omega().critical_time()
    );
    println!(
        "g           {} (s = {}, [g']_s = {:e}{})",
        nl.name(),
        nl.s(),
        nl.holder_seminorm(),
        if nl.holder_is_estimate() { ", estimated" } else { "" }
    );
    println!("data        {} -> {}", cfg.init, cfg.target);
    let points: usize = cfg.sweep.iter().map(|(_, v)| v.len()).product();
    if !cfg.sweep.is_empty() {
        io::sweep_points(cfg)?;
        println!("sweep       {points} points");
    }
    println!("output      {}", cfg.output_dir().display());
    Ok(())
}
