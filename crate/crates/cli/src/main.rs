use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use platoon_shield::control_design::{SignalKind, SignalNorm};
use platoon_shield::numerics::DEFAULT_HINF_TOL;
use platoon_shield_cli::commands::{cmd_hinf, cmd_run, cmd_sweep};
use platoon_shield_cli::output::{fmt_g9, string_stability_line};
use platoon_shield_cli::CliError;

#[derive(Parser)]
#[command(name = "platoon-shield", version, about = "Attack-resilient CACC platoon simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write trace, metrics and plot data.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Overrides the scenario seed and PLATOON_SHIELD_SEED.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Also write a gnuplot script next to the plot data.
        #[arg(long)]
        emit_plots: bool,
    },
    /// Closed-loop H-infinity norm of one follower.
    Hinf {
        #[arg(long)]
        h: f64,
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        kp: f64,
        #[arg(long)]
        kd: f64,
        #[arg(long, default_value_t = DEFAULT_HINF_TOL)]
        tol: f64,
    },
    /// Run a scenario under many seeds and aggregate detection and isolation rates.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        seeds: usize,
        /// First master seed; defaults to PLATOON_SHIELD_SEED, then the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            scenario,
            seed,
            out,
            emit_plots,
        } => {
            let (manifest, metrics) = cmd_run(&scenario, seed, &out, emit_plots)?;
            println!("seed {}: {} steps, {} files in {}", manifest.seed, metrics.steps, manifest.files.len(), out.display());
            for l in &metrics.links {
                let rate = |x: Option<f64>| x.map_or_else(|| "n/a".into(), fmt_g9);
                println!(
                    "link {}: max fusion error {} (bound {}), detection {}, exact isolation {}",
                    l.vehicle,
                    fmt_g9(l.max_fusion_error),
                    fmt_g9(l.error_bound),
                    rate(l.detection_rate),
                    rate(l.isolation_exact_rate)
                );
            }
            if let Some(line) = string_stability_line(&metrics, SignalKind::SpacingError, SignalNorm::L2) {
                println!("{line}");
            }
            println!("max state norm {} (bounded: {})", fmt_g9(metrics.max_state_norm), metrics.bounded);
        }
        Command::Hinf { h, tau, kp, kd, tol } => {
            println!("{}", cmd_hinf(h, tau, kp, kd, tol)?);
        }
        Command::Sweep {
            scenario,
            seeds,
            seed,
            out,
        } => {
            let (_, summary) = cmd_sweep(&scenario, seeds, seed, &out)?;
            for s in summary {
                println!(
                    "link {} {}: mean {} min {} max {} over {} seeds",
                    s.link,
                    s.metric,
                    fmt_g9(s.mean),
                    fmt_g9(s.min),
                    fmt_g9(s.max),
                    s.count
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
