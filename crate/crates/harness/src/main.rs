use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use epbm_harness::commands::{run_coeffs, run_convergence, run_solve, run_stability_export, run_timing};
use epbm_harness::config::Ladder;
use epbm_harness::{ExperimentConfig, Result};

#[derive(Parser)]
#[command(name = "epbm", version, about = "Exponential polynomial block method experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// TOML experiment file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// ks, nikolaevskiy, kdv, adr-stiff-lin, adr-stiff-nonlin.
    #[arg(long, global = true)]
    problem: Option<String>,

    /// Method spec, e.g. `epbm-legendre:q=4,alpha=2,kappa=0`, `eab:p=2`,
    /// `etdrk2`. Repeatable.
    #[arg(long, global = true)]
    method: Vec<String>,

    /// `h_max,count,ratio`.
    #[arg(long, global = true)]
    h_ladder: Option<String>,

    /// Comma-separated thread counts.
    #[arg(long, global = true, value_delimiter = ',')]
    threads: Vec<usize>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Fourier modes or ADR grid points per side.
    #[arg(long, global = true)]
    resolution: Option<usize>,

    #[arg(long, global = true)]
    t_final: Option<f64>,

    /// Stepsize for `solve` and `timing`.
    #[arg(long, global = true)]
    h: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Error versus stepsize against a reference solution, with order fits.
    Converge,
    /// Stable z2 masks over the z1 menu.
    Stability {
        /// Also emit the unpartitioned scalar mask.
        #[arg(long)]
        unpartitioned: bool,
    },
    /// Wall time and output checksums per thread count.
    Timing {
        #[arg(long)]
        repeats: Option<usize>,
    },
    /// Print nodes, eta values and derivative-weight rows.
    Coeffs,
    /// One run per method; dumps the final state.
    Solve,
}

fn resolve(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(p) = &cli.problem {
        cfg.problem = p.clone();
    }
    if !cli.method.is_empty() {
        cfg.methods = cli.method.clone();
    }
    if let Some(l) = &cli.h_ladder {
        cfg.ladder = Ladder::parse(l)?;
    }
    if !cli.threads.is_empty() {
        cfg.threads = cli.threads.clone();
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if cli.resolution.is_some() {
        cfg.resolution = cli.resolution;
    }
    if cli.t_final.is_some() {
        cfg.t_final = cli.t_final;
    }
    if cli.h.is_some() {
        cfg.h = cli.h;
    }
    match cli.command {
        Cmd::Stability { unpartitioned } => cfg.stability.unpartitioned |= unpartitioned,
        Cmd::Timing { repeats: Some(r) } => cfg.repeats = r,
        _ => {}
    }
    Ok(cfg)
}

fn fmt_order(o: Option<f64>) -> String {
    o.map_or_else(|| "-".into(), |p| format!("{p:.3}"))
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = resolve(cli)?;
    match cli.command {
        Cmd::Converge => {
            let out = run_convergence(&cfg)?;
            println!("reference deviation {:.2e}", out.reference_deviation);
            for r in &out.records {
                println!("{:<40} h={:<12} error={:.3e}", r.method, r.h, r.error);
            }
            for f in &out.fits {
                let flag = if f.floor { " floor" } else { "" };
                let mono = if f.monotone { "" } else { " non-monotone" };
                println!("{:<40} order {} over {} rungs{flag}{mono}", f.method, fmt_order(f.order), f.used);
            }
        }
        Cmd::Stability { .. } => {
            for s in run_stability_export(&cfg)? {
                println!(
                    "{:<40} {:<12} r={:<5} area={:.4} failures={} -> {}",
                    s.method, s.direction, s.r, s.stable_area, s.failures, s.file
                );
            }
        }
        Cmd::Timing { .. } => {
            let out = run_timing(&cfg)?;
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            for r in &out.records {
                println!("{:<40} threads={} repeat={} {:.3}s {}", r.method, r.threads, r.repeat, r.wall_s, r.checksum);
            }
            for (m, t, s) in &out.speedups {
                let note = if *t > 1 && *s < 1.5 { " (below the 1.5 target; machine dependent)" } else { "" };
                println!("{m:<40} speedup at {t} threads: {s:.2}{note}");
            }
        }
        Cmd::Coeffs => {
            for d in run_coeffs(&cfg)? {
                print!("{}", d.text);
            }
        }
        Cmd::Solve => {
            for s in run_solve(&cfg)? {
                println!(
                    "{} steps={} evaluations={} norm={:.6e} checksum={} -> {}",
                    s.method,
                    s.steps,
                    s.evaluations,
                    s.norm,
                    s.checksum,
                    s.file.display()
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
