//! Command-line driver: instance generation, welding, cocycle evaluation,
//! verification campaigns and convergence studies. Every command writes one
//! JSON document, to stdout or to `--report`.

mod commands;
mod suites;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use vircocycle::corpus;
use vircocycle::welding::WeldOptions;

#[derive(Parser, Debug)]
#[command(
    name = "vircocycle",
    version,
    about = "Canonical cocycle verification campaigns"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct GlobalArgs {
    /// Seed of generated instances.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Truncation order N.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Relative tolerance of the theorem check.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Worker threads (rayon builds only).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    /// Gluing residual target of the welding solver.
    #[arg(long, global = true)]
    weld_tol: Option<f64>,
    /// Iteration cap of the welding solver.
    #[arg(long, global = true)]
    weld_max_iter: Option<usize>,
    /// Admissibility gate on the oscillation of welded diffeomorphisms.
    #[arg(long, global = true)]
    max_displacement: Option<f64>,
    /// JSON campaign file supplying defaults for the flags above.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate seeded instance files.
    Gen(commands::GenArgs),
    /// Weld one diffeomorphism file, or run the seeded round-trip campaign.
    Weld(commands::WeldArgs),
    /// λ, μ by both routes, κ values and every residual for one instance.
    Cocycle(commands::CocycleArgs),
    /// Run acceptance suites and report pass/fail per criterion.
    Verify(suites::VerifyArgs),
    /// Virasoro commutation relations on the graded boson space.
    VirasoroCheck(commands::VirasoroArgs),
    /// Reducibility and unitarity of (h, c), or the discrete-series table.
    Kac(commands::KacArgs),
    /// Gram matrix of the reproducing kernel on a point set.
    Gram(commands::GramArgs),
    /// λ, μ against the truncation order.
    Convergence(commands::ConvergenceArgs),
}

/// Campaign file: every field optional, flags take precedence.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Campaign {
    pub seed: Option<u64>,
    pub count: Option<usize>,
    pub n: Option<usize>,
    pub tol: Option<f64>,
    pub grid: Option<Vec<f64>>,
    pub truncations: Option<Vec<usize>>,
    pub weld_tol: Option<f64>,
    pub weld_max_iter: Option<usize>,
    pub max_displacement: Option<f64>,
    pub report: Option<PathBuf>,
}

/// Resolved settings shared by all commands.
#[derive(Clone, Debug)]
pub struct Settings {
    pub seed: u64,
    pub n: usize,
    pub tol: f64,
    pub weld: WeldOptions,
    pub report: Option<PathBuf>,
    pub campaign: Campaign,
}

impl Settings {
    fn resolve(g: &GlobalArgs) -> Result<Self, String> {
        let campaign: Campaign = match &g.config {
            Some(p) => read_json(p)?,
            None => Campaign::default(),
        };
        let d = WeldOptions::default();
        Ok(Self {
            seed: g.seed.or(campaign.seed).unwrap_or(corpus::DEFAULT_SEED),
            n: g.n.or(campaign.n).unwrap_or(48),
            tol: g.tol.or(campaign.tol).unwrap_or(1e-5),
            weld: WeldOptions {
                tol: g.weld_tol.or(campaign.weld_tol).unwrap_or(d.tol),
                max_iter: g
                    .weld_max_iter
                    .or(campaign.weld_max_iter)
                    .unwrap_or(d.max_iter),
                max_displacement: g
                    .max_displacement
                    .or(campaign.max_displacement)
                    .unwrap_or(d.max_displacement),
                grid: None,
            },
            report: g.report.clone().or_else(|| campaign.report.clone()),
            campaign,
        })
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), String> {
    let text = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    std::fs::write(path, text + "\n").map_err(|e| format!("{}: {e}", path.display()))
}

fn configure_threads(jobs: Option<usize>) -> Result<(), String> {
    #[cfg(feature = "parallel")]
    if let Some(j) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = jobs;
    Ok(())
}

fn run(cli: Cli) -> Result<bool, String> {
    configure_threads(cli.global.jobs)?;
    let s = Settings::resolve(&cli.global)?;
    let (report, ok) = match &cli.command {
        Command::Gen(a) => commands::gen(a, &s)?,
        Command::Weld(a) => commands::weld(a, &s)?,
        Command::Cocycle(a) => commands::cocycle(a, &s)?,
        Command::Verify(a) => suites::verify(a, &s)?,
        Command::VirasoroCheck(a) => commands::virasoro_check(a, &s)?,
        Command::Kac(a) => commands::kac(a)?,
        Command::Gram(a) => commands::gram(a, &s)?,
        Command::Convergence(a) => commands::convergence(a, &s)?,
    };
    match &s.report {
        Some(p) => write_json(p, &report)?,
        None => {
            let text = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
            // A closed pipe (e.g. `| head`) is not an error of the command.
            if let Err(e) = writeln!(std::io::stdout(), "{text}") {
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    return Err(e.to_string());
                }
            }
        }
    }
    Ok(ok)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
