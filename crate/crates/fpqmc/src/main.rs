use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use fpqmc::config::{ConfigFile, RunManifest};
use fpqmc::core::scenario::{reference_config, Quantity, ScenarioKind};
use fpqmc::output::{self, render_table};
use fpqmc::runner;

#[derive(Parser)]
#[command(name = "fpqmc", version, about = "Fokker-Planck particle relaxation with Array-RQMC sampling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an N sweep and write convergence and slope CSVs.
    Run(RunArgs),
    /// Build and persist the high-resolution reference of couette or heatflux.
    Reference(RunArgs),
    /// Print the slope table of a finished run.
    Table(TableArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<String>,
    /// Comma-separated strategy names.
    #[arg(long, value_delimiter = ',')]
    strategy: Option<Vec<String>>,
    /// Powers-of-two sweep `a..b`, a list `a,b,c`, or one count.
    #[arg(long)]
    particles: Option<String>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    cells: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: $FPQMC_OUT or ./results).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Reference file for couette/heatflux.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// full | upper-half
    #[arg(long)]
    fit_window: Option<String>,
    /// Analytic relaxation rates: ou-recursion | textbook
    #[arg(long)]
    rate: Option<String>,
    #[arg(long)]
    reference_particles: Option<usize>,
    #[arg(long)]
    reference_reps: Option<usize>,
    #[arg(long)]
    reference_seed: Option<u64>,
    /// Also write per-(strategy, N) trajectory CSVs.
    #[arg(long)]
    trajectories: bool,
}

impl RunArgs {
    fn manifest(&self) -> Result<RunManifest> {
        let file = match &self.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let flags = ConfigFile {
            scenario: self.scenario.clone(),
            strategies: self.strategy.clone(),
            particles: self.particles.clone(),
            reps: self.reps,
            steps: self.steps,
            dt: self.dt,
            cells: self.cells,
            seed: self.seed,
            out: self.out.clone(),
            reference: self.reference.clone(),
            workers: self.workers,
            fit_window: self.fit_window.clone(),
            rate: self.rate.clone(),
            reference_particles: self.reference_particles,
            reference_reps: self.reference_reps,
            reference_seed: self.reference_seed,
            ..ConfigFile::default()
        };
        RunManifest::resolve(file.merge(flags))
    }
}

#[derive(Args)]
struct TableArgs {
    #[arg(long)]
    scenario: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => cmd_run(&args),
        Command::Reference(args) => cmd_reference(&args),
        Command::Table(args) => cmd_table(&args),
    }
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let m = args.manifest()?;
    let kind = m.config.kind;
    let header = m.header();
    let records = match kind {
        ScenarioKind::UniformDemo => runner::uniform_demo(&m)?,
        _ => {
            let (reference, floor) = if kind.is_inhomogeneous() {
                let cfg = reference_config(&m.config, m.reference_particles, m.reference_reps, m.reference_seed)?;
                let (meta, r) = output::read_reference(&m.reference, &cfg)?;
                (r, Some(meta.noise_floor))
            } else {
                (runner::analytic_reference(&m.config, m.rate)?, None)
            };
            let records = runner::sweep(&m, &reference.field, |run| {
                eprintln!("{} N={}: done", run.config.strategy, run.config.particles);
                if args.trajectories {
                    output::write_trajectories(&output::trajectory_path(&m.out, &run.config), &header, &run.runs)?;
                }
                Ok(())
            })?;
            if let Some(floor) = floor {
                for (name, f) in &floor {
                    let smallest = records
                        .iter()
                        .filter(|r| &r.quantity == name)
                        .flat_map(|r| r.points.iter().map(|p| p.1))
                        .fold(f64::INFINITY, f64::min);
                    if 4.0 * f > smallest {
                        eprintln!("warning: reference noise floor {f:.3e} for {name} is within 4x of the smallest RMSE {smallest:.3e}");
                    }
                }
            }
            records
        }
    };
    output::write_convergence(&output::convergence_path(&m.out, kind.name()), &header, &records)?;
    let slopes = output::slopes_path(&m.out, kind.name());
    output::write_slopes(&slopes, &header, &records)?;
    print_table(kind, &output::read_slopes(&slopes)?);
    Ok(())
}

fn cmd_reference(args: &RunArgs) -> Result<()> {
    let m = args.manifest()?;
    if !m.config.kind.is_inhomogeneous() {
        bail!("references are built for couette and heatflux; {} uses an analytic one", m.config.kind);
    }
    let (reference, floor) =
        runner::build_reference(&m.config, m.reference_particles, m.reference_reps, m.reference_seed, m.workers)?;
    let cfg = reference_config(&m.config, m.reference_particles, m.reference_reps, m.reference_seed)?;
    output::write_reference(&m.reference, &cfg, &reference, &floor)?;
    println!("wrote {}", m.reference.display());
    for q in Quantity::TABLE {
        println!("noise floor {:<10} {:.3e}", q.name(), floor[q.index()]);
    }
    Ok(())
}

fn cmd_table(args: &TableArgs) -> Result<()> {
    let kind: ScenarioKind = args.scenario.parse().map_err(anyhow::Error::msg)?;
    let out = args
        .out
        .clone()
        .or_else(|| std::env::var_os(fpqmc::config::OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"));
    let path = output::slopes_path(&out, kind.name());
    if !path.exists() {
        bail!(
            "missing {}; expected also {} (run `fpqmc run --scenario {kind}` first)",
            path.display(),
            output::convergence_path(&out, kind.name()).display()
        );
    }
    print_table(kind, &output::read_slopes(&path)?);
    Ok(())
}

fn print_table(kind: ScenarioKind, rows: &[output::SlopeRow]) {
    let quantities: Vec<&str> = if kind == ScenarioKind::UniformDemo {
        vec!["moment_1", "moment_2", "moment_3", "moment_4"]
    } else {
        Quantity::TABLE.iter().map(|q| q.name()).collect()
    };
    println!("convergence rates of the averaged RMSE ({kind})");
    print!("{}", render_table(rows, &quantities));
}
