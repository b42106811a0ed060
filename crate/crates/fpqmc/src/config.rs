//! Run manifests: defaults per scenario, an optional TOML file and CLI
//! overrides, in increasing precedence.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fpqmc_core::sampling::Strategy;
use fpqmc_core::scenario::{RateConvention, ScenarioConfig, ScenarioKind};
use fpqmc_core::stats::FitWindow;
use serde::Deserialize;
use sha2::{Digest, Sha256};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "FPQMC_OUT";

/// Desk-scale reference resolution for the inhomogeneous scenarios.
pub const REFERENCE_PARTICLES: usize = 100_000;
pub const REFERENCE_REPETITIONS: usize = 20;

/// Keys accepted in a config file. Every key is optional.
#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub scenario: Option<String>,
    pub strategies: Option<Vec<String>>,
    /// Sweep such as `"64..16384"` or a single count.
    pub particles: Option<String>,
    pub reps: Option<usize>,
    pub steps: Option<usize>,
    pub dt: Option<f64>,
    pub cells: Option<usize>,
    pub seed: Option<u64>,
    pub t0: Option<f64>,
    pub t_target: Option<f64>,
    pub wall_velocity: Option<f64>,
    pub knudsen: Option<f64>,
    pub cut_angle: Option<f64>,
    pub out: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub workers: Option<usize>,
    pub fit_window: Option<String>,
    pub rate: Option<String>,
    pub reference_particles: Option<usize>,
    pub reference_reps: Option<usize>,
    pub reference_seed: Option<u64>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Fields set in `over` win.
    pub fn merge(self, over: ConfigFile) -> ConfigFile {
        macro_rules! pick {
            ($($f:ident),*) => { ConfigFile { $($f: over.$f.or(self.$f)),* } };
        }
        pick!(
            scenario, strategies, particles, reps, steps, dt, cells, seed, t0, t_target, wall_velocity, knudsen,
            cut_angle, out, reference, workers, fit_window, rate, reference_particles, reference_reps,
            reference_seed
        )
    }
}

/// Everything one `run` or `reference` invocation needs.
#[derive(Clone, Debug, PartialEq)]
pub struct RunManifest {
    /// Scenario parameters; `strategy` and `particles` vary over the sweep.
    pub config: ScenarioConfig,
    pub strategies: Vec<Strategy>,
    pub particles: Vec<usize>,
    pub out: PathBuf,
    pub workers: usize,
    pub reference: PathBuf,
    pub fit_window: FitWindow,
    pub rate: RateConvention,
    pub reference_particles: usize,
    pub reference_reps: usize,
    pub reference_seed: u64,
}

impl RunManifest {
    pub fn resolve(file: ConfigFile) -> Result<Self> {
        let kind: ScenarioKind = match &file.scenario {
            Some(s) => s.parse().map_err(anyhow::Error::msg)?,
            None => bail!("no scenario given (one of {})", scenario_names()),
        };
        let mut config = ScenarioConfig::defaults(kind);
        macro_rules! set {
            ($($src:ident => $dst:ident),*) => { $(if let Some(v) = file.$src { config.$dst = v; })* };
        }
        set!(reps => repetitions, steps => n_steps, dt => dt, cells => n_cells, seed => seed, t0 => t0,
            t_target => t_target, wall_velocity => wall_velocity, knudsen => knudsen, cut_angle => cut_angle);

        let strategies = match &file.strategies {
            Some(list) => list
                .iter()
                .map(|s| s.parse::<Strategy>().map_err(anyhow::Error::msg))
                .collect::<Result<Vec<_>>>()?,
            None => default_strategies(kind),
        };
        if strategies.is_empty() {
            bail!("empty strategy list");
        }
        let particles = match &file.particles {
            Some(s) => parse_sweep(s)?,
            None => default_sweep(kind),
        };
        config.strategy = strategies[0];
        config.particles = *particles.last().expect("sweeps are never empty");
        if kind != ScenarioKind::UniformDemo {
            for &s in &strategies {
                for &n in &particles {
                    ScenarioConfig { strategy: s, particles: n, ..config.clone() }
                        .validate()
                        .map_err(|e| anyhow::anyhow!("{s} at N = {n}: {e}"))?;
                }
            }
        } else {
            config.validate().map_err(anyhow::Error::msg)?;
        }
        let out = file
            .out
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("results"));
        let reference = file.reference.unwrap_or_else(|| out.join(format!("reference_{kind}.csv")));
        let workers = match file.workers {
            Some(0) => bail!("worker count must be positive"),
            Some(w) => w,
            None => std::thread::available_parallelism().map_or(1, |n| n.get()),
        };
        let fit_window = match file.fit_window.as_deref() {
            None | Some("full") => FitWindow::Full,
            Some("upper-half") => FitWindow::UpperHalf,
            Some(other) => bail!("unknown fit window {other:?} (full | upper-half)"),
        };
        let rate = match file.rate.as_deref() {
            None | Some("ou-recursion") => RateConvention::OuRecursion,
            Some("textbook") => RateConvention::Textbook,
            Some(other) => bail!("unknown rate convention {other:?} (ou-recursion | textbook)"),
        };
        Ok(RunManifest {
            config,
            strategies,
            particles,
            out,
            workers,
            reference,
            fit_window,
            rate,
            reference_particles: file.reference_particles.unwrap_or(REFERENCE_PARTICLES),
            reference_reps: file.reference_reps.unwrap_or(REFERENCE_REPETITIONS),
            reference_seed: file.reference_seed.unwrap_or(0x5EED),
        })
    }

    /// `# key = value` lines describing the resolved run; a CSV carrying
    /// them can be regenerated from them alone.
    pub fn header(&self) -> String {
        let mut h = config_text(&self.config);
        let names: Vec<&str> = self.strategies.iter().map(|s| s.name()).collect();
        let ns: Vec<String> = self.particles.iter().map(|n| n.to_string()).collect();
        let _ = writeln!(h, "strategies = {}", names.join(","));
        let _ = writeln!(h, "particles = {}", ns.join(","));
        let _ = writeln!(h, "fit_window = {}", self.fit_window.name());
        let _ = writeln!(h, "rate = {}", self.rate.name());
        if self.config.kind.is_inhomogeneous() {
            let _ = writeln!(h, "reference = {}", self.reference.display());
            let _ = writeln!(h, "reference_particles = {}", self.reference_particles);
            let _ = writeln!(h, "reference_reps = {}", self.reference_reps);
            let _ = writeln!(h, "reference_seed = {}", self.reference_seed);
        }
        h.lines().map(|l| format!("# {l}\n")).collect()
    }
}

pub fn scenario_names() -> String {
    ScenarioKind::ALL.map(|k| k.name()).join(", ")
}

pub fn default_strategies(kind: ScenarioKind) -> Vec<Strategy> {
    match kind {
        ScenarioKind::RelaxConst => Strategy::ALL.to_vec(),
        _ => Strategy::ALL.into_iter().filter(|&s| s != Strategy::ControlVariate).collect(),
    }
}

/// Desk-scale sweeps.
pub fn default_sweep(kind: ScenarioKind) -> Vec<usize> {
    let (lo, hi) = match kind {
        ScenarioKind::UniformDemo => (6, 16),
        ScenarioKind::RelaxConst => (6, 14),
        ScenarioKind::RelaxMcKean => (6, 11),
        ScenarioKind::Couette | ScenarioKind::HeatFlux => (6, 12),
    };
    (lo..=hi).map(|p| 1usize << p).collect()
}

/// `a..b` is every power of two from `a` to `b`; `a,b,c` is a list; a
/// bare number is a single count.
pub fn parse_sweep(text: &str) -> Result<Vec<usize>> {
    let text = text.trim();
    let num = |s: &str| -> Result<usize> { s.trim().parse().with_context(|| format!("bad particle count {s:?}")) };
    let ns = if let Some((a, b)) = text.split_once("..") {
        let (a, b) = (num(a)?, num(b)?);
        if !a.is_power_of_two() || !b.is_power_of_two() || a > b {
            bail!("sweep {text:?} needs powers of two with a <= b");
        }
        std::iter::successors(Some(a), |&n| n.checked_mul(2)).take_while(|&n| n <= b).collect()
    } else {
        text.split(',').map(num).collect::<Result<Vec<_>>>()?
    };
    if ns.is_empty() || ns.contains(&0) {
        bail!("particle counts must be positive");
    }
    let mut sorted = ns.clone();
    sorted.sort_unstable();
    sorted.dedup();
    Ok(sorted)
}

/// Canonical text of a scenario configuration, one `key = value` per line.
pub fn config_text(c: &ScenarioConfig) -> String {
    let g = &c.gas;
    format!(
        "scenario = {}\nstrategy = {}\nmass = {:e}\nboltzmann = {:e}\nviscosity_ref = {:e}\nt_ref = {}\nomega = {}\n\
         diameter_ref = {:e}\nnumber_density = {:e}\nt0 = {}\nt_target = {}\nwall_velocity = {}\n\
         dt = {:e}\nsteps = {}\ncells = {}\nparticles = {}\nreps = {}\nseed = {}\nknudsen = {}\ncut_angle = {}\n",
        c.kind, c.strategy, g.mass, g.boltzmann, g.mu_ref, g.t_ref, g.omega, g.d_ref, g.number_density, c.t0,
        c.t_target, c.wall_velocity, c.dt, c.n_steps, c.n_cells, c.particles, c.repetitions, c.seed, c.knudsen,
        c.cut_angle,
    )
}

/// SHA-256 of [`config_text`], hex encoded.
pub fn config_hash(c: &ScenarioConfig) -> String {
    Sha256::digest(config_text(c).as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}
