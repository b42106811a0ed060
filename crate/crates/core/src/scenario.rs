//! Benchmark definitions: configuration, the time-step loop for one
//! repetition, analytic references and the uniform-moment demo.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::dynamics::{Channel, FpCoefficients, GasModel, OuPropagator, WallSampler, WallSide, WallSpec};
use crate::ensemble::{
    cell_counts, center, compute_moments, compute_moments_indexed, initialize_anisotropic_cut, standardize,
    CellIndex, CellMoments, Grid1D, ParticleEnsemble,
};
use crate::rng::{nested_uniform_scramble, standard_normal, PseudoStream, Purpose, SobolGenerator, UniformSource};
use crate::sampling::{noise_block, AntitheticPairing, NoiseRequest, PseudoWalls, QuasiWalls, Strategy};
use crate::stats::{rmse_field, ConvergenceRecord, FitWindow};
use crate::{Error, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    UniformDemo,
    RelaxConst,
    RelaxMcKean,
    Couette,
    HeatFlux,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 5] = [
        ScenarioKind::UniformDemo,
        ScenarioKind::RelaxConst,
        ScenarioKind::RelaxMcKean,
        ScenarioKind::Couette,
        ScenarioKind::HeatFlux,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::UniformDemo => "uniform-demo",
            ScenarioKind::RelaxConst => "relax-const",
            ScenarioKind::RelaxMcKean => "relax-mckean",
            ScenarioKind::Couette => "couette",
            ScenarioKind::HeatFlux => "heatflux",
        }
    }

    /// Couette and heat flux: several cells, free flight and walls.
    pub fn is_inhomogeneous(self) -> bool {
        matches!(self, ScenarioKind::Couette | ScenarioKind::HeatFlux)
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownScenario(String::from(s)))
    }
}

/// One fully resolved run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub gas: GasModel,
    /// Initial temperature, also the lower-wall temperature [K].
    pub t0: f64,
    /// Reservoir temperature (relax-const) or upper-wall temperature [K].
    pub t_target: f64,
    /// Upper-plate velocity in y [m/s].
    pub wall_velocity: f64,
    pub dt: f64,
    pub n_steps: usize,
    pub n_cells: usize,
    pub particles: usize,
    pub repetitions: usize,
    pub strategy: Strategy,
    pub seed: u64,
    pub knudsen: f64,
    /// Tilt of the cutting plane for the anisotropic start [deg].
    pub cut_angle: f64,
}

impl ScenarioConfig {
    pub fn defaults(kind: ScenarioKind) -> Self {
        let base = ScenarioConfig {
            kind,
            gas: GasModel::ARGON,
            t0: 300.0,
            t_target: 300.0,
            wall_velocity: 0.0,
            dt: 1e-4,
            n_steps: 35,
            n_cells: 1,
            particles: 1 << 10,
            repetitions: 1000,
            strategy: Strategy::Pseudo,
            seed: 7,
            knudsen: 0.17,
            cut_angle: 25.0,
        };
        match kind {
            ScenarioKind::UniformDemo => ScenarioConfig { n_steps: 0, repetitions: 200, particles: 1 << 16, ..base },
            ScenarioKind::RelaxConst => ScenarioConfig { t_target: 600.0, ..base },
            ScenarioKind::RelaxMcKean => ScenarioConfig { n_steps: 100, ..base },
            ScenarioKind::Couette => ScenarioConfig {
                wall_velocity: 100.0,
                n_steps: 300,
                n_cells: 10,
                repetitions: 50,
                ..base
            },
            ScenarioKind::HeatFlux => ScenarioConfig {
                t_target: 400.0,
                dt: 2e-4,
                n_steps: 150,
                n_cells: 20,
                repetitions: 50,
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.gas.validate()?;
        let positive = [self.t0, self.t_target, self.dt, self.knudsen];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Config("temperatures, dt and Knudsen number must be positive"));
        }
        if !self.wall_velocity.is_finite() || !self.cut_angle.is_finite() {
            return Err(Error::Config("wall velocity and cut angle must be finite"));
        }
        if self.particles == 0 || self.repetitions == 0 || self.n_cells == 0 {
            return Err(Error::Config("particle, repetition and cell counts must be positive"));
        }
        if self.kind != ScenarioKind::UniformDemo && self.n_steps == 0 {
            return Err(Error::Config("at least one time step is required"));
        }
        if !self.kind.is_inhomogeneous() && self.n_cells != 1 {
            return Err(Error::Config("homogeneous scenarios use a single cell"));
        }
        if self.kind == ScenarioKind::RelaxMcKean && self.particles < 2 {
            return Err(Error::Config("the anisotropic start needs at least 2 particles"));
        }
        if self.strategy == Strategy::ControlVariate && self.kind != ScenarioKind::RelaxConst {
            return Err(Error::Config("the control variate needs the constant-coefficient scenario"));
        }
        Ok(())
    }

    /// Channel width `λ / Kn`.
    pub fn domain_length(&self) -> f64 {
        self.gas.mean_free_path() / self.knudsen
    }

    /// Velocity unit `√(kT₀/m)`.
    pub fn velocity_scale(&self) -> f64 {
        self.gas.thermal_speed(self.t0)
    }

    pub fn pairing(&self) -> AntitheticPairing {
        if self.kind.is_inhomogeneous() {
            AntitheticPairing::Consecutive
        } else {
            AntitheticPairing::Trajectory
        }
    }

    pub fn channel(&self) -> Channel {
        Channel {
            length: self.domain_length(),
            lower: WallSpec::new(WallSide::Lower, self.t0, [0.0, 0.0]),
            upper: WallSpec::new(WallSide::Upper, self.t_target, [self.wall_velocity, 0.0]),
        }
    }
}

/// The twelve recorded moments, in storage order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Quantity {
    MeanX,
    MeanY,
    MeanZ,
    Energy,
    SigmaXX,
    SigmaXY,
    SigmaXZ,
    SigmaYY,
    SigmaYZ,
    HeatX,
    HeatY,
    HeatZ,
}

pub const N_QUANTITIES: usize = 12;

impl Quantity {
    pub const ALL: [Quantity; N_QUANTITIES] = [
        Quantity::MeanX,
        Quantity::MeanY,
        Quantity::MeanZ,
        Quantity::Energy,
        Quantity::SigmaXX,
        Quantity::SigmaXY,
        Quantity::SigmaXZ,
        Quantity::SigmaYY,
        Quantity::SigmaYZ,
        Quantity::HeatX,
        Quantity::HeatY,
        Quantity::HeatZ,
    ];

    /// The four quantities the convergence tables report.
    pub const TABLE: [Quantity; 4] = [Quantity::MeanY, Quantity::Energy, Quantity::SigmaXY, Quantity::SigmaYZ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Quantity::MeanX => "mean_x",
            Quantity::MeanY => "mean_y",
            Quantity::MeanZ => "mean_z",
            Quantity::Energy => "energy",
            Quantity::SigmaXX => "sigma_xx",
            Quantity::SigmaXY => "sigma_xy",
            Quantity::SigmaXZ => "sigma_xz",
            Quantity::SigmaYY => "sigma_yy",
            Quantity::SigmaYZ => "sigma_yz",
            Quantity::HeatX => "heat_x",
            Quantity::HeatY => "heat_y",
            Quantity::HeatZ => "heat_z",
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Self::ALL
            .into_iter()
            .find(|q| q.name() == s)
            .ok_or(Error::Config("unknown quantity name"))
    }
}

/// Moments of one cell in scaled units: velocity by `c₀ = √(kT₀/m)`,
/// energy and stress by `c₀²`, heat flux by `c₀³`.
pub fn scaled_quantities(m: &CellMoments, c0: f64) -> [f64; N_QUANTITIES] {
    let (v, e, h) = (1.0 / c0, 1.0 / (c0 * c0), 1.0 / (c0 * c0 * c0));
    let s = &m.stress;
    [
        m.mean[0] * v,
        m.mean[1] * v,
        m.mean[2] * v,
        m.energy * e,
        s[0][0] * e,
        s[0][1] * e,
        s[0][2] * e,
        s[1][1] * e,
        s[1][2] * e,
        m.heat_flux[0] * h,
        m.heat_flux[1] * h,
        m.heat_flux[2] * h,
    ]
}

/// Values per (step, cell, quantity); step `s` holds the state after
/// `s + 1` updates. Empty cells are NaN.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentField {
    pub n_steps: usize,
    pub n_cells: usize,
    pub values: Vec<f64>,
}

impl MomentField {
    pub fn new(n_steps: usize, n_cells: usize) -> Self {
        Self { n_steps, n_cells, values: vec![f64::NAN; n_steps * n_cells * N_QUANTITIES] }
    }

    #[inline]
    fn offset(&self, step: usize, cell: usize) -> usize {
        (step * self.n_cells + cell) * N_QUANTITIES
    }

    pub fn get(&self, step: usize, cell: usize, q: Quantity) -> f64 {
        self.values[self.offset(step, cell) + q.index()]
    }

    pub fn set_cell(&mut self, step: usize, cell: usize, values: &[f64; N_QUANTITIES]) {
        let o = self.offset(step, cell);
        self.values[o..o + N_QUANTITIES].copy_from_slice(values);
    }

    /// One quantity over all (step, cell) points, step-major.
    pub fn series(&self, q: Quantity) -> Vec<f64> {
        self.values.iter().skip(q.index()).step_by(N_QUANTITIES).copied().collect()
    }

    pub fn same_shape(&self, other: &MomentField) -> bool {
        self.n_steps == other.n_steps && self.n_cells == other.n_cells
    }
}

/// Pointwise mean over repetitions, skipping non-finite entries.
pub fn average_fields(fields: &[MomentField]) -> Result<MomentField, Error> {
    let first = fields.first().ok_or(Error::Config("nothing to average"))?;
    if fields.iter().any(|f| !f.same_shape(first)) {
        return Err(Error::Config("fields differ in shape"));
    }
    let mut out = MomentField::new(first.n_steps, first.n_cells);
    for (i, slot) in out.values.iter_mut().enumerate() {
        let (sum, n) = fields
            .iter()
            .map(|f| f.values[i])
            .filter(|v| v.is_finite())
            .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
        if n > 0 {
            *slot = sum / n as f64;
        }
    }
    Ok(out)
}

/// Standard error of the repetition mean, averaged over (step, cell), per
/// quantity. This is the noise floor of a reference built from `fields`.
pub fn noise_floor(fields: &[MomentField]) -> Result<[f64; N_QUANTITIES], Error> {
    let mean = average_fields(fields)?;
    let mut out = [0.0; N_QUANTITIES];
    for q in Quantity::ALL {
        let runs: Vec<Vec<f64>> = fields.iter().map(|f| f.series(q)).collect();
        let f = rmse_field(&runs, &mean.series(q));
        let r = fields.len() as f64;
        let se: Vec<f64> = f.variance.iter().map(|v| libm::sqrt(v / r)).collect();
        out[q.index()] = crate::stats::averaged_rmse(&se);
    }
    Ok(out)
}

/// Standard-normal triples for an initial ensemble, drawn in the style of
/// the strategy so the first step already carries its structure.
fn initial_normals(
    strategy: Strategy,
    pairing: AntitheticPairing,
    seed: u64,
    key: &[u64],
    n: usize,
) -> Result<Vec<Vec3>, Error> {
    let mut stream = PseudoStream::keyed(seed, Purpose::Initial, key);
    let mut fresh = || [stream.normal(), stream.normal(), stream.normal()];
    Ok(match strategy {
        Strategy::Pseudo | Strategy::ControlVariate => (0..n).map(|_| fresh()).collect(),
        Strategy::PseudoNormalized => {
            let mut out: Vec<Vec3> = (0..n).map(|_| fresh()).collect();
            if n >= 2 {
                standardize(&mut out);
            }
            out
        }
        Strategy::PseudoAntithetic => {
            let mut out = vec![[0.0; 3]; n];
            let half = n / 2;
            for i in 0..half {
                let xi = fresh();
                let (a, b) = match pairing {
                    AntitheticPairing::Trajectory => (i, i + half),
                    AntitheticPairing::Consecutive => (2 * i, 2 * i + 1),
                };
                out[a] = xi;
                out[b] = xi.map(|x| -x);
            }
            if n % 2 == 1 {
                out[n - 1] = fresh();
            }
            out
        }
        Strategy::QmcShuffled | Strategy::ArrayRqmc => {
            let mut gen = quasi_initial_source(seed, key)?;
            (0..n).map(|_| gen.next_uniform3().map(standard_normal)).collect()
        }
    })
}

fn quasi_initial_source(seed: u64, key: &[u64]) -> Result<SobolGenerator, Error> {
    let mut shift = PseudoStream::keyed(seed, Purpose::DigitalShift, &[u64::MAX, key[0], key[1]]);
    let mut gen = SobolGenerator::new(3)?.apply_digital_shift(&mut shift);
    gen.seek(1)?;
    Ok(gen)
}

/// Velocity moments of the anisotropic start measured on `n` pseudo-random
/// samples; unit variance per component, so energy is 3/2.
pub fn anisotropic_moments(angle_deg: f64, n: usize, seed: u64) -> Result<CellMoments, Error> {
    let mut src = PseudoStream::keyed(seed, Purpose::Initial, &[u64::MAX]);
    let v = initialize_anisotropic_cut(n, angle_deg, &mut src)?;
    compute_moments(&v).ok_or(Error::DegenerateCell)
}

/// One repetition of a scenario, advanced step by step.
pub struct Simulation<'c> {
    config: &'c ScenarioConfig,
    repetition: u64,
    ensemble: ParticleEnsemble,
    index: CellIndex,
    grid: Grid1D,
    channel: Option<Channel>,
    walls: Option<Box<dyn WallSampler>>,
    /// Control process of the control-variate strategy.
    control: Option<Vec<Vec3>>,
    /// Constant drift/diffusion coefficients (relax-const).
    fixed: Option<FpCoefficients>,
    moments: Vec<Option<CellMoments>>,
    step: u64,
    scratch: Vec<Vec3>,
}

impl<'c> Simulation<'c> {
    pub fn new(config: &'c ScenarioConfig, repetition: u64) -> Result<Self, Error> {
        config.validate()?;
        if config.kind == ScenarioKind::UniformDemo {
            return Err(Error::Config("the uniform demo has no particle dynamics"));
        }
        let c0 = config.velocity_scale();
        let n = config.particles;
        let pairing = config.pairing();
        let gas = &config.gas;
        let (length, mut fixed, mut control, mut walls, mut channel) = (1.0, None, None, None, None);
        let mut ensemble = ParticleEnsemble::default();
        let grid;
        match config.kind {
            ScenarioKind::RelaxConst => {
                grid = Grid1D::new(1, length)?;
                let mut v = initial_normals(config.strategy, pairing, config.seed, &[repetition, 0], n)?;
                center(&mut v);
                ensemble.velocities = v.iter().map(|x| x.map(|c| c * c0)).collect();
                let e_inf = gas.equilibrium_energy(config.t_target);
                let coeff = FpCoefficients {
                    tau: gas.relaxation_time_at(config.t_target),
                    mean: [0.0; 3],
                    energy: e_inf,
                };
                if config.strategy == Strategy::ControlVariate {
                    let ratio = libm::sqrt(config.t_target / config.t0);
                    control = Some(ensemble.velocities.iter().map(|x| x.map(|c| c * ratio)).collect());
                }
                fixed = Some(coeff);
            }
            ScenarioKind::RelaxMcKean => {
                grid = Grid1D::new(1, length)?;
                let v = if config.strategy.is_quasi() {
                    let mut gen = quasi_initial_source(config.seed, &[repetition, 0])?;
                    initialize_anisotropic_cut(n, config.cut_angle, &mut gen)?
                } else {
                    let mut src = PseudoStream::keyed(config.seed, Purpose::Initial, &[repetition, 0]);
                    initialize_anisotropic_cut(n, config.cut_angle, &mut src)?
                };
                ensemble.velocities = v.iter().map(|x| x.map(|c| c * c0)).collect();
            }
            ScenarioKind::Couette | ScenarioKind::HeatFlux => {
                let ch = config.channel();
                grid = Grid1D::new(config.n_cells, ch.length)?;
                let width = grid.cell_width();
                for (j, count) in cell_counts(n, config.n_cells).into_iter().enumerate() {
                    let key = [repetition, j as u64];
                    let mut pos = PseudoStream::keyed(config.seed, Purpose::Position, &key);
                    for xi in initial_normals(config.strategy, pairing, config.seed, &key, count)? {
                        let x = ((j as f64 + pos.uniform()) * width).min(ch.length);
                        ensemble.positions.push([x, 0.0, 0.0]);
                        ensemble.velocities.push(xi.map(|c| c * c0));
                        ensemble.cells.push(j as u32);
                    }
                }
                walls = Some(if config.strategy.is_quasi() {
                    Box::new(QuasiWalls::new(config.seed, repetition)?) as Box<dyn WallSampler>
                } else {
                    Box::new(PseudoWalls::new(config.seed, repetition))
                });
                channel = Some(ch);
            }
            ScenarioKind::UniformDemo => unreachable!(),
        }
        if ensemble.positions.is_empty() {
            ensemble.positions = vec![[0.0; 3]; n];
            ensemble.cells = vec![0; n];
        }
        let index = CellIndex::from_cells(&ensemble.cells, grid.n_cells);
        let mut sim = Simulation {
            config,
            repetition,
            ensemble,
            index,
            grid,
            channel,
            walls,
            control,
            fixed,
            moments: Vec::new(),
            step: 0,
            scratch: Vec::new(),
        };
        sim.refresh_moments();
        Ok(sim)
    }

    fn refresh_moments(&mut self) {
        self.moments = (0..self.grid.n_cells)
            .map(|j| compute_moments_indexed(&self.ensemble.velocities, self.index.cell(j)))
            .collect();
    }

    pub fn ensemble(&self) -> &ParticleEnsemble {
        &self.ensemble
    }

    pub fn control(&self) -> Option<&[Vec3]> {
        self.control.as_deref()
    }

    pub fn cell_moments(&self, cell: usize) -> Option<&CellMoments> {
        self.moments.get(cell)?.as_ref()
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Velocity update in every cell, then free flight, wall interaction
    /// and cell reassignment.
    pub fn step(&mut self) -> Result<(), Error> {
        let cfg = self.config;
        for j in 0..self.grid.n_cells {
            let Some(moments) = self.moments[j] else { continue };
            let members = self.index.cell(j);
            let coeff = match self.fixed {
                Some(c) => c,
                None if members.len() < 2 || moments.energy <= 0.0 => continue,
                None => FpCoefficients::from_moments(&moments, &cfg.gas)?,
            };
            self.scratch.clear();
            self.scratch.extend(members.iter().map(|&p| self.ensemble.velocities[p as usize]));
            let req = NoiseRequest {
                seed: cfg.seed,
                repetition: self.repetition,
                step: self.step,
                cell: j as u64,
                velocities: &self.scratch,
                moments: &moments,
            };
            let noise = noise_block(cfg.strategy, cfg.pairing(), &req)?;
            let prop = OuPropagator::new(&coeff, cfg.dt);
            for (&p, xi) in members.iter().zip(&noise) {
                let p = p as usize;
                self.ensemble.velocities[p] = prop.apply(&self.ensemble.velocities[p], xi);
                if let Some(control) = self.control.as_mut() {
                    control[p] = prop.apply(&control[p], xi);
                }
            }
        }
        if let (Some(channel), Some(walls)) = (self.channel.as_ref(), self.walls.as_mut()) {
            let sampler = walls.as_mut();
            let ens = &mut self.ensemble;
            for (i, (pos, vel)) in ens.positions.iter_mut().zip(ens.velocities.iter_mut()).enumerate() {
                channel.advance(pos, vel, cfg.dt, &cfg.gas, sampler).map_err(|e| match e {
                    Error::WallRecursion { limit, .. } => Error::WallRecursion { particle: i, limit },
                    other => other,
                })?;
            }
            self.index = crate::ensemble::reassign_cells(&mut self.ensemble, &self.grid)?;
        }
        self.step += 1;
        self.refresh_moments();
        Ok(())
    }

    /// Scaled moments per cell; the control-variate strategy reports
    /// `g(M) - g(M_c) + E[g(M_c)]`.
    pub fn observe(&self) -> Vec<[f64; N_QUANTITIES]> {
        let c0 = self.config.velocity_scale();
        let mut out: Vec<[f64; N_QUANTITIES]> = self
            .moments
            .iter()
            .map(|m| m.as_ref().map_or([f64::NAN; N_QUANTITIES], |m| scaled_quantities(m, c0)))
            .collect();
        if let Some(control) = &self.control {
            if let Some(mc) = compute_moments(control) {
                let gc = scaled_quantities(&mc, c0);
                let mut expected = [0.0; N_QUANTITIES];
                expected[Quantity::Energy.index()] = 1.5 * self.config.t_target / self.config.t0;
                for (o, (g, e)) in out[0].iter_mut().zip(gc.iter().zip(&expected)) {
                    *o = *o - g + e;
                }
            }
        }
        out
    }
}

/// Runs one repetition and records the moments after every step.
pub fn run_repetition(config: &ScenarioConfig, repetition: u64) -> Result<MomentField, Error> {
    let mut sim = Simulation::new(config, repetition)?;
    let mut field = MomentField::new(config.n_steps, config.n_cells);
    for s in 0..config.n_steps {
        sim.step()?;
        for (j, values) in sim.observe().iter().enumerate() {
            field.set_cell(s, j, values);
        }
    }
    Ok(field)
}

/// Serial reference from `r_ref` pseudo-random repetitions at `n_ref`
/// particles, averaged per (step, cell, quantity).
pub fn build_reference_inhomogeneous(
    config: &ScenarioConfig,
    n_ref: usize,
    r_ref: usize,
    seed: u64,
) -> Result<ReferenceSolution, Error> {
    let cfg = reference_config(config, n_ref, r_ref, seed)?;
    let runs = (0..r_ref as u64).map(|r| run_repetition(&cfg, r)).collect::<Result<Vec<_>, _>>()?;
    Ok(ReferenceSolution {
        field: average_fields(&runs)?,
        provenance: Provenance::HighResolution { n_ref, r_ref, seed },
    })
}

/// The configuration a high-resolution reference is built with.
pub fn reference_config(config: &ScenarioConfig, n_ref: usize, r_ref: usize, seed: u64) -> Result<ScenarioConfig, Error> {
    if !config.kind.is_inhomogeneous() {
        return Err(Error::Config("simulated references are for couette and heatflux"));
    }
    let cfg = ScenarioConfig { particles: n_ref, repetitions: r_ref, seed, strategy: Strategy::Pseudo, ..config.clone() };
    cfg.validate()?;
    Ok(cfg)
}

/// Decay-rate convention of the analytic relaxation references.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RateConvention {
    /// Rates implied by the implemented update: `2/τ` for energy and stress,
    /// `3/τ` for heat flux.
    OuRecursion,
    /// Half those rates, as in the textbook relaxation law `e^{-t/τ}`.
    Textbook,
}

impl RateConvention {
    fn factor(self) -> f64 {
        match self {
            RateConvention::OuRecursion => 1.0,
            RateConvention::Textbook => 0.5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RateConvention::OuRecursion => "ou-recursion",
            RateConvention::Textbook => "textbook",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Provenance {
    Analytic(RateConvention),
    HighResolution { n_ref: usize, r_ref: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceSolution {
    pub field: MomentField,
    pub provenance: Provenance,
}

/// Mean zero, stress and heat flux zero, energy relaxing from the initial
/// to the reservoir value.
pub fn reference_relax_const(config: &ScenarioConfig, rate: RateConvention) -> ReferenceSolution {
    let tau = config.gas.relaxation_time_at(config.t_target);
    let (e0, e_inf) = (1.5, 1.5 * config.t_target / config.t0);
    let mut field = MomentField::new(config.n_steps, 1);
    for s in 0..config.n_steps {
        let t = (s + 1) as f64 * config.dt;
        let mut v = [0.0; N_QUANTITIES];
        v[Quantity::Energy.index()] = e_inf + (e0 - e_inf) * libm::exp(-2.0 * rate.factor() * t / tau);
        field.set_cell(s, 0, &v);
    }
    ReferenceSolution { field, provenance: Provenance::Analytic(rate) }
}

/// Mean and energy constant, stress decaying from `initial` at the
/// equilibrium relaxation rate and heat flux at 3/2 of it. `initial` is in
/// standardized units, which coincide with the scaled units here.
pub fn reference_relax_mckean(config: &ScenarioConfig, initial: &CellMoments, rate: RateConvention) -> ReferenceSolution {
    let tau = config.gas.relaxation_time_at(config.t0);
    let start = scaled_quantities(initial, 1.0);
    let mut field = MomentField::new(config.n_steps, 1);
    for s in 0..config.n_steps {
        let t = (s + 1) as f64 * config.dt;
        let stress = libm::exp(-2.0 * rate.factor() * t / tau);
        let heat = libm::exp(-3.0 * rate.factor() * t / tau);
        let mut v = [0.0; N_QUANTITIES];
        v[Quantity::Energy.index()] = 1.5;
        for q in [Quantity::SigmaXX, Quantity::SigmaXY, Quantity::SigmaXZ, Quantity::SigmaYY, Quantity::SigmaYZ] {
            v[q.index()] = start[q.index()] * stress;
        }
        for q in [Quantity::HeatX, Quantity::HeatY, Quantity::HeatZ] {
            v[q.index()] = start[q.index()] * heat;
        }
        field.set_cell(s, 0, &v);
    }
    ReferenceSolution { field, provenance: Provenance::Analytic(rate) }
}

const TWO_POW_M32: f64 = 1.0 / 4_294_967_296.0;

/// Sampling methods of the uniform-moment demo.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DemoMethod {
    MonteCarlo,
    /// Sobol' points under nested uniform scrambling.
    RandomizedSobol,
}

impl DemoMethod {
    pub fn name(self) -> &'static str {
        match self {
            DemoMethod::MonteCarlo => "mc",
            DemoMethod::RandomizedSobol => "rqmc",
        }
    }
}

/// Estimates of `E[U^k]`, `k = 1..4`, from `n` points.
pub fn uniform_moment_estimates(method: DemoMethod, n: usize, repetition: u64, seed: u64) -> Result<[f64; 4], Error> {
    let key = [repetition, n as u64, method as u64];
    let points: Vec<f64> = match method {
        DemoMethod::MonteCarlo => {
            let mut s = PseudoStream::keyed(seed, Purpose::Demo, &key);
            (0..n).map(|_| s.uniform()).collect()
        }
        DemoMethod::RandomizedSobol => {
            // digits below 2^-32 are scrambled too, i.e. uniform
            let mut s = PseudoStream::keyed(seed, Purpose::Demo, &key);
            let tree = s.next_u64();
            let mut gen = SobolGenerator::new(1)?;
            let mut b = [0u32];
            (0..n)
                .map(|_| {
                    gen.next_bits(&mut b)?;
                    Ok((f64::from(nested_uniform_scramble(b[0], tree)) + s.uniform()) * TWO_POW_M32)
                })
                .collect::<Result<_, Error>>()?
        }
    };
    let mut sums = [0.0; 4];
    for u in points {
        let mut p = 1.0;
        for s in &mut sums {
            p *= u;
            *s += p;
        }
    }
    Ok(sums.map(|s| s / n as f64))
}

/// Relative RMSE of the four moment estimates against `1/(k+1)` for each
/// method and `N`.
pub fn run_uniform_demo(ns: &[usize], reps: usize, seed: u64, window: FitWindow) -> Result<Vec<ConvergenceRecord>, Error> {
    let mut out = Vec::new();
    for method in [DemoMethod::MonteCarlo, DemoMethod::RandomizedSobol] {
        let mut per_k: [Vec<(usize, f64)>; 4] = Default::default();
        for &n in ns {
            let runs = (0..reps as u64)
                .map(|r| uniform_moment_estimates(method, n, r, seed).map(Vec::from))
                .collect::<Result<Vec<_>, _>>()?;
            let exact: Vec<f64> = (1..=4).map(|k| 1.0 / (k as f64 + 1.0)).collect();
            let f = rmse_field(&runs, &exact);
            for k in 0..4 {
                per_k[k].push((n, f.rmse[k] / exact[k]));
            }
        }
        for (k, points) in per_k.into_iter().enumerate() {
            out.push(ConvergenceRecord::new(
                String::from(method.name()),
                format!("moment_{}", k + 1),
                points,
                window,
            ));
        }
    }
    Ok(out)
}
