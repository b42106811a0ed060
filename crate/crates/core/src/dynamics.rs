//! Linear Fokker-Planck dynamics: relaxation time, exact Ornstein-Uhlenbeck
//! and Euler-Maruyama velocity updates, free flight and diffuse walls.

use crate::ensemble::CellMoments;
use crate::rng::standard_normal;
use crate::{Error, Vec3};

pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Gas constants. Viscosity follows `μ_ref (T / T_ref)^ω`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GasModel {
    pub mass: f64,
    pub boltzmann: f64,
    pub mu_ref: f64,
    pub t_ref: f64,
    pub omega: f64,
    pub d_ref: f64,
    pub number_density: f64,
}

impl GasModel {
    /// Monoatomic argon at `n = 10^19 m^-3`.
    pub const ARGON: GasModel = GasModel {
        mass: 6.63e-26,
        boltzmann: BOLTZMANN,
        mu_ref: 2.117e-5,
        t_ref: 273.0,
        omega: 0.81,
        d_ref: 4.17e-10,
        number_density: 1e19,
    };

    pub fn validate(&self) -> Result<(), Error> {
        let all = [
            self.mass,
            self.boltzmann,
            self.mu_ref,
            self.t_ref,
            self.omega,
            self.d_ref,
            self.number_density,
        ];
        if all.iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Config("gas constants must be positive"))
        }
    }

    /// `√(kT/m)`, the per-component thermal velocity spread.
    pub fn thermal_speed(&self, temperature: f64) -> f64 {
        libm::sqrt(self.boltzmann * temperature / self.mass)
    }

    /// Energy per unit mass of a Maxwellian, `(3/2) kT/m`.
    pub fn equilibrium_energy(&self, temperature: f64) -> f64 {
        1.5 * self.boltzmann * temperature / self.mass
    }

    pub fn temperature_of(&self, energy: f64) -> f64 {
        2.0 / 3.0 * self.mass / self.boltzmann * energy
    }

    pub fn viscosity(&self, temperature: f64) -> f64 {
        self.mu_ref * libm::pow(temperature / self.t_ref, self.omega)
    }

    /// `τ = 2μ(T) / (n k T)`.
    pub fn relaxation_time_at(&self, temperature: f64) -> f64 {
        2.0 * self.viscosity(temperature) / (self.number_density * self.boltzmann * temperature)
    }

    /// Hard-sphere mean free path `1 / (√2 π d² n)`.
    pub fn mean_free_path(&self) -> f64 {
        1.0 / (core::f64::consts::SQRT_2
            * core::f64::consts::PI
            * self.d_ref
            * self.d_ref
            * self.number_density)
    }
}

/// Relaxation time of a cell from its estimated energy.
pub fn relaxation_time(moments: &CellMoments, gas: &GasModel) -> Result<f64, Error> {
    if !(moments.energy > 0.0) {
        return Err(Error::DegenerateCell);
    }
    Ok(gas.relaxation_time_at(gas.temperature_of(moments.energy)))
}

/// Drift target and diffusion strength of one cell for one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FpCoefficients {
    pub tau: f64,
    pub mean: Vec3,
    pub energy: f64,
}

impl FpCoefficients {
    pub fn from_moments(moments: &CellMoments, gas: &GasModel) -> Result<Self, Error> {
        Ok(Self { tau: relaxation_time(moments, gas)?, mean: moments.mean, energy: moments.energy })
    }
}

/// Exact OU transition over a fixed `dt`, with the exponentials hoisted
/// out of the per-particle loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OuPropagator {
    mean: Vec3,
    decay: f64,
    amplitude: f64,
}

impl OuPropagator {
    pub fn new(coeff: &FpCoefficients, dt: f64) -> Self {
        let decay = libm::exp(-dt / coeff.tau);
        let amplitude = libm::sqrt(2.0 * coeff.energy / 3.0 * (1.0 - decay * decay));
        Self { mean: coeff.mean, decay, amplitude }
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// `c̄ + (v - c̄) e^{-dt/τ} + √((2ε/3)(1 - e^{-2dt/τ})) ξ`.
    #[inline]
    pub fn apply(&self, v: &Vec3, xi: &Vec3) -> Vec3 {
        [0, 1, 2].map(|k| self.mean[k] + (v[k] - self.mean[k]) * self.decay + self.amplitude * xi[k])
    }
}

pub fn ou_update(v: &Vec3, coeff: &FpCoefficients, dt: f64, xi: &Vec3) -> Vec3 {
    OuPropagator::new(coeff, dt).apply(v, xi)
}

/// First-order Euler-Maruyama step of the same SDE; only sensible for
/// `dt` well below `τ`.
pub fn em_update(v: &Vec3, coeff: &FpCoefficients, dt: f64, xi: &Vec3) -> Vec3 {
    let r = dt / coeff.tau;
    let amp = libm::sqrt(4.0 * coeff.energy / (3.0 * coeff.tau) * dt);
    [0, 1, 2].map(|k| v[k] - r * (v[k] - coeff.mean[k]) + amp * xi[k])
}

#[inline]
pub fn free_flight(position: &Vec3, velocity: &Vec3, dt: f64) -> Vec3 {
    [0, 1, 2].map(|k| position[k] + velocity[k] * dt)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum WallSide {
    /// `x = 0`
    Lower,
    /// `x = L`
    Upper,
}

/// Diffuse wall: temperature and tangential velocity (x component zero).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WallSpec {
    pub temperature: f64,
    pub velocity: Vec3,
    pub side: WallSide,
}

impl WallSpec {
    pub fn new(side: WallSide, temperature: f64, tangential: [f64; 2]) -> Self {
        Self { temperature, velocity: [0.0, tangential[0], tangential[1]], side }
    }
}

/// Source of the uniforms consumed by wall reflections: one for the normal
/// component, two for the tangential Gaussians.
pub trait WallSampler {
    fn draw(&mut self, side: WallSide) -> [f64; 3];
}

/// Upper bound on wall crossings within a single step.
pub const MAX_WALL_CROSSINGS: usize = 32;

/// Velocity re-emitted by a diffuse wall from uniforms `u`.
pub fn reemit(wall: &WallSpec, gas: &GasModel, u: [f64; 3]) -> Vec3 {
    let s = gas.thermal_speed(wall.temperature);
    let normal = s * libm::sqrt(-2.0 * libm::log(u[0].max(1.0 / 4_294_967_296.0)));
    let normal = match wall.side {
        WallSide::Lower => normal,
        WallSide::Upper => -normal,
    };
    [
        normal,
        wall.velocity[1] + s * standard_normal(u[1]),
        wall.velocity[2] + s * standard_normal(u[2]),
    ]
}

/// Both plates of the channel `[0, L]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Channel {
    pub length: f64,
    pub lower: WallSpec,
    pub upper: WallSpec,
}

impl Channel {
    /// Free flight over `dt` with exact crossing times: a particle reaching
    /// a plate is placed on it, re-emitted, and continues for the time that
    /// remains. Returns the number of wall hits.
    pub fn advance(
        &self,
        position: &mut Vec3,
        velocity: &mut Vec3,
        dt: f64,
        gas: &GasModel,
        sampler: &mut dyn WallSampler,
    ) -> Result<usize, Error> {
        let mut remaining = dt;
        for hits in 0..=MAX_WALL_CROSSINGS {
            let x_end = position[0] + velocity[0] * remaining;
            if (0.0..=self.length).contains(&x_end) {
                *position = free_flight(position, velocity, remaining);
                return Ok(hits);
            }
            let (wall, x_wall) = if x_end < 0.0 { (&self.lower, 0.0) } else { (&self.upper, self.length) };
            let t_hit = ((x_wall - position[0]) / velocity[0]).clamp(0.0, remaining);
            *position = free_flight(position, velocity, t_hit);
            position[0] = x_wall;
            *velocity = reemit(wall, gas, sampler.draw(wall.side));
            remaining -= t_hit;
        }
        Err(Error::WallRecursion { particle: usize::MAX, limit: MAX_WALL_CROSSINGS })
    }
}
