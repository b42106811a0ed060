//! Particle storage, per-cell indexing, initial conditions and moment
//! estimation.

use alloc::vec;
use alloc::vec::Vec;

use crate::rng::{standard_normal, UniformSource};
use crate::{Error, Vec3};

/// Structure-of-arrays particle storage.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParticleEnsemble {
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
    pub cells: Vec<u32>,
}

impl ParticleEnsemble {
    pub fn len(&self) -> usize {
        self.velocities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.velocities.is_empty()
    }
}

/// Uniform grid along the wall-normal (x) axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid1D {
    pub n_cells: usize,
    pub length: f64,
}

impl Grid1D {
    pub fn new(n_cells: usize, length: f64) -> Result<Self, Error> {
        if n_cells == 0 || !(length > 0.0) {
            return Err(Error::Config("grid needs at least one cell and positive length"));
        }
        Ok(Self { n_cells, length })
    }

    pub fn cell_width(&self) -> f64 {
        self.length / self.n_cells as f64
    }

    /// Cell of wall-normal coordinate `x`; `x = L` belongs to the last cell.
    #[inline]
    pub fn cell_of(&self, x: f64) -> usize {
        let c = (x / self.cell_width()) as usize;
        c.min(self.n_cells - 1)
    }
}

/// Particle lists per cell in compressed form. Each list keeps global
/// particle order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CellIndex {
    offsets: Vec<usize>,
    particles: Vec<u32>,
}

impl CellIndex {
    /// Builds the lists from per-particle cell ids (counting sort, stable).
    pub fn from_cells(cells: &[u32], n_cells: usize) -> Self {
        let mut offsets = vec![0usize; n_cells + 1];
        for &c in cells {
            offsets[c as usize + 1] += 1;
        }
        for j in 0..n_cells {
            offsets[j + 1] += offsets[j];
        }
        let mut cursor = offsets.clone();
        let mut particles = vec![0u32; cells.len()];
        for (i, &c) in cells.iter().enumerate() {
            particles[cursor[c as usize]] = i as u32;
            cursor[c as usize] += 1;
        }
        Self { offsets, particles }
    }

    pub fn n_cells(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn cell(&self, j: usize) -> &[u32] {
        &self.particles[self.offsets[j]..self.offsets[j + 1]]
    }

    pub fn count(&self, j: usize) -> usize {
        self.offsets[j + 1] - self.offsets[j]
    }
}

/// Moment estimates of one cell: mean velocity, translational energy per
/// unit mass, trace-free stress and heat flux.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CellMoments {
    pub n_particles: usize,
    pub mean: Vec3,
    pub energy: f64,
    pub stress: [[f64; 3]; 3],
    pub heat_flux: Vec3,
}

impl CellMoments {
    /// Per-component standard deviation of the velocity (population).
    pub fn stddev(&self) -> Vec3 {
        let third = 2.0 * self.energy / 3.0;
        [0, 1, 2].map(|k| libm::sqrt((self.stress[k][k] + third).max(0.0)))
    }

    /// Temperature `(2/3)(m/k) ε`.
    pub fn temperature(&self, mass: f64, boltzmann: f64) -> f64 {
        2.0 / 3.0 * mass / boltzmann * self.energy
    }
}

/// Moments of a set of velocities, or `None` for an empty cell.
pub fn compute_moments(velocities: &[Vec3]) -> Option<CellMoments> {
    moments_of(velocities.len(), || velocities.iter())
}

/// Moments of the particles `indices` of `velocities`.
pub fn compute_moments_indexed(velocities: &[Vec3], indices: &[u32]) -> Option<CellMoments> {
    moments_of(indices.len(), || indices.iter().map(|&i| &velocities[i as usize]))
}

fn moments_of<'a, I, F>(n: usize, iter: F) -> Option<CellMoments>
where
    I: Iterator<Item = &'a Vec3>,
    F: Fn() -> I,
{
    if n == 0 {
        return None;
    }
    let inv = 1.0 / n as f64;
    let mut mean = [0.0; 3];
    for v in iter() {
        for k in 0..3 {
            mean[k] += v[k];
        }
    }
    mean = mean.map(|m| m * inv);

    let mut second = [[0.0; 3]; 3];
    let mut flux = [0.0; 3];
    for v in iter() {
        let u = [v[0] - mean[0], v[1] - mean[1], v[2] - mean[2]];
        let sq = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
        for k in 0..3 {
            for l in k..3 {
                second[k][l] += u[k] * u[l];
            }
            flux[k] += u[k] * sq;
        }
    }
    let trace = (second[0][0] + second[1][1] + second[2][2]) * inv;
    let mut stress = [[0.0; 3]; 3];
    for k in 0..3 {
        for l in k..3 {
            stress[k][l] = second[k][l] * inv;
            stress[l][k] = stress[k][l];
        }
        stress[k][k] -= trace / 3.0;
    }
    Some(CellMoments {
        n_particles: n,
        mean,
        energy: 0.5 * trace,
        stress,
        heat_flux: flux.map(|q| 0.5 * q * inv),
    })
}

/// Maxwellian velocities: `bulk + thermal_speed · Φ⁻¹(u)` per component,
/// where `thermal_speed = √(kT/m)` and `u` comes from `source`.
pub fn initialize_maxwellian(
    n: usize,
    thermal_speed: f64,
    bulk: &Vec3,
    source: &mut dyn UniformSource,
) -> Vec<Vec3> {
    (0..n)
        .map(|_| {
            let u = source.next_uniform3();
            [0, 1, 2].map(|k| bulk[k] + thermal_speed * standard_normal(u[k]))
        })
        .collect()
}

/// Unit normal of the cutting plane: the x-y plane tilted by `angle_deg`
/// counterclockwise about the in-plane diagonal `(1, 1, 0)/√2`.
pub fn cut_plane_normal(angle_deg: f64) -> Vec3 {
    let a = angle_deg.to_radians();
    let (s, c) = (libm::sin(a), libm::cos(a));
    let h = core::f64::consts::FRAC_1_SQRT_2 * s;
    [h, -h, c]
}

/// Standard-normal triples with the half-space on the increasing-z side of
/// the tilted plane rejected, then shifted and scaled per component to
/// empirical mean 0 and variance 1.
pub fn initialize_anisotropic_cut(
    n: usize,
    angle_deg: f64,
    source: &mut dyn UniformSource,
) -> Result<Vec<Vec3>, Error> {
    if n < 2 {
        return Err(Error::Config("anisotropic initialization needs at least 2 particles"));
    }
    let normal = cut_plane_normal(angle_deg);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let xi = source.next_uniform3().map(standard_normal);
        if xi[0] * normal[0] + xi[1] * normal[1] + xi[2] * normal[2] <= 0.0 {
            out.push(xi);
        }
    }
    standardize(&mut out);
    Ok(out)
}

/// Affine per-component map to empirical mean 0 and population variance 1.
/// Components with zero spread are only centered.
pub fn standardize(values: &mut [Vec3]) {
    let n = values.len() as f64;
    if values.is_empty() {
        return;
    }
    for k in 0..3 {
        let mean = values.iter().map(|v| v[k]).sum::<f64>() / n;
        let var = values.iter().map(|v| (v[k] - mean) * (v[k] - mean)).sum::<f64>() / n;
        let scale = if var > 0.0 { 1.0 / libm::sqrt(var) } else { 1.0 };
        for v in values.iter_mut() {
            v[k] = (v[k] - mean) * scale;
        }
    }
}

/// Subtracts the empirical mean.
pub fn center(values: &mut [Vec3]) {
    if values.is_empty() {
        return;
    }
    let n = values.len() as f64;
    for k in 0..3 {
        let mean = values.iter().map(|v| v[k]).sum::<f64>() / n;
        for v in values.iter_mut() {
            v[k] -= mean;
        }
    }
}

/// Particles per cell when `n` particles are spread uniformly; the
/// remainder goes to the low-index cells.
pub fn cell_counts(n: usize, n_cells: usize) -> Vec<usize> {
    (0..n_cells).map(|j| n / n_cells + usize::from(j < n % n_cells)).collect()
}

/// Recomputes cell ids from wall-normal positions and rebuilds the lists.
pub fn reassign_cells(ensemble: &mut ParticleEnsemble, grid: &Grid1D) -> Result<CellIndex, Error> {
    for (i, (x, cell)) in ensemble.positions.iter().zip(ensemble.cells.iter_mut()).enumerate() {
        if !(x[0] >= 0.0 && x[0] <= grid.length) {
            return Err(Error::OutsideDomain { particle: i, position: x[0], length: grid.length });
        }
        *cell = grid.cell_of(x[0]) as u32;
    }
    Ok(CellIndex::from_cells(&ensemble.cells, grid.n_cells))
}
