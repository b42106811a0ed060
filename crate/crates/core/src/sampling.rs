//! Noise-sampling strategies. Each produces, for one cell and one step, a
//! block of standard-normal triples aligned with the cell's particle list.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::dynamics::{WallSampler, WallSide};
use crate::ensemble::CellMoments;
use crate::order::morton_order;
use crate::rng::{shuffle, standard_normal, PseudoStream, Purpose, SobolGenerator};
use crate::{Error, Vec3};

const FRACTION: f64 = 1.0 / 4_294_967_296.0;

/// Standard-normal triples; entry `i` drives particle `i` of the cell list.
pub type NoiseBlock = Vec<Vec3>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    Pseudo,
    PseudoNormalized,
    PseudoAntithetic,
    ControlVariate,
    QmcShuffled,
    ArrayRqmc,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::Pseudo,
        Strategy::PseudoNormalized,
        Strategy::PseudoAntithetic,
        Strategy::ControlVariate,
        Strategy::QmcShuffled,
        Strategy::ArrayRqmc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Pseudo => "pseudo",
            Strategy::PseudoNormalized => "pseudo-normalized",
            Strategy::PseudoAntithetic => "pseudo-antithetic",
            Strategy::ControlVariate => "control-variate",
            Strategy::QmcShuffled => "qmc-shuffled",
            Strategy::ArrayRqmc => "array-rqmc",
        }
    }

    /// Whether initialization and wall draws use Sobol' points.
    pub fn is_quasi(self) -> bool {
        matches!(self, Strategy::QmcShuffled | Strategy::ArrayRqmc)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownStrategy(s.into()))
    }
}

/// How antithetic pairs are formed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AntitheticPairing {
    /// Entries `i` and `i + n/2`; with a fixed particle list this keeps
    /// whole trajectories antithetic.
    Trajectory,
    /// Entries `2i` and `2i + 1` of the current cell order.
    Consecutive,
}

/// Everything a strategy may look at when producing one block.
#[derive(Clone, Copy, Debug)]
pub struct NoiseRequest<'a> {
    pub seed: u64,
    pub repetition: u64,
    pub step: u64,
    pub cell: u64,
    pub velocities: &'a [Vec3],
    pub moments: &'a CellMoments,
}

impl NoiseRequest<'_> {
    fn key(&self) -> [u64; 3] {
        [self.repetition, self.step, self.cell]
    }

    fn stream(&self, purpose: Purpose) -> PseudoStream {
        PseudoStream::keyed(self.seed, purpose, &self.key())
    }

    pub fn len(&self) -> usize {
        self.velocities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.velocities.is_empty()
    }
}

/// Dispatches to the strategy's generator. The control-variate strategy
/// draws plain pseudo-random noise; its control process is driven by the
/// simulation with the same block.
pub fn noise_block(
    strategy: Strategy,
    pairing: AntitheticPairing,
    req: &NoiseRequest<'_>,
) -> Result<NoiseBlock, Error> {
    Ok(match strategy {
        Strategy::Pseudo | Strategy::ControlVariate => pseudo(req),
        Strategy::PseudoNormalized => normalized(req),
        Strategy::PseudoAntithetic => antithetic(req, pairing),
        Strategy::QmcShuffled => qmc_shuffled(req)?,
        Strategy::ArrayRqmc => array_rqmc(req)?,
    })
}

/// I.i.d. standard-normal triples from the (repetition, step, cell) stream.
pub fn pseudo(req: &NoiseRequest<'_>) -> NoiseBlock {
    let mut s = req.stream(Purpose::Noise);
    (0..req.len()).map(|_| [s.normal(), s.normal(), s.normal()]).collect()
}

/// Pseudo block shifted and scaled per component to empirical mean 0 and
/// variance 1. Blocks shorter than 2 are returned unnormalized.
pub fn normalized(req: &NoiseRequest<'_>) -> NoiseBlock {
    let mut block = pseudo(req);
    if block.len() >= 2 {
        crate::ensemble::standardize(&mut block);
    }
    block
}

/// Pairs `(ξ, -ξ)`; an odd block keeps one unpaired draw at the end.
pub fn antithetic(req: &NoiseRequest<'_>, pairing: AntitheticPairing) -> NoiseBlock {
    let n = req.len();
    let half = n / 2;
    let mut s = req.stream(Purpose::Noise);
    let mut fresh = || [s.normal(), s.normal(), s.normal()];
    let mut block = vec![[0.0; 3]; n];
    match pairing {
        AntitheticPairing::Trajectory => {
            for i in 0..half {
                let xi = fresh();
                block[i] = xi;
                block[i + half] = xi.map(|x| -x);
            }
        }
        AntitheticPairing::Consecutive => {
            for i in 0..half {
                let xi = fresh();
                block[2 * i] = xi;
                block[2 * i + 1] = xi.map(|x| -x);
            }
        }
    }
    if n % 2 == 1 {
        block[n - 1] = fresh();
    }
    block
}

/// `n` three-dimensional Sobol' points at indices `1..=n` under a digital
/// shift drawn fresh for this (repetition, step, cell).
pub fn shifted_sobol_bits(req: &NoiseRequest<'_>) -> Result<Vec<[u32; 3]>, Error> {
    let mut gen = SobolGenerator::new(3)?.apply_digital_shift(&mut req.stream(Purpose::DigitalShift));
    gen.seek(1)?;
    let mut out = vec![[0u32; 3]; req.len()];
    for p in &mut out {
        gen.next_bits(p)?;
    }
    Ok(out)
}

#[inline]
fn to_normal(bits: &[u32; 3]) -> Vec3 {
    bits.map(|b| standard_normal(f64::from(b) * FRACTION))
}

/// Fresh shifted Sobol' points, inverted, in random order.
pub fn qmc_shuffled(req: &NoiseRequest<'_>) -> Result<NoiseBlock, Error> {
    let mut block: NoiseBlock = shifted_sobol_bits(req)?.iter().map(to_normal).collect();
    shuffle(&mut block, &mut req.stream(Purpose::Shuffle));
    Ok(block)
}

/// Array-RQMC: the Sobol' point of sequence rank `r` goes to the particle
/// whose velocity has Morton rank `r` in this cell.
pub fn array_rqmc(req: &NoiseRequest<'_>) -> Result<NoiseBlock, Error> {
    let points = shifted_sobol_bits(req)?;
    let ranks = morton_order(req.velocities, &req.moments.mean, &req.moments.stddev());
    let mut block = vec![[0.0; 3]; req.len()];
    for (point, &particle) in points.iter().zip(&ranks) {
        block[particle as usize] = to_normal(point);
    }
    Ok(block)
}

/// Wall uniforms from one pseudo-random stream per plate.
#[derive(Clone, Debug)]
pub struct PseudoWalls {
    lower: PseudoStream,
    upper: PseudoStream,
}

impl PseudoWalls {
    pub fn new(seed: u64, repetition: u64) -> Self {
        Self {
            lower: PseudoStream::keyed(seed, Purpose::Wall, &[repetition, 0]),
            upper: PseudoStream::keyed(seed, Purpose::Wall, &[repetition, 1]),
        }
    }
}

impl WallSampler for PseudoWalls {
    fn draw(&mut self, side: WallSide) -> [f64; 3] {
        let s = match side {
            WallSide::Lower => &mut self.lower,
            WallSide::Upper => &mut self.upper,
        };
        [s.uniform(), s.uniform(), s.uniform()]
    }
}

/// Points pre-generated per boundary cell and refilled in blocks.
pub const WALL_BLOCK: usize = 4096;

#[derive(Clone, Debug)]
struct WallSequence {
    generator: SobolGenerator,
    buffer: Vec<f64>,
    cursor: usize,
}

impl WallSequence {
    fn new(seed: u64, repetition: u64, side: u64) -> Result<Self, Error> {
        let mut shift = PseudoStream::keyed(seed, Purpose::WallShift, &[repetition, side]);
        let mut generator = SobolGenerator::new(3)?.apply_digital_shift(&mut shift);
        generator.seek(1)?;
        Ok(Self { generator, buffer: Vec::new(), cursor: 0 })
    }

    fn next(&mut self) -> [f64; 3] {
        if self.cursor == self.buffer.len() {
            self.buffer = self.generator.next_block(WALL_BLOCK).expect("wall Sobol' sequence exhausted");
            self.cursor = 0;
        }
        let p = [self.buffer[self.cursor], self.buffer[self.cursor + 1], self.buffer[self.cursor + 2]];
        self.cursor += 3;
        p
    }
}

/// Wall uniforms from a shifted Sobol' sequence per plate, consumed in order.
#[derive(Clone, Debug)]
pub struct QuasiWalls {
    lower: WallSequence,
    upper: WallSequence,
}

impl QuasiWalls {
    pub fn new(seed: u64, repetition: u64) -> Result<Self, Error> {
        Ok(Self {
            lower: WallSequence::new(seed, repetition, 0)?,
            upper: WallSequence::new(seed, repetition, 1)?,
        })
    }
}

impl WallSampler for QuasiWalls {
    fn draw(&mut self, side: WallSide) -> [f64; 3] {
        match side {
            WallSide::Lower => self.lower.next(),
            WallSide::Upper => self.upper.next(),
        }
    }
}
