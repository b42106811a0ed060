use alloc::vec;
use alloc::vec::Vec;

use super::stream::{mix, PseudoStream};
use crate::Error;

/// Bits of resolution of every emitted coordinate.
pub const SOBOL_BITS: usize = 32;

/// Dimensions covered by the built-in direction numbers.
pub const EMBEDDED_DIMENSIONS: usize = 3;

const FRACTION: f64 = 1.0 / 4_294_967_296.0;

// Joe & Kuo (new-joe-kuo-6.21201), dimensions 2 and 3. Dimension 1 is the
// van der Corput sequence and is implicit in the published format.
const EMBEDDED_TABLE: &str = "d s a m_i\n2 1 0 1\n3 2 1 1 3\n";

#[derive(Clone, Debug, PartialEq, Eq)]
struct Primitive {
    degree: u32,
    coefficients: u32,
    initial: Vec<u32>,
}

/// Direction numbers in the `d s a m_i` text format of the published tables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectionTable {
    entries: Vec<Primitive>,
}

impl DirectionTable {
    /// Built-in table for the first [`EMBEDDED_DIMENSIONS`] dimensions.
    pub fn embedded() -> Self {
        Self::parse(EMBEDDED_TABLE).expect("embedded direction numbers are valid")
    }

    /// Parses a table. Lines whose first token is not an integer (the header)
    /// and blank lines are skipped; dimensions must start at 2 and be
    /// consecutive.
    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line_no = lineno + 1;
            let mut tokens = line.split_whitespace();
            let Some(first) = tokens.next() else { continue };
            let Ok(d) = first.parse::<usize>() else { continue };
            let bad = |reason| Error::DirectionTable { line: line_no, reason };
            if d != entries.len() + 2 {
                return Err(bad("dimensions must be consecutive starting at 2"));
            }
            let mut next = || -> Result<u32, Error> {
                tokens
                    .next()
                    .ok_or(bad("truncated line"))?
                    .parse::<u32>()
                    .map_err(|_| bad("not an integer"))
            };
            let degree = next()?;
            let coefficients = next()?;
            if degree == 0 || degree as usize > SOBOL_BITS {
                return Err(bad("degree out of range"));
            }
            let mut initial = Vec::with_capacity(degree as usize);
            for i in 1..=degree {
                let m = next()?;
                if m % 2 == 0 || (i < 32 && m >= 1u32 << i) {
                    return Err(bad("m_i must be odd and below 2^i"));
                }
                initial.push(m);
            }
            if tokens.next().is_some() {
                return Err(bad("more m_i values than the degree"));
            }
            entries.push(Primitive { degree, coefficients, initial });
        }
        Ok(Self { entries })
    }

    /// Number of dimensions the table defines, counting the implicit first.
    pub fn dimensions(&self) -> usize {
        self.entries.len() + 1
    }

    fn directions(&self, dim: usize) -> [u32; SOBOL_BITS] {
        let mut v = [0u32; SOBOL_BITS];
        if dim == 0 {
            for (i, v) in v.iter_mut().enumerate() {
                *v = 1 << (31 - i);
            }
            return v;
        }
        let p = &self.entries[dim - 1];
        let s = p.degree as usize;
        for i in 0..s.min(SOBOL_BITS) {
            v[i] = p.initial[i] << (31 - i);
        }
        for i in s..SOBOL_BITS {
            let mut x = v[i - s] ^ (v[i - s] >> s);
            for k in 1..s {
                if (p.coefficients >> (s - 1 - k)) & 1 == 1 {
                    x ^= v[i - k];
                }
            }
            v[i] = x;
        }
        v
    }
}

/// Gray-code Sobol' generator with optional digital shift.
///
/// Coordinates are kept as 32-bit fixed-point fractions; the shift is an
/// XOR on those bits and floating point appears only at emission.
#[derive(Clone, Debug)]
pub struct SobolGenerator {
    directions: Vec<[u32; SOBOL_BITS]>,
    state: Vec<u32>,
    shift: Vec<u32>,
    index: u64,
}

impl SobolGenerator {
    const END: u64 = 1 << SOBOL_BITS;

    /// Generator over the embedded direction numbers.
    pub fn new(dimension: usize) -> Result<Self, Error> {
        if dimension > EMBEDDED_DIMENSIONS {
            return Err(Error::SobolDimension {
                requested: dimension,
                available: EMBEDDED_DIMENSIONS,
            });
        }
        Self::from_table(&DirectionTable::embedded(), dimension)
    }

    pub fn from_table(table: &DirectionTable, dimension: usize) -> Result<Self, Error> {
        if dimension == 0 || dimension > table.dimensions() {
            return Err(Error::SobolDimension {
                requested: dimension,
                available: table.dimensions(),
            });
        }
        Ok(Self {
            directions: (0..dimension).map(|d| table.directions(d)).collect(),
            state: vec![0; dimension],
            shift: vec![0; dimension],
            index: 0,
        })
    }

    pub fn dimension(&self) -> usize {
        self.directions.len()
    }

    /// Index of the next point to be emitted.
    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn shift(&self) -> &[u32] {
        &self.shift
    }

    /// Repositions the generator so the next emitted point has `index`.
    pub fn seek(&mut self, index: u64) -> Result<(), Error> {
        if index >= Self::END {
            return Err(Error::SobolExhausted { index, count: 1 });
        }
        let gray = index ^ (index >> 1);
        for (state, dirs) in self.state.iter_mut().zip(&self.directions) {
            *state = dirs
                .iter()
                .enumerate()
                .filter(|(bit, _)| (gray >> bit) & 1 == 1)
                .fold(0, |acc, (_, v)| acc ^ v);
        }
        self.index = index;
        Ok(())
    }

    /// Replaces the digital shift with an explicit per-dimension mask.
    pub fn with_shift(mut self, mask: &[u32]) -> Self {
        assert_eq!(mask.len(), self.dimension(), "one mask word per dimension");
        self.shift.copy_from_slice(mask);
        self
    }

    /// Draws a uniform per-dimension XOR mask from `source`.
    pub fn apply_digital_shift(mut self, source: &mut PseudoStream) -> Self {
        for s in &mut self.shift {
            *s = source.next_u32();
        }
        self
    }

    /// Writes the current point as fixed-point fractions and advances.
    pub fn next_bits(&mut self, out: &mut [u32]) -> Result<(), Error> {
        if self.index >= Self::END {
            return Err(Error::SobolExhausted { index: self.index, count: 1 });
        }
        for ((o, s), m) in out.iter_mut().zip(&self.state).zip(&self.shift) {
            *o = s ^ m;
        }
        self.advance();
        Ok(())
    }

    /// Writes the current point in `[0, 1)` and advances.
    pub fn next_point(&mut self, out: &mut [f64]) -> Result<(), Error> {
        if self.index >= Self::END {
            return Err(Error::SobolExhausted { index: self.index, count: 1 });
        }
        for ((o, s), m) in out.iter_mut().zip(&self.state).zip(&self.shift) {
            *o = f64::from(s ^ m) * FRACTION;
        }
        self.advance();
        Ok(())
    }

    /// `n` consecutive points, flattened row-major (`n × dimension`).
    pub fn next_block(&mut self, n: usize) -> Result<Vec<f64>, Error> {
        if self.index + n as u64 > Self::END {
            return Err(Error::SobolExhausted { index: self.index, count: n as u64 });
        }
        let dim = self.dimension();
        let mut out = vec![0.0; n * dim];
        for row in out.chunks_exact_mut(dim) {
            self.next_point(row)?;
        }
        Ok(out)
    }

    #[inline]
    fn advance(&mut self) {
        self.index += 1;
        if self.index < Self::END {
            let bit = self.index.trailing_zeros() as usize;
            for (s, dirs) in self.state.iter_mut().zip(&self.directions) {
                *s ^= dirs[bit];
            }
        }
    }
}

/// Owen's nested uniform scramble of a 32-bit fraction: digit `i` is
/// flipped by a random bit owned by the node its higher digits select.
/// Node bits come from a hash of `(key, depth, prefix)`.
pub fn nested_uniform_scramble(bits: u32, key: u64) -> u32 {
    let mut out = bits;
    for depth in 0..SOBOL_BITS as u32 {
        let prefix = if depth == 0 { 0 } else { u64::from(bits >> (32 - depth)) };
        let node = mix(key ^ mix((prefix << 6) | u64::from(depth)));
        out ^= ((node >> 63) as u32) << (31 - depth);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    // First 16 unscrambled points in Gray-code order, dimensions 1-3
    // (scipy.stats.qmc.Sobol(d=3, scramble=False), Joe-Kuo 6.21201).
    const REFERENCE: [[f64; 3]; 16] = [
        [0.0, 0.0, 0.0],
        [0.5, 0.5, 0.5],
        [0.75, 0.25, 0.25],
        [0.25, 0.75, 0.75],
        [0.375, 0.375, 0.625],
        [0.875, 0.875, 0.125],
        [0.625, 0.125, 0.875],
        [0.125, 0.625, 0.375],
        [0.1875, 0.3125, 0.9375],
        [0.6875, 0.8125, 0.4375],
        [0.9375, 0.0625, 0.6875],
        [0.4375, 0.5625, 0.1875],
        [0.3125, 0.1875, 0.3125],
        [0.8125, 0.6875, 0.8125],
        [0.5625, 0.4375, 0.0625],
        [0.0625, 0.9375, 0.5625],
    ];

    /// Natural-order construction evaluated at the Gray-code index.
    fn direct_point(dirs: &[u32; SOBOL_BITS], index: u64) -> u32 {
        let g = index ^ (index >> 1);
        (0..SOBOL_BITS).filter(|b| (g >> b) & 1 == 1).fold(0, |acc, b| acc ^ dirs[b])
    }

    #[test]
    fn first_sixteen_match_reference_table() {
        let mut gen = SobolGenerator::new(3).unwrap();
        let block = gen.next_block(16).unwrap();
        for (k, want) in REFERENCE.iter().enumerate() {
            assert_eq!(&block[3 * k..3 * k + 3], want, "point {k}");
        }
        assert_eq!(gen.index(), 16);
    }

    #[test]
    fn gray_code_recurrence_matches_direct_construction() {
        let table = DirectionTable::embedded();
        let mut gen = SobolGenerator::new(3).unwrap();
        let mut bits = [0u32; 3];
        for k in 0..5000u64 {
            gen.next_bits(&mut bits).unwrap();
            for d in 0..3 {
                assert_eq!(bits[d], direct_point(&table.directions(d), k));
            }
        }
    }

    #[test]
    fn one_dimensional_values() {
        let mut gen = SobolGenerator::new(1).unwrap();
        gen.seek(1).unwrap();
        assert_eq!(gen.next_block(3).unwrap(), [0.5, 0.75, 0.25]);
    }

    #[test]
    fn point_zero_is_origin() {
        for d in 1..=3 {
            let mut gen = SobolGenerator::new(d).unwrap();
            assert!(gen.next_block(1).unwrap().iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn shift_twice_is_identity() {
        let s = 0xdead_beef;
        let plain = SobolGenerator::new(1).unwrap().next_block(64).unwrap();
        let mut shifted = SobolGenerator::new(1).unwrap().with_shift(&[s]);
        let mut bits = [0u32];
        for want in plain {
            shifted.next_bits(&mut bits).unwrap();
            assert_eq!(f64::from(bits[0] ^ s) * FRACTION, want);
        }
    }

    #[test]
    fn zero_mask_is_unshifted() {
        let a = SobolGenerator::new(3).unwrap().next_block(100).unwrap();
        let b = SobolGenerator::new(3).unwrap().with_shift(&[0, 0, 0]).next_block(100).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dyadic_balance() {
        for k in 0..=12u32 {
            let n = 1usize << k;
            let pts = SobolGenerator::new(1).unwrap().next_block(n).unwrap();
            let mut seen = vec![false; n];
            for x in pts {
                let cell = (x * n as f64) as usize;
                assert!(!seen[cell], "k={k}: two points in cell {cell}");
                seen[cell] = true;
            }
        }
    }

    #[test]
    fn seek_matches_sequential() {
        let mut a = SobolGenerator::new(3).unwrap();
        a.next_block(777).unwrap();
        let mut b = SobolGenerator::new(3).unwrap();
        b.seek(777).unwrap();
        assert_eq!(a.next_block(50).unwrap(), b.next_block(50).unwrap());
    }

    #[test]
    fn configuration_errors() {
        assert!(matches!(SobolGenerator::new(0), Err(Error::SobolDimension { .. })));
        assert!(matches!(SobolGenerator::new(4), Err(Error::SobolDimension { .. })));
    }

    #[test]
    fn index_overflow_is_rejected() {
        let mut gen = SobolGenerator::new(1).unwrap();
        gen.seek((1 << 32) - 2).unwrap();
        assert!(gen.next_block(3).is_err());
        assert_eq!(gen.next_block(2).unwrap().len(), 2);
        assert!(gen.next_block(1).is_err());
    }

    #[test]
    fn parses_published_format() {
        let text = "d       s       a       m_i\n2 1 0 1\n3 2 1 1 3\n4 3 1 1 3 1\n";
        let table = DirectionTable::parse(text).unwrap();
        assert_eq!(table.dimensions(), 4);
        let mut gen = SobolGenerator::from_table(&table, 4).unwrap();
        let pts = gen.next_block(4).unwrap();
        // scipy reference, 4th coordinate of points 0..3
        assert_eq!([pts[3], pts[7], pts[11], pts[15]], [0.0, 0.5, 0.25, 0.75]);
        assert_eq!(
            SobolGenerator::from_table(&table, 3).unwrap().next_block(16).unwrap(),
            SobolGenerator::new(3).unwrap().next_block(16).unwrap()
        );
    }

    #[test]
    fn rejects_malformed_tables() {
        for text in ["3 1 0 1\n", "2 1 0 2\n", "2 2 1 1\n", "2 1 0 1 1\n", "2 x 0 1\n"] {
            assert!(DirectionTable::parse(text).is_err(), "{text:?}");
        }
    }

    #[test]
    fn nested_scramble_is_a_balanced_bijection() {
        let mut gen = SobolGenerator::new(1).unwrap();
        let pts: Vec<u32> = (0..256).map(|_| {
            let mut b = [0u32];
            gen.next_bits(&mut b).unwrap();
            nested_uniform_scramble(b[0], 0xABCD)
        }).collect();
        let mut seen = [false; 256];
        for x in &pts {
            let c = (x >> 24) as usize;
            assert!(!seen[c]);
            seen[c] = true;
        }
        // same key, same map; another key moves points
        assert_eq!(nested_uniform_scramble(12345, 1), nested_uniform_scramble(12345, 1));
        let moved = (0..64u32).filter(|&x| nested_uniform_scramble(x << 26, 1) != nested_uniform_scramble(x << 26, 2)).count();
        assert!(moved > 32);
    }

    #[test]
    fn nested_scramble_flips_the_leading_digit_uniformly() {
        let ones = (0..4000u64).filter(|&k| nested_uniform_scramble(0, k) >> 31 == 1).count();
        assert!((1800..2200).contains(&ones), "{ones}");
    }
}
