//! Velocity-space ordering for Array-RQMC: per-cell normalization to the
//! unit cube, quantization onto a `2^p` grid, Morton bit interleaving, and
//! a stable LSD radix sort that yields the particle permutation.

use alloc::vec;
use alloc::vec::Vec;

use crate::Vec3;

/// Largest bits-per-axis for which three interleaved axes fit in 64 bits.
pub const MAX_BITS_PER_AXIS: u32 = 21;

/// Morton index of a quantized velocity triple.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MortonKey {
    pub value: u64,
    pub bits_per_axis: u32,
}

/// Smallest `p` with `2^(3p) > n`, capped at [`MAX_BITS_PER_AXIS`].
pub fn grid_resolution(n_particles: usize) -> u32 {
    let n = n_particles as u128;
    let mut p = 0;
    while p < MAX_BITS_PER_AXIS && (1u128 << (3 * p)) <= n {
        p += 1;
    }
    p
}

/// Maps each component to `½(1 + (v - mean) / 3σ)`, clipped to `[0, 1]`.
/// Components with `σ ≤ 0` sit at the grid centre.
pub fn normalize_velocity(v: &Vec3, mean: &Vec3, stddev: &Vec3) -> Vec3 {
    let mut out = [0.5; 3];
    for k in 0..3 {
        if stddev[k] > 0.0 {
            out[k] = (0.5 * (1.0 + (v[k] - mean[k]) / (3.0 * stddev[k]))).clamp(0.0, 1.0);
        }
    }
    out
}

/// Spreads the low 21 bits of `x` so that bit i lands on bit 3i.
#[inline]
fn part1by2(x: u64) -> u64 {
    let mut x = x & 0x1f_ffff;
    x = (x | x << 32) & 0x001f_0000_0000_ffff;
    x = (x | x << 16) & 0x001f_0000_ff00_00ff;
    x = (x | x << 8) & 0x100f_00f0_0f00_f00f;
    x = (x | x << 4) & 0x10c3_0c30_c30c_30c3;
    x = (x | x << 2) & 0x1249_2492_4924_9249;
    x
}

#[inline]
fn compact1by2(x: u64) -> u64 {
    let mut x = x & 0x1249_2492_4924_9249;
    x = (x ^ (x >> 2)) & 0x10c3_0c30_c30c_30c3;
    x = (x ^ (x >> 4)) & 0x100f_00f0_0f00_f00f;
    x = (x ^ (x >> 8)) & 0x001f_0000_ff00_00ff;
    x = (x ^ (x >> 16)) & 0x001f_0000_0000_ffff;
    x = (x ^ (x >> 32)) & 0x1f_ffff;
    x
}

/// Interleaves integer grid coordinates; x takes the least-significant
/// position of every 3-bit group, then y, then z.
#[inline]
pub fn interleave(ix: u32, iy: u32, iz: u32) -> u64 {
    part1by2(ix as u64) | part1by2(iy as u64) << 1 | part1by2(iz as u64) << 2
}

#[inline]
pub fn deinterleave(key: u64) -> (u32, u32, u32) {
    (compact1by2(key) as u32, compact1by2(key >> 1) as u32, compact1by2(key >> 2) as u32)
}

/// Quantizes a point of the unit cube to `[0, 2^p - 1]^3`.
#[inline]
pub fn quantize(scaled: &Vec3, bits_per_axis: u32) -> [u32; 3] {
    let cells = (1u64 << bits_per_axis) as f64;
    let top = (1u32 << bits_per_axis) - 1;
    scaled.map(|s| ((cells * s) as u32).min(top))
}

/// Morton key of a normalized velocity.
pub fn morton_encode(scaled: &Vec3, bits_per_axis: u32) -> MortonKey {
    debug_assert!((1..=MAX_BITS_PER_AXIS).contains(&bits_per_axis));
    let [ix, iy, iz] = quantize(scaled, bits_per_axis);
    MortonKey { value: interleave(ix, iy, iz), bits_per_axis }
}

/// Stable ascending-key permutation of `keys` whose values use at most
/// `key_bits` low bits. LSD radix sort, 8-bit digits, `ceil(key_bits / 8)`
/// counting passes.
pub fn radix_sort_permutation(keys: &[u64], key_bits: u32) -> Vec<u32> {
    let n = keys.len();
    assert!(n <= u32::MAX as usize, "radix sort indexes with u32");
    let mut perm: Vec<u32> = (0..n as u32).collect();
    if n < 2 {
        return perm;
    }
    let passes = key_bits.div_ceil(8).min(8);
    let mut scratch = vec![0u32; n];
    for pass in 0..passes {
        let shift = 8 * pass;
        let mut counts = [0usize; 257];
        for &i in &perm {
            counts[((keys[i as usize] >> shift) & 0xff) as usize + 1] += 1;
        }
        if counts[1..].contains(&n) {
            continue;
        }
        for d in 0..256 {
            counts[d + 1] += counts[d];
        }
        for &i in &perm {
            let d = ((keys[i as usize] >> shift) & 0xff) as usize;
            scratch[counts[d]] = i;
            counts[d] += 1;
        }
        core::mem::swap(&mut perm, &mut scratch);
    }
    perm
}

/// Permutation sorting `keys` ascending, stable on ties.
pub fn radix_sort_keys(keys: &[MortonKey]) -> Vec<u32> {
    let bits = keys.iter().map(|k| 3 * k.bits_per_axis).max().unwrap_or(0);
    let raw: Vec<u64> = keys.iter().map(|k| k.value).collect();
    radix_sort_permutation(&raw, bits)
}

/// Rank order of a cell's particles along the Morton curve of their
/// velocities, normalized with the given cell mean and per-component
/// standard deviation.
pub fn morton_order(velocities: &[Vec3], mean: &Vec3, stddev: &Vec3) -> Vec<u32> {
    if velocities.is_empty() {
        return Vec::new();
    }
    let p = grid_resolution(velocities.len());
    let keys: Vec<u64> = velocities
        .iter()
        .map(|v| morton_encode(&normalize_velocity(v, mean, stddev), p).value)
        .collect();
    radix_sort_permutation(&keys, 3 * p)
}
