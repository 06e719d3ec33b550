//! Amplitude update kernels.
//!
//! Each kernel writes every amplitude from a function of amplitudes that no
//! other worker touches, so the result does not depend on how rayon splits
//! the work.

use num_complex::Complex64;
use rayon::prelude::*;

use super::circuit::Matrix2;

/// Smallest slice handed to one rayon task.
const MIN_CHUNK: usize = 1 << 13;

#[inline]
fn controls_on(i: usize, cmask: usize) -> bool {
    i & cmask == cmask
}

/// Apply `m` to `target` on every amplitude pair whose controls are all set.
/// `cmask` must not contain the target bit.
pub fn apply_single(amps: &mut [Complex64], target: usize, cmask: usize, m: &Matrix2) {
    let half = 1usize << target;
    let block = half << 1;
    let chunk = block.max(MIN_CHUNK).min(amps.len());
    amps.par_chunks_mut(chunk)
        .enumerate()
        .for_each(|(ci, chunk_amps)| {
            let base = ci * chunk;
            for (bi, blk) in chunk_amps.chunks_mut(block).enumerate() {
                let blk_base = base + bi * block;
                let (lo, hi) = blk.split_at_mut(half);
                for o in 0..half {
                    if !controls_on(blk_base + o, cmask) {
                        continue;
                    }
                    let a = lo[o];
                    let b = hi[o];
                    lo[o] = m[0][0] * a + m[0][1] * b;
                    hi[o] = m[1][0] * a + m[1][1] * b;
                }
            }
        });
}

/// Controlled NOT with an arbitrary control set.
pub fn apply_x(amps: &mut [Complex64], target: usize, cmask: usize) {
    let half = 1usize << target;
    let block = half << 1;
    let chunk = block.max(MIN_CHUNK).min(amps.len());
    amps.par_chunks_mut(chunk)
        .enumerate()
        .for_each(|(ci, chunk_amps)| {
            let base = ci * chunk;
            for (bi, blk) in chunk_amps.chunks_mut(block).enumerate() {
                let blk_base = base + bi * block;
                let (lo, hi) = blk.split_at_mut(half);
                if cmask == 0 {
                    lo.swap_with_slice(hi);
                    continue;
                }
                for o in 0..half {
                    if controls_on(blk_base + o, cmask) {
                        std::mem::swap(&mut lo[o], &mut hi[o]);
                    }
                }
            }
        });
}

/// Multiply each amplitude by `factors[v]`, where `v` is the value of
/// `register` in that basis index (register[0] least significant).
pub fn apply_diagonal(
    amps: &mut [Complex64],
    register: &[usize],
    factors: &[Complex64],
    cmask: usize,
) {
    let chunk = MIN_CHUNK.min(amps.len());
    amps.par_chunks_mut(chunk)
        .enumerate()
        .for_each(|(ci, chunk_amps)| {
            let base = ci * chunk;
            for (o, a) in chunk_amps.iter_mut().enumerate() {
                let i = base + o;
                if !controls_on(i, cmask) {
                    continue;
                }
                let v = gather_bits(i, register);
                *a *= factors[v];
            }
        });
}

/// Value of the sub-register `qubits` inside basis index `i`.
#[inline]
pub fn gather_bits(i: usize, qubits: &[usize]) -> usize {
    qubits
        .iter()
        .enumerate()
        .fold(0, |acc, (j, &q)| acc | (((i >> q) & 1) << j))
}
