//! Index-parallel map used by reductions that must stay bit-deterministic.
//!
//! Work is split into fixed-size chunks whose partial results are combined in
//! ascending chunk order, so the floating-point reduction tree never depends
//! on how many workers an [`Executor`] uses.

use alloc::vec::Vec;

/// Samples per partial sum.
pub const REDUCTION_CHUNK: usize = 16;

pub trait Executor: Sync {
    /// Returns `[f(0), f(1), ..., f(count - 1)]`.
    fn map_indexed<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync;
}

/// Runs everything on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map_indexed<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        (0..count).map(f).collect()
    }
}

/// Number of chunks needed to cover `n` items.
#[inline]
pub fn chunk_count(n: usize) -> usize {
    n.div_ceil(REDUCTION_CHUNK)
}

/// Item range of chunk `c` over `n` items.
#[inline]
pub fn chunk_range(c: usize, n: usize) -> core::ops::Range<usize> {
    let start = c * REDUCTION_CHUNK;
    start..(start + REDUCTION_CHUNK).min(n)
}
