//! Embedding-training primitives: alias sampling, negative sampling and the
//! shared-memory wrapper used by the parallel trainers.

pub mod alias;
pub mod sgns;

use std::marker::PhantomData;

use serde::{Deserialize, Serialize};

/// How stochastic trainers schedule their updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecutionMode {
    /// Single thread, bitwise reproducible for a given seed.
    #[default]
    Deterministic,
    /// Lock-free updates from all worker threads; results vary run to run.
    Parallel,
}

/// SplitMix64 finalizer, used to derive independent seeds from a base seed
/// and a stream index.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Unsynchronized shared access to a parameter buffer for Hogwild-style
/// training. Concurrent writers may lose or interleave individual updates;
/// callers accept that in exchange for throughput.
pub(crate) struct Hogwild<'a, T> {
    ptr: *mut T,
    len: usize,
    _borrow: PhantomData<&'a mut [T]>,
}

unsafe impl<T: Send> Send for Hogwild<'_, T> {}
unsafe impl<T: Send> Sync for Hogwild<'_, T> {}

impl<'a, T> Hogwild<'a, T> {
    pub(crate) fn new(buf: &'a mut [T]) -> Self {
        Hogwild {
            ptr: buf.as_mut_ptr(),
            len: buf.len(),
            _borrow: PhantomData,
        }
    }

    /// # Safety
    /// The returned slice aliases every other slice handed out by this
    /// wrapper. Only plain float loads and stores may be performed through
    /// it, and the wrapper must outlive all uses.
    #[allow(clippy::mut_from_ref)]
    pub(crate) unsafe fn slice(&self) -> &mut [T] {
        std::slice::from_raw_parts_mut(self.ptr, self.len)
    }
}

#[cfg(test)]
mod tests {
    use super::mix_seed;

    #[test]
    fn mixed_seeds_differ_per_stream() {
        let a: Vec<u64> = (0..100).map(|i| mix_seed(42, i)).collect();
        let mut b = a.clone();
        b.sort();
        b.dedup();
        assert_eq!(a.len(), b.len());
        assert_eq!(mix_seed(42, 7), mix_seed(42, 7));
    }
}
