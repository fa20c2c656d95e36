//! Deterministic counter-based random streams for replay.
//!
//! The generator is SplitMix64: the value at counter `k` of a stream with
//! key `s` is `mix64(s + (k + 1) * GAMMA)` where `mix64` is the SplitMix64
//! finalizer and `GAMMA = 0x9E3779B97F4A7C15`. Everything else derives from
//! that one pure function, so `(seed, purpose, step, draw index) -> u64` is
//! random-access and identical on every platform:
//!
//! * a run seeds a [`RunRng`];
//! * each draw purpose (pair selection, mixing value, graph, initial state)
//!   gets its own [`RunRng::substream`], keyed by a tag;
//! * each time step gets its own [`StepRng`] inside a substream, so draws at
//!   different steps never share state and evaluation order cannot matter.
//!
//! This is not cryptographic randomness and must never be used as such.

/// SplitMix64 increment.
const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer: a bijective 64-bit mix.
#[inline]
pub fn mix64(mut x: u64) -> u64 {
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Draw purposes; each owns a disjoint substream of the run stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamTag {
    PairDraw,
    MixingDraw,
    GraphDraw,
    InitDraw,
}

impl StreamTag {
    fn id(self) -> u64 {
        match self {
            StreamTag::PairDraw => 1,
            StreamTag::MixingDraw => 2,
            StreamTag::GraphDraw => 3,
            StreamTag::InitDraw => 4,
        }
    }
}

/// A keyed stream; cheap to copy, immutable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunRng {
    key: u64,
}

impl RunRng {
    pub fn from_seed(seed: u64) -> Self {
        RunRng {
            key: mix64(seed ^ GAMMA),
        }
    }

    /// Disjoint stream for one draw purpose.
    pub fn substream(&self, tag: StreamTag) -> RunRng {
        RunRng {
            key: mix64(self.key ^ GAMMA.wrapping_mul(tag.id().wrapping_add(1))),
        }
    }

    /// Per-step generator; `t` indexes time, values are random-access.
    pub fn at_step(&self, t: u64) -> StepRng {
        StepRng {
            base: mix64(self.key ^ mix64(t.wrapping_add(1))),
            next: 0,
        }
    }
}

/// Sequential draws within one (purpose, step) cell.
#[derive(Debug, Clone, Copy)]
pub struct StepRng {
    base: u64,
    next: u64,
}

impl StepRng {
    /// Value at index `k` of this cell, independent of draws issued so far.
    #[inline]
    pub fn value_at(&self, k: u64) -> u64 {
        mix64(
            self.base
                .wrapping_add(GAMMA.wrapping_mul(k.wrapping_add(1))),
        )
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let v = self.value_at(self.next);
        self.next += 1;
        v
    }

    /// Uniform draw on [0, 1) quantized to `bits` binary digits (<= 53).
    ///
    /// The result is always an exactly representable dyadic rational, which
    /// is what lets the exact backend consume the same stream losslessly.
    #[inline]
    pub fn next_unit(&mut self, bits: u32) -> f64 {
        debug_assert!((1..=53).contains(&bits));
        let v = self.next_u64() >> (64 - bits);
        v as f64 / (1u64 << bits) as f64
    }

    /// Uniform draw on `[0, n)`.
    #[inline]
    pub fn next_index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        // Widening multiply: unbiased enough for simulation purposes and
        // stable across platforms.
        ((u128::from(self.next_u64()) * n as u128) >> 64) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_sequence() {
        let a = RunRng::from_seed(42).substream(StreamTag::MixingDraw);
        let b = RunRng::from_seed(42).substream(StreamTag::MixingDraw);
        for t in 0..100 {
            assert_eq!(a.at_step(t).next_u64(), b.at_step(t).next_u64());
        }
    }

    #[test]
    fn substreams_differ() {
        let run = RunRng::from_seed(7);
        let pair = run.substream(StreamTag::PairDraw).at_step(0).next_u64();
        let mu = run.substream(StreamTag::MixingDraw).at_step(0).next_u64();
        assert_ne!(pair, mu);
    }

    #[test]
    fn steps_are_random_access() {
        let s = RunRng::from_seed(9).substream(StreamTag::GraphDraw);
        // Reading t=5 before t=2 must not change what t=2 yields.
        let late_first = s.at_step(5).next_u64();
        let early = s.at_step(2).next_u64();
        let late_again = s.at_step(5).next_u64();
        assert_eq!(late_first, late_again);
        assert_eq!(early, s.at_step(2).next_u64());
    }

    #[test]
    fn value_at_matches_sequential() {
        let mut rng = RunRng::from_seed(3)
            .substream(StreamTag::InitDraw)
            .at_step(0);
        let probe = rng;
        let first = rng.next_u64();
        let second = rng.next_u64();
        assert_eq!(probe.value_at(0), first);
        assert_eq!(probe.value_at(1), second);
    }

    #[test]
    fn unit_draws_are_dyadic_and_in_range() {
        let mut rng = RunRng::from_seed(11)
            .substream(StreamTag::MixingDraw)
            .at_step(0);
        for _ in 0..1000 {
            let u = rng.next_unit(16);
            assert!((0.0..1.0).contains(&u));
            assert_eq!(u * 65536.0, (u * 65536.0).trunc());
        }
    }

    #[test]
    fn next_index_stays_in_bounds_and_covers() {
        let mut rng = RunRng::from_seed(5)
            .substream(StreamTag::PairDraw)
            .at_step(0);
        let mut seen = [false; 7];
        for _ in 0..1000 {
            seen[rng.next_index(7)] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn different_seeds_diverge() {
        let a = RunRng::from_seed(1)
            .substream(StreamTag::PairDraw)
            .at_step(0)
            .next_u64();
        let b = RunRng::from_seed(2)
            .substream(StreamTag::PairDraw)
            .at_step(0)
            .next_u64();
        assert_ne!(a, b);
    }
}
