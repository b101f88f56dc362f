//! Randomness sources.
//!
//! Everything random in a trial (Born sampling, pads, fresh protocol bits,
//! adversary coins) is drawn through [`Entropy`]. Seeded ChaCha streams back
//! ordinary trials; [`Enumerator`] walks every branch of a computation with
//! its exact probability weight.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::rc::Rc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub trait Entropy {
    /// Returns `true` with probability `p`.
    fn bernoulli(&mut self, p: f64) -> bool;

    fn bit(&mut self) -> bool {
        self.bernoulli(0.5)
    }

    fn bits(&mut self, len: usize) -> Vec<bool> {
        (0..len).map(|_| self.bit()).collect()
    }

    /// Uniform integer below `bound` (`bound` a power of two is exact under
    /// enumeration; other bounds use rejection).
    fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        let width = 64 - (bound - 1).leading_zeros();
        loop {
            let mut v = 0u64;
            for _ in 0..width {
                v = (v << 1) | self.bit() as u64;
            }
            if v < bound {
                return v;
            }
        }
    }

    fn u64(&mut self) -> u64 {
        (0..64).fold(0u64, |acc, _| (acc << 1) | self.bit() as u64)
    }

    /// A uniform real in [0, 1); only meaningful for sampling sources.
    fn unit(&mut self) -> f64 {
        (self.u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

impl<R: RngCore + ?Sized> Entropy for R {
    fn bernoulli(&mut self, p: f64) -> bool {
        if p <= 0.0 {
            false
        } else if p >= 1.0 {
            true
        } else {
            self.random::<f64>() < p
        }
    }

    fn bit(&mut self) -> bool {
        self.random()
    }

    fn below(&mut self, bound: u64) -> u64 {
        self.random_range(0..bound)
    }

    fn u64(&mut self) -> u64 {
        self.next_u64()
    }

    fn unit(&mut self) -> f64 {
        self.random()
    }
}

/// The three independent streams of one trial.
#[derive(Debug, Clone)]
pub struct TrialRng {
    pub protocol: ChaCha8Rng,
    pub pads: ChaCha8Rng,
    pub adversary: ChaCha8Rng,
}

impl TrialRng {
    pub fn new(seed: u64) -> Self {
        let stream = |id: u64| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(id);
            r
        };
        Self {
            protocol: stream(0),
            pads: stream(1),
            adversary: stream(2),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Branch {
    value: bool,
    p_true: f64,
}

#[derive(Debug, Default)]
struct Tape {
    branches: Vec<Branch>,
    cursor: usize,
    weight: f64,
}

/// Depth-first enumeration of every random branch of a computation.
///
/// Handles are cheap clones sharing one tape, so a computation that needs
/// two entropy sources (pads and fresh bits) can draw from both.
#[derive(Debug, Clone, Default)]
pub struct Enumerator {
    tape: Rc<RefCell<Tape>>,
}

/// Branch probabilities closer than this to 0 or 1 are rounded, so
/// floating-point residue in Born probabilities does not spawn branches.
pub const NEGLIGIBLE: f64 = 1e-14;

impl Entropy for Enumerator {
    fn bernoulli(&mut self, p: f64) -> bool {
        let p = if p < NEGLIGIBLE {
            0.0
        } else if p > 1.0 - NEGLIGIBLE {
            1.0
        } else {
            p
        };
        let mut tape = self.tape.borrow_mut();
        let cursor = tape.cursor;
        let value = if cursor < tape.branches.len() {
            tape.branches[cursor].value
        } else {
            let value = p >= 1.0;
            tape.branches.push(Branch { value, p_true: p });
            value
        };
        tape.cursor += 1;
        tape.weight *= if value { p } else { 1.0 - p };
        value
    }

    /// Exact for every bound: `i` is chosen with probability
    /// `1/(bound - i)` given that no smaller value was.
    fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        for i in 0..bound - 1 {
            if self.bernoulli(1.0 / (bound - i) as f64) {
                return i;
            }
        }
        bound - 1
    }
}

impl Enumerator {
    /// Runs `f` once per branch and accumulates the exact outcome
    /// distribution. Zero-probability branches are never visited.
    pub fn distribution<K, F>(mut f: F) -> BTreeMap<K, f64>
    where
        K: Ord,
        F: FnMut(&mut Enumerator) -> K,
    {
        let mut out = BTreeMap::new();
        let mut handle = Enumerator::default();
        loop {
            {
                let mut tape = handle.tape.borrow_mut();
                tape.cursor = 0;
                tape.weight = 1.0;
            }
            let key = f(&mut handle);
            let weight = {
                let mut tape = handle.tape.borrow_mut();
                let cursor = tape.cursor;
                tape.branches.truncate(cursor);
                tape.weight
            };
            if weight > 0.0 {
                *out.entry(key).or_insert(0.0) += weight;
            }
            if !handle.advance() {
                return out;
            }
        }
    }

    fn advance(&mut self) -> bool {
        let mut tape = self.tape.borrow_mut();
        while let Some(last) = tape.branches.last_mut() {
            if !last.value && last.p_true > 0.0 {
                last.value = true;
                return true;
            }
            tape.branches.pop();
        }
        false
    }
}

/// Total variation distance between two discrete distributions.
pub fn total_variation<K: Ord>(a: &BTreeMap<K, f64>, b: &BTreeMap<K, f64>) -> f64 {
    let mut sum = 0.0;
    for (k, pa) in a {
        sum += (pa - b.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, pb) in b {
        if !a.contains_key(k) {
            sum += pb;
        }
    }
    sum / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerator_covers_all_fair_bits() {
        let dist = Enumerator::distribution(|e| (e.bit(), e.bit(), e.bit()));
        assert_eq!(dist.len(), 8);
        for p in dist.values() {
            assert!((p - 0.125).abs() < 1e-15);
        }
    }

    #[test]
    fn enumerator_weights_biased_and_variable_depth() {
        // Second draw only happens on one branch.
        let dist = Enumerator::distribution(|e| if e.bernoulli(0.25) { (1, e.bit()) } else { (0, false) });
        assert!((dist[&(0, false)] - 0.75).abs() < 1e-15);
        assert!((dist[&(1, false)] - 0.125).abs() < 1e-15);
        assert!((dist[&(1, true)] - 0.125).abs() < 1e-15);
    }

    #[test]
    fn enumerator_skips_certain_branches() {
        let dist = Enumerator::distribution(|e| e.bernoulli(1.0));
        assert_eq!(dist.len(), 1);
        assert_eq!(dist[&true], 1.0);
    }

    #[test]
    fn enumerator_below_is_exactly_uniform() {
        let dist = Enumerator::distribution(|e| e.below(3));
        assert_eq!(dist.len(), 3);
        for p in dist.values() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn shared_handles_draw_from_one_tape() {
        let dist = Enumerator::distribution(|e| {
            let mut other = e.clone();
            (e.bit(), other.bit())
        });
        assert_eq!(dist.len(), 4);
    }

    #[test]
    fn trial_streams_are_reproducible_and_distinct() {
        let mut a = TrialRng::new(9);
        let mut b = TrialRng::new(9);
        assert_eq!(a.protocol.next_u64(), b.protocol.next_u64());
        assert_ne!(a.pads.next_u64(), a.adversary.next_u64());
    }
}
