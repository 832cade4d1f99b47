//! Uniform sampling of the non-zero entries of a dynamic integer array.
//!
//! Two arrays and a counter: `dense` holds every non-zero element together
//! with its value in slots `[0, len)`, and `position[u]` is the slot of `u`
//! in `dense` (or [`ABSENT`]). Updates touch a constant number of slots and
//! sampling is a single bounded draw, independent of how many entries are
//! non-zero.

use rand::Rng;

use crate::error::{Error, Result};

/// Marker stored in the position array for elements whose value is zero.
pub const ABSENT: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct NonZeroSampler {
    dense: Vec<(usize, i64)>,
    position: Vec<usize>,
    len: usize,
    last_update_slots: u32,
}

impl NonZeroSampler {
    /// All-zero array over `0..n`.
    pub fn new(n: usize) -> Self {
        NonZeroSampler {
            dense: vec![(0, 0); n],
            position: vec![ABSENT; n],
            len: 0,
            last_update_slots: 0,
        }
    }

    /// Builds the sampler from initial values in O(n).
    pub fn from_values(initial: &[i64]) -> Self {
        let mut s = Self::new(initial.len());
        for (u, &d) in initial.iter().enumerate() {
            if d != 0 {
                s.update(u, d);
            }
        }
        s
    }

    pub fn capacity(&self) -> usize {
        self.position.len()
    }

    /// Number of elements with a non-zero value.
    pub fn nonzero_count(&self) -> usize {
        self.len
    }

    pub fn value(&self, u: usize) -> i64 {
        match self.position[u] {
            ABSENT => 0,
            slot => self.dense[slot].1,
        }
    }

    pub fn position(&self, u: usize) -> Option<usize> {
        match self.position[u] {
            ABSENT => None,
            slot => Some(slot),
        }
    }

    /// Slot of `u` in the position array, for cache hints.
    pub(crate) fn position_slot(&self, u: usize) -> &usize {
        &self.position[u]
    }

    /// The live part of the dense array: `(element, value)` pairs.
    pub fn live(&self) -> &[(usize, i64)] {
        &self.dense[..self.len]
    }

    /// Adds `delta` to the value of `u`.
    ///
    /// Panics if `u` is out of range.
    pub fn update(&mut self, u: usize, delta: i64) {
        if delta == 0 {
            self.last_update_slots = 0;
            return;
        }
        let mut slots = 1;
        let pos = self.position[u];
        if pos != ABSENT {
            slots += 1;
            let value = self.dense[pos].1 + delta;
            if value != 0 {
                self.dense[pos].1 = value;
            } else {
                // Swap-remove: the last live slot moves into the hole.
                let last = self.len - 1;
                let moved = self.dense[last];
                self.dense[pos] = moved;
                self.position[moved.0] = pos;
                self.position[u] = ABSENT;
                self.len = last;
                slots += 4;
            }
        } else {
            self.dense[self.len] = (u, delta);
            self.position[u] = self.len;
            self.len += 1;
            slots += 2;
        }
        self.last_update_slots = slots;
    }

    /// Array slots (of either array) read or written by the most recent update.
    pub fn last_update_slot_accesses(&self) -> u32 {
        self.last_update_slots
    }

    /// Draws a non-zero element uniformly at random.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        if self.len == 0 {
            return Err(Error::EmptySupport);
        }
        Ok(self.dense[rng.random_range(0..self.len)].0)
    }

    /// Full O(n) consistency check of the dense/position pair.
    pub fn check_inverse(&self) -> bool {
        let dense_ok = self.dense[..self.len]
            .iter()
            .enumerate()
            .all(|(i, &(u, d))| d != 0 && self.position[u] == i);
        let count = self.position.iter().filter(|&&p| p != ABSENT).count();
        let position_ok = self
            .position
            .iter()
            .enumerate()
            .all(|(u, &p)| p == ABSENT || (p < self.len && self.dense[p].0 == u));
        dense_ok && position_ok && count == self.len
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn construction_examples() {
        assert_eq!(NonZeroSampler::from_values(&[0, 0, 0]).nonzero_count(), 0);
        let s = NonZeroSampler::from_values(&[2, 0, 1]);
        assert_eq!(s.nonzero_count(), 2);
        let mut held: Vec<_> = s.live().iter().map(|&(u, _)| u).collect();
        held.sort();
        assert_eq!(held, vec![0, 2]);
        assert_eq!(NonZeroSampler::from_values(&[1; 5]).nonzero_count(), 5);
    }

    #[test]
    fn zero_to_one_appends_at_end() {
        let mut s = NonZeroSampler::from_values(&[1, 0, 0, 1]);
        let before = s.nonzero_count();
        s.update(2, 1);
        assert_eq!(s.nonzero_count(), before + 1);
        assert_eq!(s.position(2), Some(before));
    }

    #[test]
    fn removal_mid_array_moves_last_element() {
        let mut s = NonZeroSampler::from_values(&[1, 1, 1, 1]);
        let victim = s.live()[1].0;
        let last = s.live()[3].0;
        s.update(victim, -1);
        assert_eq!(s.position(victim), None);
        assert_eq!(s.position(last), Some(1));
        assert_eq!(s.nonzero_count(), 3);
        assert!(s.check_inverse());
    }

    #[test]
    fn nonzero_to_nonzero_keeps_count() {
        let mut s = NonZeroSampler::from_values(&[2, 0]);
        s.update(0, 3);
        assert_eq!(s.nonzero_count(), 1);
        assert_eq!(s.value(0), 5);
    }

    #[test]
    fn negative_values_are_nonzero() {
        let mut s = NonZeroSampler::new(3);
        s.update(1, -2);
        assert_eq!(s.nonzero_count(), 1);
        s.update(1, 2);
        assert_eq!(s.nonzero_count(), 0);
    }

    #[test]
    fn singleton_support_always_sampled() {
        let s = NonZeroSampler::from_values(&[0, 0, 7, 0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(s.sample(&mut rng).unwrap(), 2);
        }
    }

    #[test]
    fn empty_support_errors() {
        let s = NonZeroSampler::new(4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(s.sample(&mut rng), Err(Error::EmptySupport));
    }

    #[test]
    fn two_element_support_is_balanced() {
        let s = NonZeroSampler::from_values(&[1, 0, 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws = 100_000;
        let zeros = (0..draws).filter(|_| s.sample(&mut rng).unwrap() == 0).count();
        let freq = zeros as f64 / draws as f64;
        assert!((freq - 0.5).abs() <= 0.02, "frequency {freq}");
    }

    #[test]
    fn random_churn_matches_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 40;
        let mut values = vec![0i64; n];
        let mut s = NonZeroSampler::new(n);
        for _ in 0..20_000 {
            let u = rng.random_range(0..n);
            let delta = if values[u] > 0 && rng.random_bool(0.6) { -1 } else { 1 };
            values[u] += delta;
            s.update(u, delta);
            assert!(s.last_update_slot_accesses() <= 8);
        }
        assert!(s.check_inverse());
        assert_eq!(s.nonzero_count(), values.iter().filter(|&&d| d != 0).count());
        for u in 0..n {
            assert_eq!(s.value(u), values[u]);
        }
    }
}
