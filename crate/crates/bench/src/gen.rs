//! Seeded workload generators.

use indexmap::IndexSet;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dynmsf::{Update, WeightedEdge};

use crate::trace::TraceRecord;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamOptions {
    /// Probability that a step inserts rather than deletes.
    pub insert_bias: f64,
    /// Deletions are suppressed while the graph has at most this many edges.
    pub min_edges: usize,
    /// Probability that an inserted edge gets the maximum weight `W`.
    pub heavy_fraction: f64,
}

impl Default for StreamOptions {
    fn default() -> Self {
        StreamOptions {
            insert_bias: 0.5,
            min_edges: 0,
            heavy_fraction: 0.0,
        }
    }
}

/// Random insert/delete stream on a simple graph. Inserts pick a uniformly
/// random absent pair with a weight uniform in `[1, W]` (3 decimals); deletes
/// pick a uniformly random present edge.
#[derive(Debug, Clone)]
pub struct RandomStream {
    n: usize,
    max_weight: f64,
    opts: StreamOptions,
    rng: ChaCha8Rng,
    edges: IndexSet<(usize, usize)>,
    weights: Vec<f64>,
}

impl RandomStream {
    pub fn new(n: usize, max_weight: f64, seed: u64, opts: StreamOptions) -> Self {
        assert!(n >= 2, "need at least two vertices");
        assert!(max_weight >= 1.0, "weights start at 1");
        RandomStream {
            n,
            max_weight,
            opts,
            rng: ChaCha8Rng::seed_from_u64(seed),
            edges: IndexSet::new(),
            weights: Vec::new(),
        }
    }

    pub fn set_options(&mut self, opts: StreamOptions) {
        self.opts = opts;
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    fn capacity(&self) -> usize {
        self.n * (self.n - 1) / 2
    }

    /// Edges present after the updates produced so far.
    pub fn edges(&self) -> impl Iterator<Item = WeightedEdge> + '_ {
        self.edges
            .iter()
            .zip(&self.weights)
            .map(|(&(u, v), &w)| WeightedEdge::new(u, v, w))
    }

    fn weight(&mut self) -> f64 {
        if self.opts.heavy_fraction > 0.0 && self.rng.random_bool(self.opts.heavy_fraction) {
            return self.max_weight;
        }
        if self.max_weight == 1.0 {
            return 1.0;
        }
        let w = self.rng.random_range(1.0..=self.max_weight);
        ((w * 1000.0).round() / 1000.0).clamp(1.0, self.max_weight)
    }

    pub fn insert(&mut self) -> Option<Update> {
        if self.edges.len() == self.capacity() {
            return None;
        }
        let (u, v) = loop {
            let a = self.rng.random_range(0..self.n);
            let b = self.rng.random_range(0..self.n);
            if a == b {
                continue;
            }
            let key = (a.min(b), a.max(b));
            if !self.edges.contains(&key) {
                break (a, b);
            }
        };
        let w = self.weight();
        self.edges.insert((u.min(v), u.max(v)));
        self.weights.push(w);
        Some(Update::insert(u, v, w))
    }

    pub fn delete(&mut self) -> Option<Update> {
        if self.edges.is_empty() {
            return None;
        }
        let idx = self.rng.random_range(0..self.edges.len());
        let (u, v) = self.edges.swap_remove_index(idx).expect("index in range");
        self.weights.swap_remove(idx);
        Some(Update::delete(u, v))
    }

    /// Next update, or `None` once a pure insertion stream has filled the
    /// graph.
    pub fn next_update(&mut self) -> Option<Update> {
        let want_insert = self.edges.len() <= self.opts.min_edges || self.rng.random_bool(self.opts.insert_bias);
        if want_insert {
            self.insert().or_else(|| {
                if self.opts.insert_bias >= 1.0 {
                    None
                } else {
                    self.delete()
                }
            })
        } else {
            self.delete().or_else(|| self.insert())
        }
    }
}

impl Iterator for RandomStream {
    type Item = Update;

    fn next(&mut self) -> Option<Update> {
        self.next_update()
    }
}

pub fn random_stream(n: usize, max_weight: f64, steps: usize, opts: StreamOptions, seed: u64) -> Vec<TraceRecord> {
    let mut records = vec![TraceRecord::Header { n, max_weight }];
    records.extend(RandomStream::new(n, max_weight, seed, opts).take(steps).map(TraceRecord::from));
    records
}

/// Grid workload built from a connectivity lower-bound construction: `side`
/// paths of length `side - 1` through a `side × side` grid whose
/// column-to-column links are permutations, plus a hub `s` adjacent to all of
/// column 0. Each batch replaces the permutation between one pair of
/// columns, then probes one pair `(u, v)`, `u` in column 0, by deleting
/// `(u, s)`, inserting `(u, v)` with weight `W`, checkpointing and undoing.
pub fn grid_adversary(side: usize, batches: usize, max_weight: f64, seed: u64) -> Vec<TraceRecord> {
    assert!(side >= 2, "grid side must be at least 2");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let at = |row: usize, col: usize| row * side + col;
    let hub = side * side;
    let n = hub + 1;
    let mut records = vec![TraceRecord::Header { n, max_weight }];
    let insert = |u, v, w| TraceRecord::Insert { u, v, w };

    // perm[c][row] is the row in column c + 1 linked to `row` in column c.
    let mut perm: Vec<Vec<usize>> = (0..side - 1)
        .map(|_| {
            let mut p: Vec<usize> = (0..side).collect();
            p.shuffle(&mut rng);
            p
        })
        .collect();
    for (c, p) in perm.iter().enumerate() {
        for (row, &to) in p.iter().enumerate() {
            records.push(insert(at(row, c), at(to, c + 1), 1.0));
        }
    }
    for row in 0..side {
        records.push(insert(at(row, 0), hub, 1.0));
    }

    for _ in 0..batches {
        let c = rng.random_range(0..side - 1);
        for (row, &to) in perm[c].iter().enumerate() {
            records.push(TraceRecord::Delete {
                u: at(row, c),
                v: at(to, c + 1),
            });
        }
        perm[c].shuffle(&mut rng);
        for (row, &to) in perm[c].iter().enumerate() {
            records.push(insert(at(row, c), at(to, c + 1), 1.0));
        }

        let row = rng.random_range(0..side);
        let u = at(row, 0);
        let col = rng.random_range(0..side);
        let linked = |x: usize| col == 1 && perm[0][row] == x / side || x == u;
        let candidates: Vec<usize> = (0..side).map(|r| at(r, col)).filter(|&x| !linked(x)).collect();
        let v = candidates[rng.random_range(0..candidates.len())];
        records.push(TraceRecord::Delete { u, v: hub });
        records.push(insert(u, v, max_weight));
        records.push(TraceRecord::Checkpoint);
        records.push(TraceRecord::Delete { u, v });
        records.push(insert(u, hub, 1.0));
    }
    records
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::trace_to_string;
    use dynmsf::DynamicGraph;

    fn replay(records: &[TraceRecord]) -> Vec<usize> {
        let TraceRecord::Header { n, max_weight } = records[0] else { panic!("no header") };
        let mut g = DynamicGraph::empty(n, max_weight).unwrap();
        let mut edge_counts = Vec::new();
        for r in &records[1..] {
            if let Some(u) = r.as_update() {
                g.apply(u).unwrap();
                edge_counts.push(g.m());
            }
        }
        edge_counts
    }

    #[test]
    fn zero_steps_is_header_only() {
        let t = random_stream(10, 4.0, 0, StreamOptions::default(), 1);
        assert_eq!(t, vec![TraceRecord::Header { n: 10, max_weight: 4.0 }]);
    }

    #[test]
    fn full_bias_only_inserts() {
        let opts = StreamOptions {
            insert_bias: 1.0,
            ..Default::default()
        };
        let t = random_stream(8, 2.0, 100, opts, 3);
        // 28 possible pairs, then the stream stops.
        assert_eq!(t.len(), 1 + 28);
        assert!(t[1..].iter().all(|r| matches!(r, TraceRecord::Insert { .. })));
        replay(&t);
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = trace_to_string(&random_stream(30, 8.0, 500, StreamOptions::default(), 9));
        let b = trace_to_string(&random_stream(30, 8.0, 500, StreamOptions::default(), 9));
        let c = trace_to_string(&random_stream(30, 8.0, 500, StreamOptions::default(), 10));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn random_stream_replays_cleanly() {
        let opts = StreamOptions {
            insert_bias: 0.4,
            min_edges: 20,
            heavy_fraction: 0.3,
        };
        let t = random_stream(15, 4.0, 3000, opts, 5);
        let counts = replay(&t);
        assert!(counts[25..].iter().all(|&m| m >= 20));
        for r in &t {
            if let TraceRecord::Insert { w, .. } = r {
                assert!((1.0..=4.0).contains(w));
            }
        }
    }

    #[test]
    fn tiny_grid_record_count() {
        let t = grid_adversary(2, 1, 5.0, 0);
        let updates = t.iter().filter(|r| r.as_update().is_some()).count();
        assert!(updates <= 12, "{updates}");
        assert_eq!(t.iter().filter(|r| **r == TraceRecord::Checkpoint).count(), 1);
    }

    #[test]
    fn grid_stays_simple_and_linear() {
        for seed in 0..20 {
            let side = 6;
            let t = grid_adversary(side, 30, 37.0, seed);
            let counts = replay(&t);
            let n = side * side + 1;
            let settled = &counts[side * side..];
            assert!(settled.iter().all(|&m| m >= n - 2 * side && m <= n));
        }
    }
}
