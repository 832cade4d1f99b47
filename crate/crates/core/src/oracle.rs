//! Brute-force ground truth: Kruskal MSF weight, exact component counts and
//! the level decomposition that turns per-threshold component counts into an
//! MSF weight.

use crate::error::{Error, Result};
use crate::graph::{DynamicGraph, VertexId};

/// Geometric weight thresholds `1 = ℓ_0 < ℓ_1 < ... < ℓ_r` with ratio `1 + eps`
/// and `ℓ_r >= W`.
///
/// Thresholds are built by repeated multiplication and the increments are
/// stored as `ℓ_{i+1} - ℓ_i`, so the increments sum to `ℓ_r - 1` up to a
/// handful of ulps.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelScheme {
    eps: f64,
    max_weight: f64,
    thresholds: Vec<f64>,
    increments: Vec<f64>,
}

impl LevelScheme {
    pub fn new(eps: f64, max_weight: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
        }
        if !(max_weight >= 1.0 && max_weight.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "maximum weight must be >= 1, got {max_weight}"
            )));
        }
        let base = 1.0 + eps;
        let mut thresholds = vec![1.0];
        let mut top = 1.0;
        while top < max_weight {
            top *= base;
            thresholds.push(top);
        }
        let increments = thresholds.windows(2).map(|w| w[1] - w[0]).collect();
        Ok(LevelScheme {
            eps,
            max_weight,
            thresholds,
            increments,
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn max_weight(&self) -> f64 {
        self.max_weight
    }

    /// Index of the top level, `r`.
    pub fn top(&self) -> usize {
        self.thresholds.len() - 1
    }

    pub fn levels(&self) -> usize {
        self.thresholds.len()
    }

    /// `ℓ_0 ..= ℓ_r`.
    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// `λ_0 .. λ_{r-1}` with `λ_i = ℓ_{i+1} - ℓ_i`.
    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// Smallest level whose threshold is at least `w`.
    pub fn level_of(&self, w: f64) -> usize {
        self.thresholds
            .iter()
            .position(|&l| w <= l)
            .unwrap_or(self.top())
    }

    /// MSF weight implied by per-level component counts `c_0 ..= c_r` on `n`
    /// vertices, evaluated in Kruskal order:
    /// `n - c_0 + Σ ℓ_{i+1} (c_i - c_{i+1})`.
    ///
    /// Algebraically identical to [`LevelScheme::combine_expanded`], but exact
    /// when neighbouring counts coincide (an empty graph yields exactly 0).
    pub fn combine(&self, n: usize, counts: &[f64]) -> f64 {
        assert_eq!(counts.len(), self.levels(), "one count per level");
        let mut total = n as f64 - counts[0];
        for i in 0..self.top() {
            total += self.thresholds[i + 1] * (counts[i] - counts[i + 1]);
        }
        total
    }

    /// `n - c_r ℓ_r + Σ λ_i c_i`.
    pub fn combine_expanded(&self, n: usize, counts: &[f64]) -> f64 {
        assert_eq!(counts.len(), self.levels(), "one count per level");
        let r = self.top();
        let mut total = n as f64 - counts[r] * self.thresholds[r];
        for (lambda, c) in self.increments.iter().zip(counts) {
            total += lambda * c;
        }
        total
    }
}

/// Union-find with union by size and path compression.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
    sets: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
            sets: n,
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    /// Merges the sets of `a` and `b`; false if they were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        self.sets -= 1;
        true
    }

    pub fn set_size(&mut self, x: usize) -> usize {
        let root = self.find(x);
        self.size[root]
    }

    pub fn sets(&self) -> usize {
        self.sets
    }
}

fn sorted_edges(g: &DynamicGraph) -> Vec<(f64, VertexId, VertexId)> {
    let mut edges: Vec<_> = g.edges().map(|e| (e.w, e.u, e.v)).collect();
    edges.sort_by(|a, b| a.0.total_cmp(&b.0));
    edges
}

/// Exact MSF weight (0 for an edgeless graph).
pub fn kruskal_msf_weight(g: &DynamicGraph) -> f64 {
    let mut uf = UnionFind::new(g.n());
    sorted_edges(g)
        .into_iter()
        .filter(|&(_, u, v)| uf.union(u, v))
        .map(|(w, _, _)| w)
        .sum()
}

/// Component label for every vertex, plus component sizes (full BFS).
pub fn component_labels(g: &DynamicGraph) -> (Vec<usize>, Vec<usize>) {
    const UNSEEN: usize = usize::MAX;
    let mut label = vec![UNSEEN; g.n()];
    let mut sizes = Vec::new();
    let mut queue = Vec::new();
    for s in 0..g.n() {
        if label[s] != UNSEEN {
            continue;
        }
        let id = sizes.len();
        label[s] = id;
        queue.clear();
        queue.push(s);
        let mut head = 0;
        while head < queue.len() {
            let x = queue[head];
            head += 1;
            for y in g.neighbor_ids(x) {
                if label[y] == UNSEEN {
                    label[y] = id;
                    queue.push(y);
                }
            }
        }
        sizes.push(queue.len());
    }
    (label, sizes)
}

/// Number of connected components, isolated vertices included.
pub fn exact_ncc(g: &DynamicGraph) -> usize {
    component_labels(g).1.len()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmallCcCount {
    /// Components with at most `cap` vertices.
    pub count: usize,
    /// `histogram[s]` = number of components of exactly `s` vertices, for
    /// `1 <= s <= cap` (index 0 unused).
    pub histogram: Vec<usize>,
}

pub fn exact_small_cc(g: &DynamicGraph, cap: usize) -> SmallCcCount {
    let mut histogram = vec![0; cap + 1];
    for size in component_labels(g).1 {
        if size <= cap {
            histogram[size] += 1;
        }
    }
    SmallCcCount {
        count: histogram.iter().sum(),
        histogram,
    }
}

/// Exact `c^(i)` for every level: components of the subgraph with edges of
/// weight at most `ℓ_i`.
pub fn level_component_counts(g: &DynamicGraph, scheme: &LevelScheme) -> Vec<usize> {
    let edges = sorted_edges(g);
    let mut uf = UnionFind::new(g.n());
    let mut next = 0;
    scheme
        .thresholds()
        .iter()
        .map(|&limit| {
            while next < edges.len() && edges[next].0 <= limit {
                uf.union(edges[next].1, edges[next].2);
                next += 1;
            }
            uf.sets()
        })
        .collect()
}

/// The level-decomposition value `X` evaluated with exact component counts.
///
/// For weights in `[1, W]` it satisfies `M <= X <= (1 + eps) M`.
pub fn formula_x(g: &DynamicGraph, scheme: &LevelScheme) -> f64 {
    let counts: Vec<f64> = level_component_counts(g, scheme)
        .into_iter()
        .map(|c| c as f64)
        .collect();
    scheme.combine(g.n(), &counts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactSnapshot {
    pub msf_weight: f64,
    pub level_counts: Vec<usize>,
    pub ncc: usize,
    pub nis: usize,
}

pub fn snapshot(g: &DynamicGraph, scheme: &LevelScheme) -> ExactSnapshot {
    ExactSnapshot {
        msf_weight: kruskal_msf_weight(g),
        level_counts: level_component_counts(g, scheme),
        ncc: exact_ncc(g),
        nis: g.nis(),
    }
}
