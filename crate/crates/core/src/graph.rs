//! Dynamic simple weighted graph on a fixed vertex set.
//!
//! Every estimator in the crate observes the graph through this type. Besides
//! adjacency it keeps per-vertex degrees in a [`NonZeroSampler`], which makes
//! the number of non-isolated vertices (`nis`) an O(1) read and lets callers
//! draw a uniformly random non-isolated vertex in O(1).
//!
//! Adjacency is a compact list of neighbour ids per vertex, stored inline for
//! small degrees so that a BFS step usually touches one cache line. Weights
//! and list positions live in a hash map keyed by the edge, which gives O(1)
//! expected insertion, deletion and weight lookup.

use rand::Rng;
use rustc_hash::FxHashMap;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::sampler::NonZeroSampler;

pub type VertexId = usize;

type Neighbors = SmallVec<[u32; 6]>;

/// Weight of an edge `{lo, hi}` (`lo < hi`) and its slot in each endpoint's
/// neighbour list.
#[derive(Debug, Clone, Copy)]
struct EdgeEntry {
    w: f64,
    slot_lo: u32,
    slot_hi: u32,
}

fn edge_key(u: VertexId, v: VertexId) -> (u32, u32) {
    (u.min(v) as u32, u.max(v) as u32)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedEdge {
    pub u: VertexId,
    pub v: VertexId,
    pub w: f64,
}

impl WeightedEdge {
    pub fn new(u: VertexId, v: VertexId, w: f64) -> Self {
        WeightedEdge { u, v, w }
    }
}

impl From<(VertexId, VertexId, f64)> for WeightedEdge {
    fn from((u, v, w): (VertexId, VertexId, f64)) -> Self {
        WeightedEdge { u, v, w }
    }
}

/// An edge update. Deletions are keyed by endpoints only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Update {
    Insert(WeightedEdge),
    Delete { u: VertexId, v: VertexId },
}

impl Update {
    pub fn insert(u: VertexId, v: VertexId, w: f64) -> Self {
        Update::Insert(WeightedEdge { u, v, w })
    }

    pub fn delete(u: VertexId, v: VertexId) -> Self {
        Update::Delete { u, v }
    }

    pub fn endpoints(&self) -> (VertexId, VertexId) {
        match *self {
            Update::Insert(e) => (e.u, e.v),
            Update::Delete { u, v } => (u, v),
        }
    }
}

/// Notification returned by [`DynamicGraph::apply`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Applied {
    /// Timestamp of the update, starting at 1.
    pub timestamp: u64,
    pub u: VertexId,
    pub v: VertexId,
    /// Weight of the inserted or deleted edge.
    pub w: f64,
    pub inserted: bool,
    pub nis_before: usize,
    pub nis_after: usize,
}

#[derive(Debug, Clone)]
pub struct DynamicGraph {
    max_weight: f64,
    adj: Vec<Neighbors>,
    edge_index: FxHashMap<(u32, u32), EdgeEntry>,
    self_loop: Vec<bool>,
    allow_self_loops: bool,
    degrees: NonZeroSampler,
    edges: usize,
    self_loops: usize,
    min_edges_seen: usize,
    clock: u64,
}

impl DynamicGraph {
    /// Edgeless graph on `n` vertices accepting weights in `[1, max_weight]`.
    pub fn empty(n: usize, max_weight: f64) -> Result<Self> {
        if !(max_weight >= 1.0 && max_weight.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "maximum weight must be a finite value >= 1, got {max_weight}"
            )));
        }
        if n > u32::MAX as usize {
            return Err(Error::InvalidParameter(format!("at most {} vertices supported", u32::MAX)));
        }
        Ok(DynamicGraph {
            max_weight,
            adj: vec![Neighbors::new(); n],
            edge_index: FxHashMap::default(),
            self_loop: vec![false; n],
            allow_self_loops: false,
            degrees: NonZeroSampler::new(n),
            edges: 0,
            self_loops: 0,
            min_edges_seen: 0,
            clock: 0,
        })
    }

    /// Graph holding exactly `initial_edges`.
    pub fn new<I, E>(n: usize, max_weight: f64, initial_edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = E>,
        E: Into<WeightedEdge>,
    {
        let mut g = Self::empty(n, max_weight)?;
        for e in initial_edges {
            let e = e.into();
            g.check_edge(&e)?;
            if g.has_edge(e.u, e.v) {
                return Err(Error::DuplicateEdge { u: e.u, v: e.v });
            }
            g.link(e.u, e.v, e.w);
        }
        g.min_edges_seen = g.edges;
        Ok(g)
    }

    /// Enables internal self-loops, used only by level subgraphs.
    pub(crate) fn with_self_loops(mut self) -> Self {
        self.allow_self_loops = true;
        self
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn max_weight(&self) -> f64 {
        self.max_weight
    }

    /// Number of edges, counting internal self-loops.
    pub fn m(&self) -> usize {
        self.edges + self.self_loops
    }

    /// Smallest edge count observed since construction.
    pub fn min_edges_seen(&self) -> usize {
        self.min_edges_seen
    }

    /// Number of non-isolated vertices.
    pub fn nis(&self) -> usize {
        self.degrees.nonzero_count()
    }

    pub fn timestamp(&self) -> u64 {
        self.clock
    }

    /// Degree of `u`; a self-loop contributes 1.
    pub fn degree(&self, u: VertexId) -> usize {
        self.degrees.value(u) as usize
    }

    /// Number of distinct neighbours of `u`, excluding `u` itself.
    pub fn neighbor_count(&self, u: VertexId) -> usize {
        self.adj[u].len()
    }

    /// Cache hint for the adjacency record of `u`; has no observable effect.
    pub fn prefetch_vertex(&self, u: VertexId) {
        if let Some(list) = self.adj.get(u) {
            prefetch(list);
            prefetch(self.degrees.position_slot(u));
        }
    }

    /// Neighbour ids of `u`, without weights.
    pub fn neighbor_ids(&self, u: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.adj[u].iter().map(|&v| v as VertexId)
    }

    pub fn neighbors(&self, u: VertexId) -> impl Iterator<Item = (VertexId, f64)> + '_ {
        self.neighbor_ids(u).map(move |v| (v, self.edge_index[&edge_key(u, v)].w))
    }

    pub fn has_self_loop(&self, u: VertexId) -> bool {
        self.self_loop[u]
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        if u == v {
            return self.self_loop.get(u).copied().unwrap_or(false);
        }
        u < self.n() && v < self.n() && self.edge_index.contains_key(&edge_key(u, v))
    }

    pub fn weight(&self, u: VertexId, v: VertexId) -> Option<f64> {
        if u == v || u >= self.n() || v >= self.n() {
            return None;
        }
        self.edge_index.get(&edge_key(u, v)).map(|e| e.w)
    }

    /// Every non-loop edge once, with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = WeightedEdge> + '_ {
        (0..self.n()).flat_map(move |u| {
            self.neighbors(u)
                .filter(move |&(v, _)| u < v)
                .map(move |(v, w)| WeightedEdge { u, v, w })
        })
    }

    /// Degree array viewed as a non-zero sampler.
    pub fn nonisolated(&self) -> &NonZeroSampler {
        &self.degrees
    }

    /// A uniformly random non-isolated vertex.
    pub fn sample_nonisolated<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<VertexId> {
        self.degrees.sample(rng)
    }

    pub fn apply(&mut self, update: Update) -> Result<Applied> {
        match update {
            Update::Insert(e) => self.insert(e.u, e.v, e.w),
            Update::Delete { u, v } => self.delete(u, v),
        }
    }

    pub fn insert(&mut self, u: VertexId, v: VertexId, w: f64) -> Result<Applied> {
        let e = WeightedEdge { u, v, w };
        self.check_edge(&e)?;
        if self.has_edge(u, v) {
            return Err(Error::EdgeAlreadyPresent { u, v });
        }
        let nis_before = self.nis();
        if u == v {
            self.self_loop[u] = true;
            self.self_loops += 1;
            self.degrees.update(u, 1);
        } else {
            self.link(u, v, w);
        }
        Ok(self.finish(u, v, w, true, nis_before))
    }

    /// Removes the edge `{u, v}` and reports its weight.
    pub fn delete(&mut self, u: VertexId, v: VertexId) -> Result<Applied> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        let nis_before = self.nis();
        let w = if u == v {
            if !self.self_loop[u] {
                return Err(Error::EdgeNotFound { u, v });
            }
            self.self_loop[u] = false;
            self.self_loops -= 1;
            self.degrees.update(u, -1);
            1.0
        } else {
            let w = self.unlink(u, v).ok_or(Error::EdgeNotFound { u, v })?;
            self.degrees.update(u, -1);
            self.degrees.update(v, -1);
            self.edges -= 1;
            w
        };
        Ok(self.finish(u, v, w, false, nis_before))
    }

    fn finish(&mut self, u: VertexId, v: VertexId, w: f64, inserted: bool, nis_before: usize) -> Applied {
        self.clock += 1;
        self.min_edges_seen = self.min_edges_seen.min(self.m());
        Applied {
            timestamp: self.clock,
            u,
            v,
            w,
            inserted,
            nis_before,
            nis_after: self.nis(),
        }
    }

    fn link(&mut self, u: VertexId, v: VertexId, w: f64) {
        let (lo, hi) = edge_key(u, v);
        let entry = EdgeEntry {
            w,
            slot_lo: self.adj[lo as usize].len() as u32,
            slot_hi: self.adj[hi as usize].len() as u32,
        };
        self.adj[lo as usize].push(hi);
        self.adj[hi as usize].push(lo);
        self.edge_index.insert((lo, hi), entry);
        self.degrees.update(u, 1);
        self.degrees.update(v, 1);
        self.edges += 1;
    }

    /// Drops `{u, v}` from both neighbour lists by swap-removal, repointing
    /// the entries of the edges that moved.
    fn unlink(&mut self, u: VertexId, v: VertexId) -> Option<f64> {
        let (lo, hi) = edge_key(u, v);
        let entry = self.edge_index.remove(&(lo, hi))?;
        for (at, slot) in [(lo, entry.slot_lo), (hi, entry.slot_hi)] {
            let list = &mut self.adj[at as usize];
            list.swap_remove(slot as usize);
            if let Some(&moved) = list.get(slot as usize) {
                let key = (at.min(moved), at.max(moved));
                let e = self.edge_index.get_mut(&key).expect("listed edge is indexed");
                if at < moved {
                    e.slot_lo = slot;
                } else {
                    e.slot_hi = slot;
                }
            }
        }
        Some(entry.w)
    }

    /// Full consistency check of neighbour lists against the edge index.
    pub fn check_index(&self) -> bool {
        let listed: usize = self.adj.iter().map(|l| l.len()).sum();
        listed == 2 * self.edge_index.len()
            && self.edge_index.iter().all(|(&(lo, hi), e)| {
                self.adj[lo as usize].get(e.slot_lo as usize) == Some(&hi)
                    && self.adj[hi as usize].get(e.slot_hi as usize) == Some(&lo)
            })
    }

    fn check_vertex(&self, u: VertexId) -> Result<()> {
        if u >= self.n() {
            return Err(Error::VertexOutOfRange { vertex: u, n: self.n() });
        }
        Ok(())
    }

    fn check_edge(&self, e: &WeightedEdge) -> Result<()> {
        self.check_vertex(e.u)?;
        self.check_vertex(e.v)?;
        if e.u == e.v {
            if !self.allow_self_loops {
                return Err(Error::SelfLoopForbidden(e.u));
            }
            return Ok(());
        }
        if !(e.w >= 1.0 && e.w <= self.max_weight) {
            return Err(Error::WeightOutOfRange {
                weight: e.w,
                max_weight: self.max_weight,
            });
        }
        Ok(())
    }
}

/// Result of a size-capped breadth-first search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BfsResult {
    /// The whole component, in discovery order.
    Completed { size: usize, vertices: Vec<VertexId> },
    /// The component has more vertices than the cap.
    Exceeded,
}

impl BfsResult {
    pub fn size(&self) -> Option<usize> {
        match self {
            BfsResult::Completed { size, .. } => Some(*size),
            BfsResult::Exceeded => None,
        }
    }
}

const EMPTY_SLOT: u32 = u32::MAX;

/// Hints the CPU to pull `x` into cache; a no-op off x86-64.
#[inline(always)]
fn prefetch<T>(x: &T) {
    #[cfg(target_arch = "x86_64")]
    // SAFETY: prefetching is a hint and never faults, whatever the address.
    unsafe {
        use std::arch::x86_64::{_mm_prefetch, _MM_HINT_T0};
        _mm_prefetch::<_MM_HINT_T0>((x as *const T).cast());
    }
    #[cfg(not(target_arch = "x86_64"))]
    let _ = x;
}

/// Reusable scratch space for capped BFS.
///
/// The visited set is a linear-probing table sized by the cap rather than by
/// `n`, so a search touches O(cap) scratch memory and resetting it costs
/// O(vertices found).
#[derive(Debug, Clone)]
pub struct BoundedBfs {
    n: usize,
    table: Vec<u32>,
    shift: u32,
    used: Vec<usize>,
    queue: Vec<VertexId>,
    work: u64,
}

impl BoundedBfs {
    pub fn new(n: usize) -> Self {
        BoundedBfs {
            n,
            table: Vec::new(),
            shift: 64,
            used: Vec::new(),
            queue: Vec::new(),
            work: 0,
        }
    }

    /// Vertex visits plus neighbour scans since construction.
    pub fn work(&self) -> u64 {
        self.work
    }

    fn prepare(&mut self, cap: usize) {
        for &slot in &self.used {
            self.table[slot] = EMPTY_SLOT;
        }
        self.used.clear();
        // Load factor stays below 1/2 with at most cap + 1 entries.
        let want = (2 * (cap.min(self.n) + 1)).next_power_of_two().max(16);
        if want > self.table.len() {
            self.table = vec![EMPTY_SLOT; want];
            self.shift = 64 - want.trailing_zeros();
        }
    }

    fn slot_of(&self, v: VertexId) -> usize {
        ((v as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) >> self.shift) as usize
    }

    /// Inserts `v` into the visited set; false if it was already there.
    fn mark(&mut self, v: VertexId) -> bool {
        let mask = self.table.len() - 1;
        let mut i = self.slot_of(v);
        loop {
            match self.table[i] {
                EMPTY_SLOT => {
                    self.table[i] = v as u32;
                    self.used.push(i);
                    return true;
                }
                x if x as VertexId == v => return false,
                _ => i = (i + 1) & mask,
            }
        }
    }

    /// Explores the component of `start` until more than `cap` vertices are
    /// found. Returns the component (in discovery order) if it has at most
    /// `cap` vertices, `None` otherwise.
    ///
    /// A visited vertex with more than `cap` neighbours ends the search at
    /// once, so each visited vertex scans at most `cap` neighbours.
    pub fn run(&mut self, g: &DynamicGraph, start: VertexId, cap: usize) -> Option<&[VertexId]> {
        debug_assert!(cap >= 1);
        self.prepare(cap);
        self.queue.clear();
        self.queue.push(start);
        self.mark(start);
        let mut head = 0;
        while head < self.queue.len() {
            let x = self.queue[head];
            head += 1;
            self.work += 1;
            if g.neighbor_count(x) > cap {
                return None;
            }
            for &y in &g.adj[x] {
                let y = y as VertexId;
                self.work += 1;
                if self.mark(y) {
                    prefetch(&g.adj[y]);
                    self.queue.push(y);
                    if self.queue.len() > cap {
                        return None;
                    }
                }
            }
        }
        Some(&self.queue)
    }

    /// Whether `v` was reached by the most recent run.
    pub fn reached(&self, v: VertexId) -> bool {
        if self.table.is_empty() {
            return false;
        }
        let mask = self.table.len() - 1;
        let mut i = self.slot_of(v);
        loop {
            match self.table[i] {
                EMPTY_SLOT => return false,
                x if x as VertexId == v => return true,
                _ => i = (i + 1) & mask,
            }
        }
    }
}

/// One-shot capped BFS; allocates its own scratch space.
pub fn bounded_bfs(g: &DynamicGraph, start: VertexId, cap: usize) -> BfsResult {
    let mut bfs = BoundedBfs::new(g.n());
    match bfs.run(g, start, cap) {
        Some(vertices) => BfsResult::Completed {
            size: vertices.len(),
            vertices: vertices.to_vec(),
        },
        None => BfsResult::Exceeded,
    }
}
