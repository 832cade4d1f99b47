//! Deterministic dynamic counting of small connected components.
//!
//! The counter keeps the exact number of components with at most
//! `K = ⌊1/eps⌋` vertices. Components larger than `K` number at most
//! `eps * nis`, so the count is an estimate of `ncc` with additive error
//! `eps * nis`. Each update runs three BFS searches capped at `K` vertices,
//! for `O(K²)` worst-case work.

use crate::error::{Error, Result};
use crate::graph::{Applied, BoundedBfs, DynamicGraph, Update, VertexId};

/// `⌊1/eps⌋`, tolerant of `1/eps` landing a hair below an integer.
pub fn size_cap(eps: f64) -> usize {
    (1.0 / eps + 1e-9).floor() as usize
}

#[derive(Debug, Clone)]
pub struct SmallCcCounter {
    eps: f64,
    cap: usize,
    count: usize,
    histogram: Vec<usize>,
    bfs: BoundedBfs,
    before: Vec<VertexId>,
    after: Vec<VertexId>,
    last_update_work: u64,
}

impl SmallCcCounter {
    /// Counts small components of `g` from scratch in `O(n/eps)`.
    ///
    /// Vertices are scanned in index order; a search from an unvisited
    /// vertex stops on reaching `K + 1` new vertices, on touching a vertex
    /// visited by an earlier search, or on exhausting its component. Only
    /// the last outcome identifies a small component.
    pub fn new(g: &DynamicGraph, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eps must lie in (0, 1], got {eps}"
            )));
        }
        let cap = size_cap(eps);
        let n = g.n();
        const UNVISITED: usize = usize::MAX;
        let mut owner = vec![UNVISITED; n];
        let mut histogram = vec![0; cap + 1];
        let mut queue = Vec::with_capacity(cap + 1);
        for start in 0..n {
            if owner[start] != UNVISITED {
                continue;
            }
            queue.clear();
            queue.push(start);
            owner[start] = start;
            let mut head = 0;
            let mut small = true;
            'search: while head < queue.len() {
                let x = queue[head];
                head += 1;
                if g.neighbor_count(x) > cap {
                    small = false;
                    break;
                }
                for y in g.neighbor_ids(x) {
                    match owner[y] {
                        UNVISITED => {
                            owner[y] = start;
                            queue.push(y);
                            if queue.len() > cap {
                                small = false;
                                break 'search;
                            }
                        }
                        o if o == start => {}
                        _ => {
                            small = false;
                            break 'search;
                        }
                    }
                }
            }
            if small {
                histogram[queue.len()] += 1;
            }
        }
        Ok(SmallCcCounter {
            eps,
            cap,
            count: histogram.iter().sum(),
            histogram,
            bfs: BoundedBfs::new(n),
            before: Vec::with_capacity(cap),
            after: Vec::with_capacity(cap),
            last_update_work: 0,
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// The size threshold `K`.
    pub fn cap(&self) -> usize {
        self.cap
    }

    /// Current estimate: the number of components with at most `K` vertices.
    pub fn estimate(&self) -> usize {
        self.count
    }

    /// Per-size component counts from preprocessing (index = size).
    pub fn initial_histogram(&self) -> &[usize] {
        &self.histogram
    }

    /// BFS vertex visits plus neighbour scans spent by the last update.
    pub fn last_update_work(&self) -> u64 {
        self.last_update_work
    }

    pub fn apply(&mut self, g: &mut DynamicGraph, update: Update) -> Result<Applied> {
        match update {
            Update::Insert(e) => self.on_insert(g, e.u, e.v, e.w),
            Update::Delete { u, v } => self.on_delete(g, u, v),
        }
    }

    /// Inserts `(u, v, w)` into `g`, searching from both endpoints before the
    /// insertion and from `u` after it.
    pub fn on_insert(&mut self, g: &mut DynamicGraph, u: VertexId, v: VertexId, w: f64) -> Result<Applied> {
        check_endpoints(g, u, v)?;
        if u == v {
            // Internal self-loops never change connectivity.
            return g.insert(u, v, w);
        }
        let work0 = self.bfs.work();
        let u_small = capture(&mut self.bfs, g, u, self.cap, &mut self.before);
        let v_small = self.bfs.run(g, v, self.cap).is_some();
        let applied = g.insert(u, v, w)?;
        let merged_small = capture(&mut self.bfs, g, u, self.cap, &mut self.after);
        let delta: isize = match (u_small, v_small) {
            (false, false) => 0,
            (true, false) | (false, true) => -1,
            (true, true) if !merged_small => -2,
            // Same vertex set on both sides: u and v were already connected.
            (true, true) if self.after == self.before => 0,
            (true, true) => -1,
        };
        self.shift(delta);
        self.last_update_work = self.bfs.work() - work0;
        Ok(applied)
    }

    /// Deletes `{u, v}` from `g`, searching from `u` before the deletion and
    /// from both endpoints after it.
    pub fn on_delete(&mut self, g: &mut DynamicGraph, u: VertexId, v: VertexId) -> Result<Applied> {
        check_endpoints(g, u, v)?;
        if u == v {
            return g.delete(u, v);
        }
        let work0 = self.bfs.work();
        let joined_small = capture(&mut self.bfs, g, u, self.cap, &mut self.before);
        let applied = g.delete(u, v)?;
        let u_small = capture(&mut self.bfs, g, u, self.cap, &mut self.after);
        let v_small = self.bfs.run(g, v, self.cap).is_some();
        let delta: isize = match (u_small, v_small) {
            (false, false) => 0,
            (true, false) | (false, true) => 1,
            (true, true) if !joined_small => 2,
            // Still connected: the component at u is unchanged.
            (true, true) if self.after == self.before => 0,
            (true, true) => 1,
        };
        self.shift(delta);
        self.last_update_work = self.bfs.work() - work0;
        Ok(applied)
    }

    fn shift(&mut self, delta: isize) {
        self.count = self
            .count
            .checked_add_signed(delta)
            .expect("small-component count went negative");
    }
}

fn check_endpoints(g: &DynamicGraph, u: VertexId, v: VertexId) -> Result<()> {
    for x in [u, v] {
        if x >= g.n() {
            return Err(Error::VertexOutOfRange { vertex: x, n: g.n() });
        }
    }
    Ok(())
}

/// Runs a capped BFS from `start`; on success stores the sorted component in
/// `out` and returns true.
fn capture(bfs: &mut BoundedBfs, g: &DynamicGraph, start: VertexId, cap: usize, out: &mut Vec<VertexId>) -> bool {
    out.clear();
    match bfs.run(g, start, cap) {
        Some(component) => {
            out.extend_from_slice(component);
            out.sort_unstable();
            true
        }
        None => false,
    }
}
