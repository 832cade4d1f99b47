//! Dynamic (1 + eps)-approximation of the minimum spanning forest weight.
//!
//! Edge weights lie in `[1, W]`. With thresholds `ℓ_i = (1 + eps/2)^i`, the
//! MSF weight equals `n - c_r ℓ_r + Σ λ_i c_i` up to a factor `1 + eps/2`,
//! where `c_i` is the number of components of the subgraph of edges with
//! weight at most `ℓ_i`. One component-count estimator runs per level.
//!
//! Every edge weighs at most `W <= ℓ_r`, so the top level graph is the full
//! graph and serves as the master copy.
//!
//! The deterministic mode counts small components exactly. The randomized
//! mode runs a phase estimator per level with T-parameter `nis(G)`; levels
//! that an update does not touch still see one self-loop insertion and one
//! deletion so that their T-parameter tracks the full graph.

use crate::det_cc::SmallCcCounter;
use crate::error::{Error, Result};
use crate::graph::{Applied, DynamicGraph, Update, VertexId};
use crate::oracle::LevelScheme;
use crate::rand_cc::{seeded_rng, PhaseEstimator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Deterministic,
    /// `failure_prob` is the overall per-phase failure probability `p'`;
    /// `None` picks `n^-2`.
    Randomized { failure_prob: Option<f64>, seed: u64 },
}

impl Mode {
    pub fn randomized(seed: u64) -> Self {
        Mode::Randomized {
            failure_prob: None,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
enum Counter {
    Det(SmallCcCounter),
    Rand(PhaseEstimator),
}

impl Counter {
    fn estimate(&self) -> f64 {
        match self {
            Counter::Det(c) => c.estimate() as f64,
            Counter::Rand(e) => e.estimate(),
        }
    }
}

#[derive(Debug, Clone)]
struct Level {
    graph: DynamicGraph,
    counter: Counter,
}

/// One T-parameter handed to a level estimator, with the level's `nis` at
/// that moment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TParamRecord {
    pub level: usize,
    pub t: u64,
    pub level_nis: usize,
}

#[derive(Debug, Clone)]
pub struct MsfEstimator {
    eps: f64,
    mode: Mode,
    scheme: LevelScheme,
    levels: Vec<Level>,
    level_eps: f64,
    level_failure_prob: Option<f64>,
    counts: Vec<f64>,
    estimate: f64,
    t_log: Option<Vec<TParamRecord>>,
}

impl MsfEstimator {
    /// Builds the estimator for the graph `g0` with weights in `[1, max_weight]`.
    pub fn new(g0: &DynamicGraph, eps: f64, max_weight: f64, mode: Mode) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidParameter(format!("eps must lie in (0, 1], got {eps}")));
        }
        let full = DynamicGraph::new(g0.n(), max_weight, g0.edges())?;
        let scheme = LevelScheme::new(eps / 2.0, max_weight)?;
        let n = full.n();
        let (level_eps, level_failure_prob) = match mode {
            Mode::Deterministic => (eps / (12.0 * max_weight), None),
            Mode::Randomized { failure_prob, .. } => {
                let p = failure_prob.unwrap_or_else(|| (n.max(2) as f64).powi(-2));
                if !(p > 0.0 && p < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "failure probability must lie in (0, 1), got {p}"
                    )));
                }
                (eps / (24.0 * max_weight), Some(p / scheme.levels() as f64))
            }
        };
        let t0 = full.nis() as u64;
        let mut levels = Vec::with_capacity(scheme.levels());
        for (j, &threshold) in scheme.thresholds().iter().enumerate() {
            let edges = full.edges().filter(|e| e.w <= threshold);
            let mut graph = DynamicGraph::new(n, max_weight, edges)?;
            let counter = match mode {
                Mode::Deterministic => Counter::Det(SmallCcCounter::new(&graph, level_eps)?),
                Mode::Randomized { seed, .. } => {
                    graph = graph.with_self_loops();
                    let p = level_failure_prob.expect("set for randomized mode");
                    Counter::Rand(PhaseEstimator::new(&graph, level_eps, p, t0, seeded_rng(seed, j as u64))?)
                }
            };
            levels.push(Level { graph, counter });
        }
        let mut est = MsfEstimator {
            eps,
            mode,
            scheme,
            levels,
            level_eps,
            level_failure_prob,
            counts: Vec::new(),
            estimate: 0.0,
            t_log: None,
        };
        est.refresh();
        Ok(est)
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn scheme(&self) -> &LevelScheme {
        &self.scheme
    }

    /// The full graph (the top level holds every edge).
    pub fn graph(&self) -> &DynamicGraph {
        &self.levels[self.scheme.top()].graph
    }

    /// Accuracy parameter handed to each level's component counter.
    pub fn level_eps(&self) -> f64 {
        self.level_eps
    }

    pub fn level_failure_prob(&self) -> Option<f64> {
        self.level_failure_prob
    }

    pub fn level_graph(&self, j: usize) -> &DynamicGraph {
        &self.levels[j].graph
    }

    /// Current component-count estimates `c̄_0 ..= c̄_r`.
    pub fn level_counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn level_estimator(&self, j: usize) -> Option<&PhaseEstimator> {
        match &self.levels[j].counter {
            Counter::Rand(e) => Some(e),
            Counter::Det(_) => None,
        }
    }

    pub fn estimate(&self) -> f64 {
        self.estimate
    }

    /// Starts (or stops) recording every T-parameter passed to the level
    /// estimators.
    pub fn record_t_params(&mut self, on: bool) {
        self.t_log = on.then(Vec::new);
    }

    pub fn t_params(&self) -> &[TParamRecord] {
        self.t_log.as_deref().unwrap_or(&[])
    }

    pub fn take_t_params(&mut self) -> Vec<TParamRecord> {
        self.t_log.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn insert(&mut self, u: VertexId, v: VertexId, w: f64) -> Result<Applied> {
        self.update(Update::insert(u, v, w))
    }

    pub fn delete(&mut self, u: VertexId, v: VertexId) -> Result<Applied> {
        self.update(Update::delete(u, v))
    }

    /// Applies one edge update and refreshes the estimate. Invalid updates
    /// are rejected before any state changes.
    pub fn update(&mut self, update: Update) -> Result<Applied> {
        let (u, v) = update.endpoints();
        for l in &self.levels {
            l.graph.prefetch_vertex(u);
            l.graph.prefetch_vertex(v);
        }
        if u == v && u < self.graph().n() {
            // Level graphs accept internal loops; the caller's graph does not.
            return Err(Error::SelfLoopForbidden(u));
        }
        let top = self.scheme.top();
        // The top level validates the update before anything else changes.
        let (applied, level) = match self.mode {
            Mode::Deterministic => {
                let l = &mut self.levels[top];
                let Counter::Det(c) = &mut l.counter else { unreachable!() };
                let applied = c.apply(&mut l.graph, update)?;
                let level = self.scheme.level_of(applied.w);
                for l in &mut self.levels[level..top] {
                    let Counter::Det(c) = &mut l.counter else { unreachable!() };
                    c.apply(&mut l.graph, update)?;
                }
                (applied, level)
            }
            Mode::Randomized { .. } => {
                let applied = self.levels[top].graph.apply(update)?;
                let level = self.scheme.level_of(applied.w);
                self.update_randomized(update, &applied, level)?;
                (applied, level)
            }
        };
        debug_assert!(level <= top);
        self.refresh();
        Ok(applied)
    }

    fn update_randomized(&mut self, update: Update, applied: &Applied, level: usize) -> Result<()> {
        let top = self.scheme.top();
        let t = self.graph().nis() as u64;
        let u = applied.u;
        // The loop may make u non-isolated in the full graph for one step.
        let t_loop = t + u64::from(self.graph().degree(u) == 0);
        for (j, l) in self.levels.iter_mut().enumerate() {
            let Counter::Rand(e) = &mut l.counter else { unreachable!() };
            let mut feed = |g: &DynamicGraph, t: u64, log: &mut Option<Vec<TParamRecord>>| {
                if let Some(log) = log.as_mut() {
                    log.push(TParamRecord {
                        level: j,
                        t,
                        level_nis: g.nis(),
                    });
                }
                e.on_update(g, t)
            };
            if j >= level {
                if j < top {
                    l.graph.apply(update)?;
                }
                feed(&l.graph, t, &mut self.t_log)?;
            } else {
                l.graph.insert(u, u, 1.0)?;
                feed(&l.graph, t_loop, &mut self.t_log)?;
                l.graph.delete(u, u)?;
                feed(&l.graph, t, &mut self.t_log)?;
            }
        }
        Ok(())
    }

    fn refresh(&mut self) {
        self.counts.clear();
        self.counts.extend(self.levels.iter().map(|l| l.counter.estimate()));
        self.estimate = self.scheme.combine(self.graph().n(), &self.counts);
    }

    /// Checks that every level graph holds exactly the edges of `reference`
    /// with weight at most its threshold, and no self-loops. O(r m).
    pub fn levels_match(&self, reference: &DynamicGraph) -> bool {
        self.scheme.thresholds().iter().zip(&self.levels).all(|(&threshold, l)| {
            let expected = reference.edges().filter(|e| e.w <= threshold).count();
            l.graph.m() == expected
                && reference
                    .edges()
                    .filter(|e| e.w <= threshold)
                    .all(|e| l.graph.weight(e.u, e.v) == Some(e.w))
        })
    }
}
