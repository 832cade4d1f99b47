//! Randomized estimation of the number of connected components.
//!
//! [`StaticNccEstimator`] samples non-isolated vertices, runs a BFS capped at
//! `B = ⌈2/eps⌉` vertices from each and averages `1/|C(u)|` (0 for truncated
//! components). Scaled by `nis` this estimates the number of components among
//! non-isolated vertices within `eps * nis` with probability `1 - p`.
//!
//! [`PhaseEstimator`] turns that into a dynamic estimator whose additive error
//! is `eps' * T` for a caller-supplied T-parameter with `T >= nis` that moves
//! by at most 2 per update. The estimate is recomputed at the end of every
//! phase of `⌈eps' Ψ / 4⌉` updates, `Ψ` being the T-parameter at the previous
//! phase end, with fresh randomness each time.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::graph::{BoundedBfs, DynamicGraph, VertexId};
use crate::oracle::exact_ncc;

pub type EstimatorRng = ChaCha8Rng;

/// Deterministic per-stream generator: `seed` selects the key, `stream` the
/// ChaCha stream, so levels seeded from one master seed never overlap.
pub fn seeded_rng(seed: u64, stream: u64) -> EstimatorRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// How a static estimate draws its samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplingStrategy {
    /// One sampler draw and one capped BFS per sample.
    PerSample,
    /// Labels every non-isolated component once, then draws how many of the
    /// `s` samples land in components of each size from the multinomial
    /// distribution. Same output distribution as `PerSample`.
    Aggregated,
    /// `Aggregated` when `s >= nis + m`, i.e. when sampling would cost at
    /// least as much as a full labelling pass.
    #[default]
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticEstimateConfig {
    pub eps: f64,
    pub failure_prob: f64,
    /// `s = ⌈2 eps⁻² ln(2/p)⌉`.
    pub samples: u64,
    /// `B = ⌈2/eps⌉`.
    pub truncation: usize,
    pub strategy: SamplingStrategy,
}

impl StaticEstimateConfig {
    pub fn new(eps: f64, failure_prob: f64) -> Result<Self> {
        check_unit("eps", eps)?;
        check_unit("failure probability", failure_prob)?;
        let samples = (2.0 / (eps * eps) * (2.0 / failure_prob).ln()).ceil().max(1.0) as u64;
        let truncation = (2.0 / eps - 1e-9).ceil().max(2.0) as usize;
        Ok(StaticEstimateConfig {
            eps,
            failure_prob,
            samples,
            truncation,
            strategy: SamplingStrategy::Auto,
        })
    }

    pub fn with_strategy(mut self, strategy: SamplingStrategy) -> Self {
        self.strategy = strategy;
        self
    }

    fn resolve(&self, g: &DynamicGraph) -> SamplingStrategy {
        match self.strategy {
            SamplingStrategy::Auto if self.samples >= (g.nis() + g.m()) as u64 => SamplingStrategy::Aggregated,
            SamplingStrategy::Auto => SamplingStrategy::PerSample,
            s => s,
        }
    }
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must lie in (0, 1), got {x}")))
    }
}

/// `1/|C(v)|` if the component of `v` has at most `truncation` vertices, else 0.
pub fn inverse_component_size(bfs: &mut BoundedBfs, g: &DynamicGraph, v: VertexId, truncation: usize) -> f64 {
    match bfs.run(g, v, truncation) {
        Some(component) => 1.0 / component.len() as f64,
        None => 0.0,
    }
}

/// `(nis / s) Σ β(u_j)` over an explicit sample sequence.
pub fn estimate_from_samples<I>(g: &DynamicGraph, samples: I, truncation: usize) -> f64
where
    I: IntoIterator<Item = VertexId>,
{
    let mut bfs = BoundedBfs::new(g.n());
    let mut count = 0u64;
    let mut sum = 0.0;
    for v in samples {
        sum += inverse_component_size(&mut bfs, g, v, truncation);
        count += 1;
    }
    scale(g.nis(), sum, count)
}

fn scale(nis: usize, beta_sum: f64, samples: u64) -> f64 {
    nis as f64 * beta_sum / samples as f64
}

/// Static estimator of `ncc` restricted to non-isolated vertices, with
/// reusable scratch space.
#[derive(Debug, Clone)]
pub struct StaticNccEstimator {
    cfg: StaticEstimateConfig,
    bfs: BoundedBfs,
    stamp: Vec<u32>,
    epoch: u32,
    queue: Vec<VertexId>,
    by_size: Vec<u64>,
    work: u64,
}

impl StaticNccEstimator {
    pub fn new(n: usize, cfg: StaticEstimateConfig) -> Self {
        StaticNccEstimator {
            cfg,
            bfs: BoundedBfs::new(n),
            stamp: vec![0; n],
            epoch: 0,
            queue: Vec::new(),
            by_size: Vec::new(),
            work: 0,
        }
    }

    pub fn config(&self) -> &StaticEstimateConfig {
        &self.cfg
    }

    /// BFS work (vertex visits plus neighbour scans) spent so far.
    pub fn work(&self) -> u64 {
        self.work + self.bfs.work()
    }

    /// Estimate `b̄` of the number of components spanned by non-isolated
    /// vertices. Fails with [`Error::EmptySupport`] when `nis = 0`.
    pub fn estimate<R: Rng + ?Sized>(&mut self, g: &DynamicGraph, rng: &mut R) -> Result<f64> {
        if g.nis() == 0 {
            return Err(Error::EmptySupport);
        }
        match self.cfg.resolve(g) {
            SamplingStrategy::Aggregated => Ok(self.aggregated(g, rng)),
            _ => {
                let mut sum = 0.0;
                for _ in 0..self.cfg.samples {
                    sum += self.sample_beta(g, rng)?;
                }
                Ok(scale(g.nis(), sum, self.cfg.samples))
            }
        }
    }

    /// One sample: a uniform non-isolated vertex and its truncated inverse
    /// component size.
    pub fn sample_beta<R: Rng + ?Sized>(&mut self, g: &DynamicGraph, rng: &mut R) -> Result<f64> {
        let v = g.sample_nonisolated(rng)?;
        Ok(inverse_component_size(&mut self.bfs, g, v, self.cfg.truncation))
    }

    fn aggregated<R: Rng + ?Sized>(&mut self, g: &DynamicGraph, rng: &mut R) -> f64 {
        let nis = g.nis();
        let cap = self.cfg.truncation.min(nis);
        self.by_size.clear();
        self.by_size.resize(cap + 1, 0);
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        let epoch = self.epoch;
        for &(start, _) in g.nonisolated().live() {
            if self.stamp[start] == epoch {
                continue;
            }
            self.stamp[start] = epoch;
            self.queue.clear();
            self.queue.push(start);
            let mut head = 0;
            while head < self.queue.len() {
                let x = self.queue[head];
                head += 1;
                self.work += 1;
                for y in g.neighbor_ids(x) {
                    self.work += 1;
                    if self.stamp[y] != epoch {
                        self.stamp[y] = epoch;
                        self.queue.push(y);
                    }
                }
            }
            if self.queue.len() <= cap {
                self.by_size[self.queue.len()] += 1;
            }
        }
        // Sequential conditional binomials realise the multinomial split of
        // the samples over "component of size k" classes; whatever is left
        // falls into truncated components and contributes 0.
        let mut left = self.cfg.samples;
        let mut mass_left = nis as u64;
        let mut sum = 0.0;
        for size in 1..=cap {
            let mass = self.by_size[size] * size as u64;
            if mass == 0 || left == 0 {
                continue;
            }
            let p = (mass as f64 / mass_left as f64).min(1.0);
            let hits = Binomial::new(left, p).expect("valid binomial").sample(rng);
            sum += hits as f64 / size as f64;
            left -= hits;
            mass_left -= mass;
        }
        scale(nis, sum, self.cfg.samples)
    }
}

/// Convenience one-shot static estimate.
pub fn static_estimate_ncc_nis<R: Rng + ?Sized>(
    g: &DynamicGraph,
    cfg: &StaticEstimateConfig,
    rng: &mut R,
) -> Result<f64> {
    StaticNccEstimator::new(g.n(), *cfg).estimate(g, rng)
}

/// Partially computed per-sample estimate, advanced a few samples per update.
#[derive(Debug, Clone)]
struct SlicedJob {
    remaining: u64,
    beta_sum: f64,
    nis_at_start: usize,
}

#[derive(Debug, Clone)]
struct Slicing {
    budget: u64,
    job: Option<SlicedJob>,
}

#[derive(Debug, Clone)]
pub struct PhaseEstimator {
    eps: f64,
    failure_prob: f64,
    n: usize,
    psi: u64,
    last_t: u64,
    nis: usize,
    estimate: f64,
    phase_len: u64,
    in_phase: u64,
    updates: u64,
    phases: u64,
    exact: bool,
    sampler: StaticNccEstimator,
    rng: EstimatorRng,
    slicing: Option<Slicing>,
}

impl PhaseEstimator {
    /// Starts from the exact component count of `g` with T-parameter `t0`.
    pub fn new(g: &DynamicGraph, eps: f64, failure_prob: f64, t0: u64, rng: EstimatorRng) -> Result<Self> {
        check_unit("eps'", eps)?;
        let cfg = StaticEstimateConfig::new(eps / 4.0, failure_prob)?;
        Self::build(g, eps, failure_prob, t0, rng, cfg, false)
    }

    /// Recomputes the exact count after every update. Used where `eps'` is so
    /// small that a full traversal is cheaper than sampling.
    pub fn exact(g: &DynamicGraph, t0: u64, rng: EstimatorRng) -> Result<Self> {
        let cfg = StaticEstimateConfig::new(0.5, 0.5)?;
        Self::build(g, 0.0, 0.0, t0, rng, cfg, true)
    }

    fn build(
        g: &DynamicGraph,
        eps: f64,
        failure_prob: f64,
        t0: u64,
        rng: EstimatorRng,
        cfg: StaticEstimateConfig,
        exact: bool,
    ) -> Result<Self> {
        if t0 < g.nis() as u64 {
            return Err(Error::TParamTooSmall { t: t0, nis: g.nis() });
        }
        let mut e = PhaseEstimator {
            eps,
            failure_prob,
            n: g.n(),
            psi: t0,
            last_t: t0,
            nis: g.nis(),
            estimate: exact_ncc(g) as f64,
            phase_len: 1,
            in_phase: 0,
            updates: 0,
            phases: 0,
            exact,
            sampler: StaticNccEstimator::new(g.n(), cfg),
            rng,
            slicing: None,
        };
        e.phase_len = e.phase_len_for(t0);
        Ok(e)
    }

    /// Switches to worst-case mode: phase-end recomputations are spread over
    /// the following updates, `budget` samples per update.
    pub fn with_slicing(mut self, budget: u64) -> Self {
        self.slicing = Some(Slicing { budget, job: None });
        self
    }

    pub fn with_strategy(mut self, strategy: SamplingStrategy) -> Self {
        self.sampler.cfg.strategy = strategy;
        self
    }

    fn phase_len_for(&self, psi: u64) -> u64 {
        if self.exact {
            return 1;
        }
        ((self.eps * psi as f64 / 4.0 - 1e-9).ceil() as u64).max(1)
    }

    pub fn estimate(&self) -> f64 {
        self.estimate
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn failure_prob(&self) -> f64 {
        self.failure_prob
    }

    /// T-parameter frozen at the last phase end.
    pub fn psi(&self) -> u64 {
        self.psi
    }

    pub fn last_t(&self) -> u64 {
        self.last_t
    }

    pub fn nis(&self) -> usize {
        self.nis
    }

    pub fn phase_len(&self) -> u64 {
        self.phase_len
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn phases_completed(&self) -> u64 {
        self.phases
    }

    pub fn static_config(&self) -> &StaticEstimateConfig {
        self.sampler.config()
    }

    pub fn work(&self) -> u64 {
        self.sampler.work()
    }

    /// Whether a sliced recomputation is still in flight.
    pub fn slice_pending(&self) -> bool {
        self.slicing.as_ref().is_some_and(|s| s.job.is_some())
    }

    /// Records one update of `g` (already applied) with T-parameter `t`.
    ///
    /// Requires `t >= nis(g)` and `|t - t_prev| <= 2`; otherwise returns
    /// [`Error::TParamViolation`] without touching the state.
    pub fn on_update(&mut self, g: &DynamicGraph, t: u64) -> Result<()> {
        let nis = g.nis();
        if t < nis as u64 || t.abs_diff(self.last_t) > 2 {
            return Err(Error::TParamViolation {
                t,
                prev: self.last_t,
                nis,
            });
        }
        self.last_t = t;
        self.nis = nis;
        self.updates += 1;
        self.in_phase += 1;
        let budget = self.slicing.as_ref().map(|s| s.budget);
        if self.in_phase >= self.phase_len {
            self.end_phase(g, t);
        } else if let Some(budget) = budget {
            self.advance_slice(g, budget);
        }
        Ok(())
    }

    fn end_phase(&mut self, g: &DynamicGraph, t: u64) {
        self.psi = t;
        self.phase_len = self.phase_len_for(t);
        self.in_phase = 0;
        self.phases += 1;
        if self.exact {
            self.estimate = exact_ncc(g) as f64;
            return;
        }
        match self.slicing.as_ref().map(|s| s.budget) {
            None => self.estimate = self.recompute(g),
            Some(budget) => {
                // A job that outlived its phase is finished on the spot.
                self.advance_slice(g, u64::MAX);
                if g.nis() == 0 {
                    self.estimate = self.n as f64;
                    return;
                }
                if let Some(s) = self.slicing.as_mut() {
                    s.job = Some(SlicedJob {
                        remaining: self.sampler.cfg.samples,
                        beta_sum: 0.0,
                        nis_at_start: g.nis(),
                    });
                }
                self.advance_slice(g, budget);
            }
        }
    }

    fn recompute(&mut self, g: &DynamicGraph) -> f64 {
        match self.sampler.estimate(g, &mut self.rng) {
            Ok(b) => b + (self.n - g.nis()) as f64,
            Err(_) => self.n as f64,
        }
    }

    /// Advances an in-flight sliced recomputation by up to `budget` samples.
    /// The estimate is replaced only once all samples are in.
    pub fn advance_slice(&mut self, g: &DynamicGraph, budget: u64) {
        let Some(slicing) = self.slicing.as_mut() else {
            return;
        };
        let Some(job) = slicing.job.as_mut() else {
            return;
        };
        let mut steps = 0;
        while job.remaining > 0 && steps < budget {
            match self.sampler.sample_beta(g, &mut self.rng) {
                Ok(beta) => job.beta_sum += beta,
                Err(_) => {
                    // Graph emptied mid-flight: the exact answer is n.
                    slicing.job = None;
                    self.estimate = self.n as f64;
                    return;
                }
            }
            job.remaining -= 1;
            steps += 1;
        }
        if job.remaining == 0 {
            let b = scale(job.nis_at_start, job.beta_sum, self.sampler.cfg.samples);
            self.estimate = b + (self.n - job.nis_at_start) as f64;
            slicing.job = None;
        }
    }
}

/// Component-count estimator with additive error `eps * n`, i.e. the phase
/// estimator run with the constant T-parameter `n`.
#[derive(Debug, Clone)]
pub struct EpsNEstimator {
    inner: PhaseEstimator,
    t: u64,
    error_bound: f64,
}

impl EpsNEstimator {
    pub fn new(g: &DynamicGraph, eps: f64, failure_prob: f64, rng: EstimatorRng) -> Result<Self> {
        let n = g.n() as u64;
        Ok(EpsNEstimator {
            inner: PhaseEstimator::new(g, eps, failure_prob, n, rng)?,
            t: n,
            error_bound: eps * n as f64,
        })
    }

    /// Error bound `eps * n^{2/3} * ln^{2/3} n` with failure probability
    /// `n^{-c}`: runs the `eps * n` estimator with
    /// `eps' = eps * n^{-1/3} * ln^{2/3} n`, or recomputes exactly after each
    /// update when `eps < n^{-2/3}`.
    pub fn sublinear(g: &DynamicGraph, eps: f64, c: f64, rng: EstimatorRng) -> Result<Self> {
        let n = g.n() as f64;
        let log_factor = n.ln().powf(2.0 / 3.0);
        let error_bound = eps * n.powf(2.0 / 3.0) * log_factor;
        let t = g.n() as u64;
        let inner = if eps < n.powf(-2.0 / 3.0) {
            PhaseEstimator::exact(g, t, rng)?
        } else {
            let eps_prime = eps * n.powf(-1.0 / 3.0) * log_factor;
            PhaseEstimator::new(g, eps_prime, n.powf(-c), t, rng)?
        };
        Ok(EpsNEstimator { inner, t, error_bound })
    }

    pub fn on_update(&mut self, g: &DynamicGraph) -> Result<()> {
        self.inner.on_update(g, self.t)
    }

    pub fn estimate(&self) -> f64 {
        self.inner.estimate()
    }

    pub fn error_bound(&self) -> f64 {
        self.error_bound
    }

    pub fn phase(&self) -> &PhaseEstimator {
        &self.inner
    }
}
