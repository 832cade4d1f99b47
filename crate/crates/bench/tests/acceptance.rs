//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use dynmsf::oracle::{exact_ncc, exact_small_cc, formula_x, kruskal_msf_weight};
use dynmsf::rand_cc::{estimate_from_samples, seeded_rng, static_estimate_ncc_nis};
use dynmsf::{
    det_cc, DynamicGraph, EpsNEstimator, LevelScheme, Mode, MsfEstimator, NonZeroSampler, PhaseEstimator,
    SamplingStrategy, SmallCcCounter, StaticEstimateConfig, Update,
};
use dynmsf_bench::gen::{grid_adversary, random_stream, RandomStream, StreamOptions};
use dynmsf_bench::run::{run, within_envelope, ModeArg, RunConfig};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gnp(n: usize, p: f64, max_weight: f64, r: &mut ChaCha8Rng) -> DynamicGraph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if r.random_bool(p) {
                let w = if max_weight == 1.0 {
                    1.0
                } else {
                    r.random_range(1.0..=max_weight)
                };
                edges.push((u, v, w));
            }
        }
    }
    DynamicGraph::new(n, max_weight, edges).unwrap()
}

/// Components spanned by non-isolated vertices.
fn ncc_nonisolated(g: &DynamicGraph) -> usize {
    exact_ncc(g) - (g.n() - g.nis())
}

fn formula_sandwich() -> Outcome {
    let mut r = rng(1);
    let weights = [1.0, 2.0, 8.0, 64.0];
    let epss = [0.1, 0.25, 0.5, 1.0];
    let mut violations = 0;
    for trial in 0..1000 {
        let n = r.random_range(1..=200);
        let w = weights[trial % 4];
        let eps = epss[(trial / 4) % 4];
        let p = r.random_range(0.0..(6.0 / n as f64).min(1.0));
        let mut g = gnp(n, p, w, &mut r);
        if trial % 3 == 0 {
            // Integer weights hit the thresholds exactly.
            let edges: Vec<_> = g.edges().map(|e| (e.u, e.v, e.w.round())).collect();
            g = DynamicGraph::new(n, w, edges).unwrap();
        }
        let m = kruskal_msf_weight(&g);
        let x = formula_x(&g, &LevelScheme::new(eps, w).unwrap());
        let tol = 1e-9 * m.max(1.0);
        if x < m - tol || x > (1.0 + eps) * m + tol {
            violations += 1;
        }
    }
    check(violations == 0, format!("1000 graphs, {violations} violations"))
}

fn small_cc_exactness() -> Outcome {
    let mut violations = 0;
    let mut steps = 0;
    for (k, eps) in [1.0, 0.5, 0.2, 0.1].into_iter().enumerate() {
        let mut g = DynamicGraph::empty(60, 1.0).unwrap();
        let mut counter = SmallCcCounter::new(&g, eps).unwrap();
        let cap = det_cc::size_cap(eps);
        let opts = StreamOptions {
            insert_bias: 0.45,
            ..Default::default()
        };
        for update in RandomStream::new(60, 1.0, 20 + k as u64, opts).take(10_000) {
            counter.apply(&mut g, update).unwrap();
            steps += 1;
            if counter.estimate() != exact_small_cc(&g, cap).count {
                violations += 1;
            }
        }
    }
    check(violations == 0, format!("{steps} updates, {violations} mismatches"))
}

fn deterministic_envelope() -> Outcome {
    let mut violations = 0;
    let mut checkpoints = 0;
    let mut worst: f64 = 0.0;
    for eps in [0.5, 1.0] {
        for seed in 0..20 {
            let trace = random_stream(100, 8.0, 2000, StreamOptions::default(), 300 + seed);
            let mut cfg = RunConfig::new(eps, ModeArg::Det);
            cfg.checkpoint_every = 25;
            let report = run(&trace, &cfg).unwrap();
            checkpoints += report.rows.len();
            violations += report.envelope_violations();
            worst = worst.max(report.max_rel_err() / eps);
        }
    }
    check(
        violations == 0,
        format!("{checkpoints} checkpoints, {violations} violations, worst error {worst:.3} eps"),
    )
}

fn sampler_correctness() -> Outcome {
    let mut r = rng(4);
    let n = 48;
    let mut values = vec![0i64; n];
    let mut s = NonZeroSampler::new(n);
    let mut broken = 0;
    let mut max_slots = 0;
    for _ in 0..1_000_000 {
        let u = r.random_range(0..n);
        let delta = match values[u] {
            0 => r.random_range(1..=3),
            v if r.random_bool(0.55) => -v.signum() * r.random_range(1..=v.abs()),
            _ => r.random_range(-2..=2),
        };
        values[u] += delta;
        s.update(u, delta);
        max_slots = max_slots.max(s.last_update_slot_accesses());
        if !s.check_inverse() || s.nonzero_count() != values.iter().filter(|&&v| v != 0).count() {
            broken += 1;
        }
    }

    let mut chi_failures = Vec::new();
    for (i, k) in [1usize, 2, 7, 16, 32].into_iter().enumerate() {
        let mut s = NonZeroSampler::new(64);
        let mut r = rng(40 + i as u64);
        // Churn so that support order differs from index order.
        for u in 0..64 {
            s.update(u, 1);
        }
        let mut keep: Vec<usize> = (0..64).collect();
        for j in (1..64).rev() {
            keep.swap(j, r.random_range(0..=j));
        }
        for &u in &keep[k..] {
            s.update(u, -1);
        }
        let draws = 100_000;
        let mut counts = vec![0u64; 64];
        for _ in 0..draws {
            counts[s.sample(&mut r).unwrap()] += 1;
        }
        let expected = draws as f64 / k as f64;
        let stat: f64 = keep[..k].iter().map(|&u| (counts[u] as f64 - expected).powi(2) / expected).sum();
        let outside: u64 = keep[k..].iter().map(|&u| counts[u]).sum();
        let ok = if k == 1 {
            outside == 0
        } else {
            let q = ChiSquared::new((k - 1) as f64).unwrap().inverse_cdf(0.999);
            outside == 0 && stat < q
        };
        if !ok {
            chi_failures.push(k);
        }
    }
    check(
        broken == 0 && max_slots <= 8 && chi_failures.is_empty(),
        format!(
            "1e6 updates: {broken} inverse violations, max {max_slots} slots/update; chi-square failures at sizes {chi_failures:?}"
        ),
    )
}

fn static_estimator() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for eps in [0.1, 0.2] {
        for strategy in [SamplingStrategy::PerSample, SamplingStrategy::Aggregated] {
            let cfg = StaticEstimateConfig::new(eps, 0.05).unwrap().with_strategy(strategy);
            let mut r = rng(5);
            let mut good = 0;
            for trial in 0..200 {
                let g = gnp(100, 0.05, 1.0, &mut r);
                if g.nis() == 0 {
                    good += 1;
                    continue;
                }
                let b = static_estimate_ncc_nis(&g, &cfg, &mut seeded_rng(trial, 1)).unwrap();
                if (b - ncc_nonisolated(&g) as f64).abs() <= eps * g.nis() as f64 {
                    good += 1;
                }
            }
            ok &= good as f64 >= 0.92 * 200.0;
            details.push(format!("eps={eps} {strategy:?} {good}/200"));
        }
    }

    // Exhaustive expectation over all graphs on 6 vertices, for one and two
    // samples, against the exact count.
    let pairs: Vec<(usize, usize)> = (0..6).flat_map(|u| (u + 1..6).map(move |v| (u, v))).collect();
    let mut worst: f64 = 0.0;
    for mask in 1u32..(1 << pairs.len()) {
        let edges = pairs
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &(u, v))| (u, v, 1.0));
        let g = DynamicGraph::new(6, 1.0, edges).unwrap();
        let support: Vec<usize> = (0..6).filter(|&v| g.degree(v) > 0).collect();
        let truth = ncc_nonisolated(&g) as f64;
        let one: f64 = support.iter().map(|&v| estimate_from_samples(&g, [v], 6)).sum::<f64>() / support.len() as f64;
        let mut two = 0.0;
        for &a in &support {
            for &b in &support {
                two += estimate_from_samples(&g, [a, b], 6);
            }
        }
        two /= (support.len() * support.len()) as f64;
        worst = worst.max((one - truth).abs()).max((two - truth).abs());
    }
    ok &= worst < 1e-12;
    details.push(format!("exhaustive n=6 max |E[b] - ncc| = {worst:.1e}"));
    check(ok, details.join("; "))
}

fn phase_envelope() -> Outcome {
    let (eps, p) = (0.2, 0.05);
    let mut checkpoints = 0u64;
    let mut violations = 0u64;
    for trial in 0..200 {
        let mut g = DynamicGraph::empty(200, 1.0).unwrap();
        let mut est = PhaseEstimator::new(&g, eps, p, 0, seeded_rng(600 + trial, 0)).unwrap();
        let stream = RandomStream::new(200, 1.0, 6000 + trial, StreamOptions::default());
        for (i, update) in stream.take(2000).enumerate() {
            g.apply(update).unwrap();
            est.on_update(&g, g.nis() as u64).unwrap();
            if (i + 1) % 10 == 0 {
                checkpoints += 1;
                if (est.estimate() - exact_ncc(&g) as f64).abs() > eps * g.nis() as f64 {
                    violations += 1;
                }
            }
        }
    }
    let rate = violations as f64 / checkpoints as f64;
    check(
        rate <= p + 0.03,
        format!("{checkpoints} checkpoints, violation rate {rate:.4}"),
    )
}

/// Independent check of the T-parameter sequence seen by each level; `last`
/// carries the previous T of every level across calls.
fn t_contract_breaches(est: &mut MsfEstimator, last: &mut [u64]) -> usize {
    let mut breaches = 0;
    for rec in est.take_t_params() {
        if rec.t < rec.level_nis as u64 || rec.t.abs_diff(last[rec.level]) > 2 {
            breaches += 1;
        }
        last[rec.level] = rec.t;
    }
    breaches
}

fn randomized_envelope() -> Outcome {
    let (n, w, eps, p) = (400, 4.0, 0.5, 0.05);
    let mut bad_streams = 0;
    let mut breaches = 0;
    let mut loop_updates = 0u64;
    for seed in 0..100u64 {
        let heavy = if seed % 2 == 0 { 0.0 } else { 0.6 };
        let mut opts = StreamOptions {
            insert_bias: 1.0,
            min_edges: 500,
            heavy_fraction: heavy,
        };
        let mut gen = RandomStream::new(n, w, 700 + seed, opts);
        for _ in 0..600 {
            gen.next_update();
        }
        let g0 = DynamicGraph::new(n, w, gen.edges()).unwrap();
        opts.insert_bias = 0.5;
        gen.set_options(opts);
        let mode = Mode::Randomized {
            failure_prob: Some(p),
            seed: 9000 + seed,
        };
        let mut est = MsfEstimator::new(&g0, eps, w, mode).unwrap();
        est.record_t_params(true);
        let mut last_t = vec![g0.nis() as u64; est.scheme().levels()];
        // Edges heavier than the second-highest threshold skip every level
        // but the top one, which then receive self-loop pairs.
        let below_top = est.scheme().thresholds()[est.scheme().top() - 1];
        let mut violated = false;
        for (i, update) in gen.by_ref().take(1000).enumerate() {
            let applied = est.update(update).unwrap();
            if applied.w > below_top {
                loop_updates += 1;
            }
            if (i + 1) % 10 == 0 {
                let exact = kruskal_msf_weight(est.graph());
                violated |= !within_envelope(est.estimate(), exact, eps);
                breaches += t_contract_breaches(&mut est, &mut last_t);
            }
        }
        if est.graph().min_edges_seen() < 500 {
            return Err(format!("stream {seed} dropped below 500 edges"));
        }
        bad_streams += usize::from(violated);
    }
    let rate = bad_streams as f64 / 100.0;
    check(
        rate <= p + 0.03 && breaches == 0 && loop_updates > 0,
        format!(
            "100 streams, {bad_streams} with a violation, {breaches} T-contract breaches, {loop_updates} heavy updates through self-loops"
        ),
    )
}

/// Deterministic estimator on a random graph with `n/2` edges plus the
/// update stream to replay on it.
struct LatencyRun {
    est: MsfEstimator,
    stream: std::vec::IntoIter<Update>,
    samples: Vec<Duration>,
}

impl LatencyRun {
    fn new(n: usize, updates: usize, seed: u64) -> Self {
        let w = 2.0;
        let mut gen = RandomStream::new(n, w, seed, StreamOptions::default());
        for _ in 0..n / 2 {
            gen.insert();
        }
        let g0 = DynamicGraph::new(n, w, gen.edges()).unwrap();
        let est = MsfEstimator::new(&g0, 0.5, w, Mode::Deterministic).unwrap();
        let stream: Vec<Update> = gen.take(updates).collect();
        LatencyRun {
            est,
            stream: stream.into_iter(),
            samples: Vec::with_capacity(updates),
        }
    }

    fn block(&mut self, len: usize, record: bool) {
        for u in self.stream.by_ref().take(len) {
            let start = Instant::now();
            self.est.update(u).unwrap();
            let elapsed = start.elapsed();
            if record {
                self.samples.push(elapsed);
            }
        }
    }

    fn median(&mut self) -> Duration {
        self.samples.sort_unstable();
        self.samples[self.samples.len() / 2]
    }
}

fn latency_independence() -> Outcome {
    // Both sizes are measured in alternating blocks so that drift in machine
    // speed hits them equally; each block opens with unrecorded updates that
    // bring the estimator's working set back into cache.
    let (rounds, warm, block) = (20, 300, 1500);
    let total = rounds * (warm + block);
    let mut small = LatencyRun::new(10_000, total, 81);
    let mut large = LatencyRun::new(100_000, total, 82);
    for _ in 0..rounds {
        for r in [&mut small, &mut large] {
            r.block(warm, false);
            r.block(block, true);
        }
    }
    let (a, b) = (small.median(), large.median());
    let ratio = b.as_secs_f64() / a.as_secs_f64();
    check(
        ratio <= 1.5,
        format!(
            "median {a:?} at n=1e4, {b:?} at n=1e5 over {} updates each, ratio {ratio:.2}",
            rounds * block
        ),
    )
}

fn eps_n_modes() -> Outcome {
    let (n, eps) = (1000, 0.1);
    let mut results = Vec::new();
    for sublinear in [false, true] {
        let mut good = 0u64;
        let mut total = 0u64;
        let mut bound = 0.0;
        for seed in 0..100u64 {
            let mut g = DynamicGraph::empty(n, 1.0).unwrap();
            let r = seeded_rng(1000 + seed, 0);
            let mut est = if sublinear {
                EpsNEstimator::sublinear(&g, eps, 1.0, r).unwrap()
            } else {
                EpsNEstimator::new(&g, eps, 0.05, r).unwrap()
            };
            bound = est.error_bound();
            let stream = RandomStream::new(n, 1.0, 2000 + seed, StreamOptions::default());
            for (i, update) in stream.take(1000).enumerate() {
                g.apply(update).unwrap();
                est.on_update(&g).unwrap();
                if (i + 1) % 10 == 0 {
                    total += 1;
                    if (est.estimate() - exact_ncc(&g) as f64).abs() <= bound {
                        good += 1;
                    }
                }
            }
        }
        results.push((sublinear, good as f64 / total as f64, bound));
    }
    let ok = results.iter().all(|&(_, rate, _)| rate >= 0.92);
    let detail = results
        .iter()
        .map(|(s, rate, bound)| {
            format!(
                "{} bound {bound:.1}: {:.4} within",
                if *s { "sublinear" } else { "eps*n" },
                rate
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    check(ok, detail)
}

fn nis_vs_edges() -> Outcome {
    let mut traces = Vec::new();
    for seed in 0..20 {
        let opts = StreamOptions {
            insert_bias: [0.3, 0.5, 0.8][seed as usize % 3],
            ..Default::default()
        };
        traces.push(random_stream(30 + 10 * seed as usize, 8.0, 3000, opts, 50 + seed));
    }
    for seed in 0..5 {
        traces.push(grid_adversary(3 + seed as usize, 20, 50.0, seed));
    }
    let mut steps = 0u64;
    let mut violations = 0u64;
    for trace in &traces {
        let dynmsf_bench::trace::TraceRecord::Header { n, max_weight } = trace[0] else { unreachable!() };
        let mut g = DynamicGraph::empty(n, max_weight).unwrap();
        let (mut nis_min, mut m_min) = (u64::MAX, u64::MAX);
        for update in trace.iter().filter_map(|r| r.as_update()) {
            g.apply(update).unwrap();
            let m = g.edges().count() as u64;
            let nis = (0..n).filter(|&v| g.degree(v) > 0).count() as u64;
            if m == 0 {
                continue;
            }
            nis_min = nis_min.min(nis);
            m_min = m_min.min(m);
            steps += 1;
            // nis > sqrt(2m), in integers; both per step and for the minima.
            if nis * nis <= 2 * m || nis_min * nis_min <= 2 * m_min {
                violations += 1;
            }
        }
    }
    check(violations == 0, format!("{steps} steps, {violations} violations"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("formula sandwich M <= X <= (1+eps)M", formula_sandwich),
        ("deterministic small-component count is exact", small_cc_exactness),
        ("deterministic MSF envelope", deterministic_envelope),
        ("non-zero sampler invariants and uniformity", sampler_correctness),
        ("static randomized estimator accuracy and unbiasedness", static_estimator),
        ("phase estimator envelope", phase_envelope),
        ("randomized MSF envelope and T-contract", randomized_envelope),
        ("update latency independent of n", latency_independence),
        ("eps*n and sublinear-error estimators", eps_n_modes),
        ("nis > sqrt(2m) on every step", nis_vs_edges),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (idx, (name, f)) in criteria.iter().enumerate() {
        let id = idx + 1;
        if !filter.is_empty() && !filter.iter().any(|a| a == &id.to_string()) {
            continue;
        }
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {id:>2} PASS  {name} ({detail}) [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id:>2} FAIL  {name} ({detail}) [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
