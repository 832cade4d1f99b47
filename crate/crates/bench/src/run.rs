//! Trace replay with oracle checkpoints, latency measurement and CSV reports.

use std::io::{BufRead, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use dynmsf::{kruskal_msf_weight, DynamicGraph, Mode, MsfEstimator};

use crate::trace::TraceRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ModeArg {
    Det,
    Rand,
}

impl ModeArg {
    pub fn name(self) -> &'static str {
        match self {
            ModeArg::Det => "det",
            ModeArg::Rand => "rand",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "det" => Some(ModeArg::Det),
            "rand" => Some(ModeArg::Rand),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub eps: f64,
    pub mode: ModeArg,
    pub seed: u64,
    /// Also checkpoint after every k-th update; 0 means trace checkpoints only.
    pub checkpoint_every: u64,
    /// Overall failure probability in randomized mode (default `n^-2`).
    pub failure_prob: Option<f64>,
}

impl RunConfig {
    pub fn new(eps: f64, mode: ModeArg) -> Self {
        RunConfig {
            eps,
            mode,
            seed: 0,
            checkpoint_every: 0,
            failure_prob: None,
        }
    }

    fn estimator_mode(&self) -> Mode {
        match self.mode {
            ModeArg::Det => Mode::Deterministic,
            ModeArg::Rand => Mode::Randomized {
                failure_prob: self.failure_prob,
                seed: self.seed,
            },
        }
    }
}

/// One checkpoint. Latencies cover the updates since the previous checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub i: u64,
    pub exact_msf: f64,
    pub est_msf: f64,
    pub rel_err: f64,
    pub lat_p50_ns: u64,
    pub lat_p99_ns: u64,
    pub lat_max_ns: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub eps: f64,
    pub max_weight: f64,
    pub n: usize,
    pub mode: ModeArg,
    pub seed: u64,
    pub rows: Vec<Row>,
}

impl RunReport {
    /// Checkpoints where the estimate left `[(1-eps) M, (1+eps) M]`.
    pub fn envelope_violations(&self) -> usize {
        self.rows.iter().filter(|r| !within_envelope(r.est_msf, r.exact_msf, self.eps)).count()
    }

    pub fn max_rel_err(&self) -> f64 {
        self.rows.iter().map(|r| r.rel_err).fold(0.0, f64::max)
    }
}

pub fn within_envelope(estimate: f64, exact: f64, eps: f64) -> bool {
    let slack = 1e-9 * exact.max(1.0);
    estimate >= (1.0 - eps) * exact - slack && estimate <= (1.0 + eps) * exact + slack
}

pub fn relative_error(estimate: f64, exact: f64) -> f64 {
    (estimate - exact).abs() / exact.max(1.0)
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("update {timestamp}: {source}")]
    Replay {
        timestamp: u64,
        #[source]
        source: dynmsf::Error,
    },
    #[error("cannot build estimator: {0}")]
    Setup(#[source] dynmsf::Error),
}

fn percentile(sorted: &[u64], q: f64) -> u64 {
    if sorted.is_empty() {
        return 0;
    }
    let idx = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
    sorted[idx]
}

/// Replays `records` through a fresh estimator. Checkpoints only read the
/// estimator's master graph, and their cost is excluded from latencies.
pub fn run(records: &[TraceRecord], cfg: &RunConfig) -> Result<RunReport, RunError> {
    let (n, max_weight) = match records.first() {
        Some(&TraceRecord::Header { n, max_weight }) => (n, max_weight),
        _ => (0, 1.0),
    };
    let mut report = RunReport {
        eps: cfg.eps,
        max_weight,
        n,
        mode: cfg.mode,
        seed: cfg.seed,
        rows: Vec::new(),
    };
    if records.is_empty() {
        return Ok(report);
    }
    let g0 = DynamicGraph::empty(n, max_weight).map_err(RunError::Setup)?;
    let mut est = MsfEstimator::new(&g0, cfg.eps, max_weight, cfg.estimator_mode()).map_err(RunError::Setup)?;
    let mut window: Vec<u64> = Vec::new();
    let mut i = 0u64;
    let checkpoint = |est: &MsfEstimator, i: u64, window: &mut Vec<u64>, rows: &mut Vec<Row>| {
        window.sort_unstable();
        let exact = kruskal_msf_weight(est.graph());
        let estimate = est.estimate();
        rows.push(Row {
            i,
            exact_msf: exact,
            est_msf: estimate,
            rel_err: relative_error(estimate, exact),
            lat_p50_ns: percentile(window, 0.5),
            lat_p99_ns: percentile(window, 0.99),
            lat_max_ns: window.last().copied().unwrap_or(0),
        });
        window.clear();
    };
    for record in &records[1..] {
        match record.as_update() {
            Some(update) => {
                i += 1;
                let start = Instant::now();
                let res = est.update(update);
                let elapsed = start.elapsed().as_nanos() as u64;
                res.map_err(|source| RunError::Replay { timestamp: i, source })?;
                window.push(elapsed);
                if cfg.checkpoint_every > 0 && i.is_multiple_of(cfg.checkpoint_every) {
                    checkpoint(&est, i, &mut window, &mut report.rows);
                }
            }
            None => checkpoint(&est, i, &mut window, &mut report.rows),
        }
    }
    Ok(report)
}

pub fn write_report<W: Write>(out: W, report: &RunReport) -> csv::Result<()> {
    let mut out = out;
    writeln!(out, "# eps={}", report.eps)?;
    writeln!(out, "# max_weight={}", report.max_weight)?;
    writeln!(out, "# n={}", report.n)?;
    writeln!(out, "# mode={}", report.mode.name())?;
    writeln!(out, "# seed={}", report.seed)?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["i", "exact_msf", "est_msf", "rel_err", "lat_p50_ns", "lat_p99_ns", "lat_max_ns"])?;
    for row in &report.rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn report_to_string(report: &RunReport) -> String {
    let mut buf = Vec::new();
    write_report(&mut buf, report).expect("writing to memory");
    String::from_utf8(buf).expect("utf-8 output")
}

#[derive(Debug, thiserror::Error)]
pub enum ReportParseError {
    #[error("bad config line {0:?}")]
    Config(String),
    #[error("missing config key {0}")]
    MissingKey(&'static str),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Inverse of [`write_report`].
pub fn read_report<R: BufRead>(reader: R) -> Result<RunReport, ReportParseError> {
    let mut config = std::collections::HashMap::new();
    let mut body = String::new();
    for line in reader.lines() {
        let line = line?;
        if let Some(rest) = line.strip_prefix('#') {
            let (k, v) = rest
                .trim()
                .split_once('=')
                .ok_or_else(|| ReportParseError::Config(line.clone()))?;
            config.insert(k.to_string(), v.to_string());
        } else {
            body.push_str(&line);
            body.push('\n');
        }
    }
    fn get<T: std::str::FromStr>(
        config: &std::collections::HashMap<String, String>,
        key: &'static str,
    ) -> Result<T, ReportParseError> {
        let raw = config.get(key).ok_or(ReportParseError::MissingKey(key))?;
        raw.parse().map_err(|_| ReportParseError::Config(format!("{key}={raw}")))
    }
    let mode_raw: String = get(&config, "mode")?;
    let mode = ModeArg::parse(&mode_raw).ok_or(ReportParseError::Config(format!("mode={mode_raw}")))?;
    let mut rows = Vec::new();
    for row in csv::Reader::from_reader(body.as_bytes()).deserialize() {
        rows.push(row?);
    }
    Ok(RunReport {
        eps: get(&config, "eps")?,
        max_weight: get(&config, "max_weight")?,
        n: get(&config, "n")?,
        mode,
        seed: get(&config, "seed")?,
        rows,
    })
}
