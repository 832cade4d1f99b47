use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use dynmsf_bench::gen::{grid_adversary, random_stream, StreamOptions};
use dynmsf_bench::run::{run, write_report, ModeArg, RunConfig};
use dynmsf_bench::trace::{parse_trace, write_trace};

#[derive(Parser)]
#[command(name = "dynmsf", about = "Dynamic approximate MSF weight: trace generation and replay")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a trace and report exact vs estimated MSF weight at checkpoints.
    Run {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long, value_enum, default_value = "det")]
        mode: ModeArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Checkpoint every k updates in addition to `C` records (0 = off).
        #[arg(long, default_value_t = 0)]
        checkpoint_every: u64,
        /// Failure probability for randomized mode (default n^-2).
        #[arg(long)]
        p: Option<f64>,
        /// CSV destination; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a trace.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
        /// Trace destination; standard output when omitted.
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum GenKind {
    /// Uniformly random inserts and deletes.
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        w: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 0.5)]
        bias: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Never delete while the graph has at most this many edges.
        #[arg(long, default_value_t = 0)]
        min_edges: usize,
        /// Fraction of inserted edges given weight W.
        #[arg(long, default_value_t = 0.0)]
        heavy: f64,
    },
    /// Permutation grid with weight-W connectivity probes.
    Grid {
        #[arg(long)]
        side: usize,
        #[arg(long)]
        batches: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Probe edge weight; defaults to the vertex count.
        #[arg(long)]
        w: Option<f64>,
    },
}

fn output(path: Option<&PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn real_main() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            trace,
            eps,
            mode,
            seed,
            checkpoint_every,
            p,
            out,
        } => {
            let file = File::open(&trace).with_context(|| format!("opening {}", trace.display()))?;
            let records = parse_trace(BufReader::new(file)).with_context(|| format!("parsing {}", trace.display()))?;
            let cfg = RunConfig {
                eps,
                mode,
                seed,
                checkpoint_every,
                failure_prob: p,
            };
            let report = run(&records, &cfg)?;
            let mut sink = output(out.as_ref())?;
            write_report(&mut sink, &report)?;
            sink.flush()?;
            let violations = report.envelope_violations();
            eprintln!(
                "{} checkpoints, max relative error {:.4}, {} outside the (1 +/- eps) envelope",
                report.rows.len(),
                report.max_rel_err(),
                violations
            );
            if mode == ModeArg::Det && violations > 0 {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Gen { kind, out } => {
            let records = match kind {
                GenKind::Random {
                    n,
                    w,
                    steps,
                    bias,
                    seed,
                    min_edges,
                    heavy,
                } => {
                    anyhow::ensure!(n >= 2, "--n must be at least 2");
                    anyhow::ensure!(w >= 1.0, "--w must be at least 1");
                    anyhow::ensure!((0.0..=1.0).contains(&bias), "--bias must lie in [0, 1]");
                    anyhow::ensure!((0.0..=1.0).contains(&heavy), "--heavy must lie in [0, 1]");
                    let opts = StreamOptions {
                        insert_bias: bias,
                        min_edges,
                        heavy_fraction: heavy,
                    };
                    random_stream(n, w, steps, opts, seed)
                }
                GenKind::Grid { side, batches, seed, w } => {
                    anyhow::ensure!(side >= 2, "--side must be at least 2");
                    let w = w.unwrap_or((side * side + 1) as f64);
                    anyhow::ensure!(w >= 1.0, "--w must be at least 1");
                    grid_adversary(side, batches, w, seed)
                }
            };
            let mut sink = output(out.as_ref())?;
            write_trace(&mut sink, &records)?;
            sink.flush()?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
