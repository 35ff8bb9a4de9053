//! Thin command-line front end over the library: run one experiment, sweep
//! seeds, analyze a static quorum-system instance, or re-check a trace log.

use clap::{Parser, Subcommand};
use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};
use wabd::harness::{
    check_protocol_invariants, run_experiment, ExperimentConfig, MetricsReport,
};
use wabd::analysis::QuorumSpecFile;
use wabd::quorum::SystemConfig;
use wabd::time::ms;
use wabd::trace::Trace;

#[derive(Parser)]
#[command(name = "wabd", about = "weighted ABD storage simulator and analyzer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a JSON config and write its outputs.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for trace.log, metrics.csv, summary.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a range of seeds and report aggregate latencies.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Inclusive seed range, e.g. 0..99.
        #[arg(long)]
        seeds: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print quorum latency and capacity for a quorum-spec file.
    Analyze { spec: PathBuf },
    /// Re-check protocol invariants over a trace log.
    CheckTrace {
        trace: PathBuf,
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        f: usize,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
    },
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<(), Box<dyn Error>> {
    match cli.command {
        Command::Run { config, seed, out } => cmd_run(&config, seed, out.as_deref()),
        Command::Sweep { config, seeds, out } => cmd_sweep(&config, &seeds, out.as_deref()),
        Command::Analyze { spec } => cmd_analyze(&spec),
        Command::CheckTrace { trace, n, f, epsilon } => cmd_check_trace(&trace, n, f, epsilon),
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig, Box<dyn Error>> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn cmd_run(config: &Path, seed: Option<u64>, out: Option<&Path>) -> Result<(), Box<dyn Error>> {
    let mut cfg = load_config(config)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let output = run_experiment(&cfg)?;
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("trace.log"), Trace::to_jsonl(&output.trace))?;
        fs::write(dir.join("metrics.csv"), output.metrics.to_csv())?;
        fs::write(dir.join("summary.json"), output.metrics.to_summary_json())?;
    }
    print_summary(&output.metrics);
    Ok(())
}

fn print_summary(metrics: &MetricsReport) {
    let s = &metrics.summary;
    println!(
        "mode={} seed={} ops={} incomplete={} restarts={} last_view={} \
         mean_latency_ms={:.3} p50={:.3} p95={:.3}",
        s.mode,
        s.seed,
        s.ops_completed,
        s.ops_incomplete,
        s.restarts,
        s.last_view,
        s.mean_latency_ms,
        s.p50_latency_ms,
        s.p95_latency_ms
    );
}

fn cmd_sweep(config: &Path, seeds: &str, out: Option<&Path>) -> Result<(), Box<dyn Error>> {
    let cfg = load_config(config)?;
    let (lo, hi) = parse_range(seeds)?;
    let mut summaries = Vec::new();
    let mut means = Vec::new();
    for seed in lo..=hi {
        let mut c = cfg.clone();
        c.seed = seed;
        let output = run_experiment(&c)?;
        let s = output.metrics.summary.clone();
        println!(
            "seed={} ops={} mean_latency_ms={:.3} last_view={}",
            seed, s.ops_completed, s.mean_latency_ms, s.last_view
        );
        means.push(s.mean_latency_ms);
        summaries.push(s);
    }
    let grand = means.iter().sum::<f64>() / means.len() as f64;
    println!("seeds={}..{} grand_mean_latency_ms={:.3}", lo, hi, grand);
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        let mut text = serde_json::to_string_pretty(&summaries)?;
        text.push('\n');
        fs::write(dir.join("sweep.json"), text)?;
    }
    Ok(())
}

fn parse_range(text: &str) -> Result<(u64, u64), Box<dyn Error>> {
    let Some((lo, hi)) = text.split_once("..") else {
        let single: u64 = text.parse()?;
        return Ok((single, single));
    };
    let lo: u64 = lo.parse()?;
    let hi: u64 = hi.parse()?;
    if hi < lo {
        return Err(format!("empty seed range {text}").into());
    }
    Ok((lo, hi))
}

fn cmd_analyze(spec: &Path) -> Result<(), Box<dyn Error>> {
    let text = fs::read_to_string(spec)?;
    let file: QuorumSpecFile = serde_json::from_str(&text)?;
    let (qs, rtts) = file.build()?;
    println!("nodes: {}", qs.nodes.len());
    let minimal = qs.minimized();
    println!("quorums: {} ({} minimal)", qs.quorums.len(), minimal.quorums.len());
    for q in &minimal.quorums {
        let ids: Vec<&str> = q.iter().map(|&i| qs.nodes[i].id.as_str()).collect();
        println!("  quorum: {{{}}}", ids.join(", "));
    }
    if let Some(rtts) = rtts {
        let latency = qs.quorum_latency(&rtts)?;
        println!("quorum latency: {latency} ms");
    }
    if qs.nodes.iter().all(|n| n.capacity.is_some()) {
        let capacity = qs.capacity(file.read_fraction)?;
        println!(
            "capacity (read_fraction={}): {:.3} ops/sec",
            file.read_fraction, capacity
        );
    }
    Ok(())
}

fn cmd_check_trace(path: &Path, n: usize, f: usize, epsilon: f64) -> Result<(), Box<dyn Error>> {
    let text = fs::read_to_string(path)?;
    let events = Trace::from_jsonl(&text)?;
    let sys = SystemConfig::new(n, f, epsilon)?;
    let report = check_protocol_invariants(&events, &sys);
    let installs = events
        .iter()
        .filter(|e| matches!(e, wabd::trace::TraceEvent::Install { .. }))
        .count();
    let horizon = events.last().map(|e| e.time()).unwrap_or(0);
    println!(
        "events={} installs={} horizon_ms={:.3}",
        events.len(),
        installs,
        horizon as f64 / ms(1) as f64
    );
    if report.ok() {
        println!("invariants: ok");
        Ok(())
    } else {
        for v in &report.violations {
            println!("violation at event {}: {}", v.at, v.message);
        }
        Err(format!("{} invariant violations", report.violations.len()).into())
    }
}
