//! Head-to-head comparison on the reference skewed topology (server RTTs
//! 20/45/100/140/180 ms): static unit weights vs adaptive weighted quorums,
//! same seeds, same workload. Prints per-seed post-convergence means and the
//! aggregate improvement.
//!
//! Run with: cargo run --example static_vs_weighted [seeds]

use wabd::harness::{run_experiment, ExperimentConfig, Mode};
use wabd::time::ms;

fn main() {
    let seeds: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(10);
    let cutoff = ms(30_000);

    let mut weighted_means = Vec::new();
    let mut static_means = Vec::new();
    println!("seed  weighted_ms  static_ms  improvement");
    for seed in 0..seeds {
        let wcfg = ExperimentConfig::reference(Mode::Weighted, seed);
        let scfg = ExperimentConfig::reference(Mode::Static, seed);
        let w = run_experiment(&wcfg).expect("valid config");
        let s = run_experiment(&scfg).expect("valid config");
        let wm = w.metrics.mean_latency_completed_after(cutoff).unwrap();
        let sm = s.metrics.mean_latency_completed_after(cutoff).unwrap();
        println!(
            "{seed:<5} {wm:<12.2} {sm:<10.2} {:.1}%",
            (1.0 - wm / sm) * 100.0
        );
        weighted_means.push(wm);
        static_means.push(sm);
    }
    let avg = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (w, s) = (avg(&weighted_means), avg(&static_means));
    println!();
    println!("mean post-convergence quorum latency over {seeds} seeds:");
    println!("  weighted: {w:.2} ms");
    println!("  static:   {s:.2} ms");
    println!("  improvement: {:.1}%", (1.0 - w / s) * 100.0);
}
