//! One full weighted run with shifting link latencies and a mid-run server
//! crash: prints the view-install timeline with per-server weights, the
//! latency summary, and the verdicts of the linearizability and protocol
//! invariant checkers.
//!
//! Run with: cargo run --example run_simulation [seed]

use wabd::harness::{
    check_linearizability, check_protocol_invariants, run_experiment, ExperimentConfig, Mode,
};
use wabd::harness::config::CrashSpec;
use wabd::time::ms;

fn main() {
    let seed: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(7);

    let mut cfg = ExperimentConfig::reference(Mode::Weighted, seed);
    cfg.duration_ms = 120_000;
    cfg.latency.delta_ms = 10_000; // reshuffle which server is fast every 10 s
    cfg.latency.shuffle = true;
    cfg.crashes = vec![CrashSpec {
        server: 2,
        at_ms: 50_000,
    }];

    let sys = cfg.system_config().unwrap();
    let out = run_experiment(&cfg).unwrap();

    println!("view installs (server weights as each server adopts the view):");
    let mut current = 0;
    for i in &out.metrics.installs {
        if i.view != current {
            current = i.view;
            println!("-- view {current} --");
        }
        println!("  t={:>9.1} ms  s{}  weight {:.1}", i.time_ms, i.server + 1, i.weight);
    }

    let s = &out.metrics.summary;
    println!();
    println!("ops completed: {} (incomplete at end: {})", s.ops_completed, s.ops_incomplete);
    println!("restarts:      {}", s.restarts);
    println!(
        "quorum latency ms: mean {:.2}, p50 {:.2}, p95 {:.2}, max {:.2}",
        s.mean_latency_ms, s.p50_latency_ms, s.p95_latency_ms, s.max_latency_ms
    );
    if let Some(late) = out.metrics.mean_latency_completed_after(ms(60_000)) {
        println!("mean after 60 s:   {late:.2}");
    }

    println!();
    let lin = check_linearizability(&out.history);
    println!("linearizability: {}", if lin.is_ok() { "ok" } else { "VIOLATED" });
    let inv = check_protocol_invariants(&out.trace, &sys);
    println!(
        "protocol invariants: {}",
        if inv.ok() {
            "ok".to_string()
        } else {
            format!("{} violations", inv.violations.len())
        }
    );
    for v in inv.violations.iter().take(5) {
        println!("  {}", v.message);
    }
}
