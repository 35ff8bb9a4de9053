//! Static quorum-system analysis of a 4-node cluster with skewed round-trip
//! times (20/45/100/140 ms) and capacities (1000/800/400/200 ops/sec):
//! simple majority vs weighted majority, latency and capacity side by side.
//!
//! Run with: cargo run --example analyze_quorums

use wabd::analysis::{smqs, wmqs, QuorumSystem};

const RTTS: [f64; 4] = [20.0, 45.0, 100.0, 140.0];
const CAPS: [f64; 4] = [1000.0, 800.0, 400.0, 200.0];
const WEIGHTS: [f64; 4] = [1.4, 1.1, 0.9, 0.6];

fn show(label: &str, mut qs: QuorumSystem) {
    for (node, &c) in qs.nodes.iter_mut().zip(&CAPS) {
        node.capacity = Some(c);
    }
    println!("{label}:");
    for q in &qs.quorums {
        let ids: Vec<&str> = q.iter().map(|&i| qs.nodes[i].id.as_str()).collect();
        let weight: f64 = q
            .iter()
            .map(|&i| qs.nodes[i].weight.unwrap_or(1.0))
            .sum();
        println!("  {{{}}} (weight {weight:.1})", ids.join(", "));
    }
    let latency = qs.quorum_latency(&RTTS).unwrap();
    let capacity = qs.capacity(1.0).unwrap();
    println!("  quorum latency: {latency} ms");
    println!("  capacity:       {capacity:.1} ops/sec");
    println!();
}

fn main() {
    println!("client RTTs: {RTTS:?} ms");
    println!("node capacities: {CAPS:?} ops/sec");
    println!();

    // A strict majority needs 3 of 4 nodes, so the 100 ms node is always in
    // the critical path.
    show("simple majority quorums", smqs(4));

    // With weights 1.4/1.1/0.9/0.6 the two fastest nodes already carry
    // 2.5 > 4/2, so a quorum finishes in 45 ms.
    show("weighted majority quorums", wmqs(&WEIGHTS));

    // Capacity depends on which quorums the strategy may pick. Dropping the
    // {p1, p3} quorum forces p2 into every quorum, capping throughput at
    // p2's 800 ops/sec.
    let mut constrained = wmqs(&WEIGHTS);
    constrained.quorums.retain(|q| q.contains(&1));
    show("weighted majority, p2 in every quorum", constrained);
}
