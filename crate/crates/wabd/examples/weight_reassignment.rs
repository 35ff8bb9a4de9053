//! Staged walkthrough of pairwise weight reassignment across one view
//! change, driven directly through the protocol state machines (no network).
//!
//! Five servers sit in view v1 with latencies 20/45/100/140/180 ms. The
//! fastest two collect weight for the upcoming view v2: s1 receives one
//! epsilon each from s4 and s5, s2 asks s5 for one more. s5's second accept
//! reaches s2 only after s2 has begun installing v2, so that transfer is
//! lost: the sender already gave it up, the receiver may no longer count it,
//! and v2's total weight ends at n - epsilon.
//!
//! Run with: cargo run --example weight_reassignment

use wabd::monitor::LatencyScoreTable;
use wabd::pwr::PwrState;
use wabd::quorum::SystemConfig;
use wabd::view_changer::ViewChangerState;
use wabd::views::ViewId;
use wabd::RegisterState;

const LATENCIES: [f64; 5] = [20.0, 45.0, 100.0, 140.0, 180.0];

/// A converged score table: loopback round trips measure 2 L and a peer
/// round trip measures L_own + L_peer.
fn table(owner: usize) -> LatencyScoreTable {
    let mut t = LatencyScoreTable::new(owner);
    for (peer, &l) in LATENCIES.iter().enumerate() {
        let rtt = if peer == owner {
            2.0 * l
        } else {
            LATENCIES[owner] + l
        };
        t.record_rtt(peer, rtt);
    }
    t
}

fn print_weights(label: &str, pwr: &[PwrState], view: ViewId) {
    let weights: Vec<f64> = pwr.iter().map(|p| p.get_weight(view)).collect();
    let total: f64 = weights.iter().sum();
    let rendered: Vec<String> = weights.iter().map(|w| format!("{w:.1}")).collect();
    println!("{label:<44} [{}]  total {total:.1}", rendered.join(", "));
}

fn main() {
    let sys = SystemConfig::new(5, 1, 0.1).unwrap();
    let v1 = ViewId(1);
    let v2 = v1.succ();
    let tau = 0.05;

    let tables: Vec<LatencyScoreTable> = (0..5).map(table).collect();
    let mut pwr: Vec<PwrState> = (0..5).map(PwrState::new).collect();
    let mut vc: Vec<ViewChangerState> = (0..5).map(|i| ViewChangerState::new_at(i, v1)).collect();
    let mut regs: Vec<RegisterState> = (0..5).map(|_| RegisterState::new()).collect();
    let clean = |vc: &ViewChangerState| vc.dirty_views().clone();

    println!("servers s1..s5, latencies {LATENCIES:?} ms, epsilon 0.1, view v1 installed");
    println!();
    print_weights("default weights for v2", &pwr, v2);

    // s1 asks the two slowest qualifying peers for one epsilon each.
    for _ in 0..2 {
        let (target, view) = pwr[0]
            .try_propose(v1, &clean(&vc[0]), &tables[0], &sys, tau)
            .expect("s1 qualifies");
        let accepted = pwr[target].handle_propose(
            0,
            view,
            sys.epsilon,
            v1,
            &clean(&vc[target]),
            &tables[target],
            &sys,
        );
        assert_eq!(accepted, Some(v2));
        pwr[0].handle_accept(target, view, sys.epsilon, v1, &clean(&vc[0]));
        println!("s1 <- s{}: proposed and accepted for v2", target + 1);
    }

    // s2 asks s5; the accept will arrive too late.
    let (target, view) = pwr[1]
        .try_propose(v1, &clean(&vc[1]), &tables[1], &sys, tau)
        .expect("s2 qualifies");
    assert_eq!(target, 4);
    let accepted = pwr[4].handle_propose(
        1,
        view,
        sys.epsilon,
        v1,
        &clean(&vc[4]),
        &tables[4],
        &sys,
    );
    assert_eq!(accepted, Some(v2));
    println!("s2 <- s5: proposed and accepted, accept still in flight");
    println!();
    print_weights("weights for v2 before the view change", &pwr, v2);

    // The view change to v2 begins everywhere: each server marks v2 dirty
    // and broadcasts its register state with its v1 weight.
    let mut updates = Vec::new();
    for i in 0..5 {
        vc[i].handle_change_view(v2);
        let started = vc[i]
            .maybe_start_change(&regs[i], pwr[i].get_weight(v1))
            .expect("change starts");
        updates.push(started.update);
    }

    // Only now does s5's accept reach s2: v2 is dirty, the epsilon is lost.
    pwr[1].handle_accept(4, v2, sys.epsilon, v1, &clean(&vc[1]));
    println!("s2 receives the late accept after joining the v2 change: dropped");
    println!();

    for i in 0..5 {
        for u in &updates {
            vc[i].handle_state_update(u.clone());
        }
        let installed = vc[i].try_install(&mut regs[i], &sys).expect("majority");
        assert_eq!(installed.view, v2);
        pwr[i].prune(v2);
    }
    println!("all servers install v2");
    print_weights("weights in v2 (1+2e, 1, 1, 1-e, 1-2e)", &pwr, v2);
    println!();
    println!("one epsilon left the system with the lost transfer; totals only ever shrink.");
}
