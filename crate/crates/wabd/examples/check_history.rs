//! The linearizability checker on hand-built histories: a concurrent but
//! correct history, then one with a stale read, showing the violation
//! witness.
//!
//! Run with: cargo run --example check_history

use wabd::abd::OpKind;
use wabd::harness::lin::{check_linearizability, HistoryEvent, LinearizabilityResult};

fn op(client: u64, kind: OpKind, value: &str, invoke: u64, complete: u64) -> HistoryEvent {
    HistoryEvent {
        client,
        kind,
        value: value.as_bytes().to_vec(),
        invoke,
        complete: Some(complete),
        view: None,
    }
}

fn describe(h: &HistoryEvent) -> String {
    let val = String::from_utf8_lossy(&h.value);
    let kind = match h.kind {
        OpKind::Read => "read ->",
        OpKind::Write => "write",
    };
    format!(
        "client {} {} {:?} during [{}, {}]",
        h.client,
        kind,
        val,
        h.invoke,
        h.complete.unwrap_or(u64::MAX)
    )
}

fn report(label: &str, history: &[HistoryEvent]) {
    println!("{label}:");
    for h in history {
        println!("  {}", describe(h));
    }
    match check_linearizability(history) {
        LinearizabilityResult::Ok => println!("  => linearizable\n"),
        LinearizabilityResult::Violation(v) => {
            println!("  => NOT linearizable");
            println!("     {}", v.message);
            println!("     offending op: {}", describe(&history[v.op]));
            if let Some(c) = v.conflicting {
                println!("     conflicts with: {}", describe(&history[c]));
            }
            println!();
        }
    }
}

fn main() {
    use OpKind::{Read, Write};

    // Two writers race; both readers are consistent with the order b, a.
    let fine = vec![
        op(1, Write, "a", 0, 100),
        op(2, Write, "b", 0, 100),
        op(3, Read, "b", 10, 20),
        op(3, Read, "a", 30, 40),
    ];
    report("concurrent writers, consistent readers", &fine);

    // Value "a" was overwritten by "b" and read as "b"; a later read must
    // not travel back to "a".
    let stale = vec![
        op(1, Write, "a", 0, 10),
        op(1, Write, "b", 20, 30),
        op(2, Read, "b", 40, 50),
        op(3, Read, "a", 60, 70),
    ];
    report("stale read after a fresh read", &stale);
}
