//! Linearizability checking of read/write register histories.
//!
//! The checker linearizes operations one at a time, backtracking when stuck
//! (Wing-Gong style), with two register-specific compressions: operations
//! group into per-client lanes (clients run one operation at a time, so a
//! lane's linearized set is always a prefix) and visited
//! (lane positions, register value) states are memoized, which keeps the
//! search near-linear on well-behaved histories.
//!
//! Per-client program order is respected; across clients only strict real
//! time (one operation completing before another is invoked) constrains the
//! order. Operations still in flight at the end are optional: a pending
//! write may or may not have taken effect, a pending read constrains
//! nothing.

use crate::abd::{is_bottom, OpKind, Value};
use crate::time::SimTime;
use std::collections::{BTreeMap, HashSet};

/// One client operation as recorded by the harness.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryEvent {
    pub client: u64,
    pub kind: OpKind,
    /// Value read (filled at completion) or value written.
    pub value: Value,
    pub invoke: SimTime,
    pub complete: Option<SimTime>,
    /// View the operation completed in.
    pub view: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LinearizabilityResult {
    Ok,
    Violation(LinViolation),
}

impl LinearizabilityResult {
    pub fn is_ok(&self) -> bool {
        matches!(self, LinearizabilityResult::Ok)
    }
}

/// Witness for a non-linearizable history: the operation at which the
/// smallest failing prefix ends, plus the operation it most directly
/// conflicts with (the write of the value it observed, when identifiable).
#[derive(Debug, Clone, PartialEq)]
pub struct LinViolation {
    /// Index into the input history.
    pub op: usize,
    pub conflicting: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone)]
struct Op {
    client: u64,
    kind: OpKind,
    value_id: u32,
    inv: SimTime,
    res: SimTime, // SimTime::MAX when in flight
    required: bool,
}

/// Decides whether the history is linearizable as a single atomic register.
pub fn check_linearizability(history: &[HistoryEvent]) -> LinearizabilityResult {
    if linearizable(history, None) {
        LinearizabilityResult::Ok
    } else {
        LinearizabilityResult::Violation(find_witness(history))
    }
}

/// Core decision procedure, optionally truncated at `cut`: operations
/// invoked after the cut are excluded, operations completing after it are
/// treated as still in flight.
fn linearizable(history: &[HistoryEvent], cut: Option<SimTime>) -> bool {
    let mut values: BTreeMap<&[u8], u32> = BTreeMap::new();
    let mut ops: Vec<Op> = Vec::new();
    for ev in history {
        if let Some(cut) = cut {
            if ev.invoke > cut {
                continue;
            }
        }
        let complete = match (ev.complete, cut) {
            (Some(c), Some(cut)) if c > cut => None,
            (c, _) => c,
        };
        if complete.is_none() && ev.kind == OpKind::Read {
            continue; // a read that returned nothing constrains nothing
        }
        let value_id = if is_bottom(&ev.value) {
            0
        } else {
            let next = values.len() as u32 + 1;
            *values.entry(ev.value.as_slice()).or_insert(next)
        };
        ops.push(Op {
            client: ev.client,
            kind: ev.kind,
            value_id,
            inv: ev.invoke,
            res: complete.unwrap_or(SimTime::MAX),
            required: complete.is_some(),
        });
    }
    let lanes = group_into_lanes(ops);
    Searcher::new(&lanes).run()
}

/// Groups operations into sequential lanes, one per client. A hand-built
/// history whose same-client operations overlap gets extra lanes (they are
/// then only real-time constrained, like distinct clients).
fn group_into_lanes(ops: Vec<Op>) -> Vec<Vec<Op>> {
    let mut per_client: BTreeMap<u64, Vec<Op>> = BTreeMap::new();
    for op in ops {
        per_client.entry(op.client).or_default().push(op);
    }
    let mut lanes: Vec<Vec<Op>> = Vec::new();
    for (_, mut client_ops) in per_client {
        client_ops.sort_by_key(|o| (o.inv, o.res));
        let first = lanes.len();
        for op in client_ops {
            let fit = lanes[first..]
                .iter_mut()
                .find(|lane| lane.last().map_or(false, |prev| prev.res <= op.inv));
            match fit {
                Some(lane) => lane.push(op),
                None => lanes.push(vec![op]),
            }
        }
    }
    lanes
}

struct Searcher<'a> {
    lanes: &'a [Vec<Op>],
    /// Per lane, how many leading operations must be linearized (the tail
    /// beyond this consists of optional in-flight writes).
    required: Vec<usize>,
    seen: HashSet<(Vec<u16>, u32)>,
    budget: u64,
}

impl<'a> Searcher<'a> {
    fn new(lanes: &'a [Vec<Op>]) -> Self {
        let required = lanes
            .iter()
            .map(|lane| lane.iter().rposition(|o| o.required).map_or(0, |p| p + 1))
            .collect();
        Searcher {
            lanes,
            required,
            seen: HashSet::new(),
            budget: 200_000_000,
        }
    }

    fn run(mut self) -> bool {
        let mut pos: Vec<u16> = vec![0; self.lanes.len()];
        self.dfs(&mut pos, 0)
    }

    fn dfs(&mut self, pos: &mut Vec<u16>, value: u32) -> bool {
        if pos
            .iter()
            .zip(&self.required)
            .all(|(&p, &req)| p as usize >= req)
        {
            return true;
        }
        self.budget = self
            .budget
            .checked_sub(1)
            .expect("linearizability search budget exhausted; history is pathological");
        // An operation may go next iff no other pending operation completed
        // before it was invoked. Within a lane operations are sequential, so
        // only lane heads matter.
        let min_res = (0..self.lanes.len())
            .filter_map(|l| self.lanes[l].get(pos[l] as usize).map(|o| o.res))
            .min()
            .unwrap_or(SimTime::MAX);
        for lane in 0..self.lanes.len() {
            let Some(op) = self.lanes[lane].get(pos[lane] as usize) else {
                continue;
            };
            if op.inv > min_res {
                continue;
            }
            let new_value = match op.kind {
                OpKind::Read => {
                    if op.value_id != value {
                        continue;
                    }
                    value
                }
                OpKind::Write => op.value_id,
            };
            pos[lane] += 1;
            if self.seen.insert((pos.clone(), new_value)) && self.dfs(pos, new_value) {
                return true;
            }
            pos[lane] -= 1;
        }
        false
    }
}

/// Finds the smallest failing prefix by completion time and names the
/// operation at its boundary. Linearizability is prefix-closed, so every
/// cut above the boundary fails too, making the boundary binary-searchable.
fn find_witness(history: &[HistoryEvent]) -> LinViolation {
    let mut cuts: Vec<SimTime> = history.iter().filter_map(|e| e.complete).collect();
    cuts.sort_unstable();
    cuts.dedup();
    let mut lo = 0usize;
    let mut hi = cuts.len().saturating_sub(1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if linearizable(history, Some(cuts[mid])) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    let cut = cuts.get(lo).copied().unwrap_or(SimTime::MAX);
    let boundary = history
        .iter()
        .position(|e| e.complete == Some(cut))
        .unwrap_or(0);
    let ev = &history[boundary];
    let conflicting = if ev.kind == OpKind::Read && !is_bottom(&ev.value) {
        history
            .iter()
            .position(|e| e.kind == OpKind::Write && e.value == ev.value)
    } else {
        None
    };
    let message = format!(
        "history stops being linearizable once the {} by client {} completing at {} is included",
        match ev.kind {
            OpKind::Read => "read",
            OpKind::Write => "write",
        },
        ev.client,
        ev.complete.unwrap_or(0),
    );
    LinViolation {
        op: boundary,
        conflicting,
        message,
    }
}
