//! Whole-trace protocol invariant checking.
//!
//! Over a run's trace this asserts, in one pass:
//!
//! * every server installs consecutive view indices starting at 1, each at
//!   most once (all servers walk the same single view sequence);
//! * every installed view respects the weight bounds: each reported weight
//!   strictly inside `(wl, wu)`, per-view totals no more than `n`;
//! * no phase completes its quorum in a view older than the last view
//!   installed anywhere at that moment, and none in a view newer than any
//!   installed;
//! * crashed servers stay silent.

use crate::quorum::SystemConfig;
use crate::trace::TraceEvent;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvariantKind {
    /// A per-server weight left the open interval (wl, wu).
    WeightBounds,
    /// A view's total weight exceeded n.
    WeightTotal,
    /// A server installed views out of sequence or twice.
    ViewSequence,
    /// A quorum completed in a view older than the installed view.
    StaleQuorum,
    /// A quorum completed in a view nobody had installed.
    FutureQuorum,
    /// A crashed server kept acting.
    CrashedActivity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantViolation {
    /// Index of the offending event in the trace.
    pub at: usize,
    pub kind: InvariantKind,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct InvariantReport {
    pub violations: Vec<InvariantViolation>,
}

impl InvariantReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn of_kind(&self, kind: InvariantKind) -> impl Iterator<Item = &InvariantViolation> {
        self.violations.iter().filter(move |v| v.kind == kind)
    }
}

pub fn check_protocol_invariants(events: &[TraceEvent], sys: &SystemConfig) -> InvariantReport {
    let mut report = InvariantReport::default();
    let mut last_installed: BTreeMap<usize, u64> = BTreeMap::new(); // server -> view
    let mut crashed: BTreeMap<usize, usize> = BTreeMap::new(); // server -> trace index
    let mut view_totals: BTreeMap<u64, (f64, usize)> = BTreeMap::new(); // view -> (sum, last event)
    let mut lastview: u64 = 0;

    for (i, ev) in events.iter().enumerate() {
        match ev {
            TraceEvent::Crash { process, .. } => {
                crashed.insert(*process, i);
            }
            TraceEvent::Install {
                server,
                view,
                weight,
                ..
            } => {
                if crashed.contains_key(server) {
                    report.violations.push(InvariantViolation {
                        at: i,
                        kind: InvariantKind::CrashedActivity,
                        message: format!("server {server} installed view {view} after crashing"),
                    });
                }
                let prev = last_installed.get(server).copied().unwrap_or(0);
                if *view != prev + 1 {
                    report.violations.push(InvariantViolation {
                        at: i,
                        kind: InvariantKind::ViewSequence,
                        message: format!(
                            "server {server} installed view {view} after view {prev}; \
                             installs must walk the sequence one view at a time"
                        ),
                    });
                }
                last_installed.insert(*server, *view);
                if !(sys.wl < *weight && *weight < sys.wu) {
                    report.violations.push(InvariantViolation {
                        at: i,
                        kind: InvariantKind::WeightBounds,
                        message: format!(
                            "server {server} weight {weight} in view {view} outside ({}, {})",
                            sys.wl, sys.wu
                        ),
                    });
                }
                let entry = view_totals.entry(*view).or_insert((0.0, i));
                entry.0 += *weight;
                entry.1 = i;
                if *view > lastview {
                    lastview = *view;
                }
            }
            TraceEvent::PhaseComplete { view, client, .. } => {
                if *view < lastview {
                    report.violations.push(InvariantViolation {
                        at: i,
                        kind: InvariantKind::StaleQuorum,
                        message: format!(
                            "client {client} completed a quorum in view {view} while \
                             view {lastview} was already installed"
                        ),
                    });
                }
                if *view > lastview {
                    report.violations.push(InvariantViolation {
                        at: i,
                        kind: InvariantKind::FutureQuorum,
                        message: format!(
                            "client {client} completed a quorum in view {view} which \
                             no server has installed"
                        ),
                    });
                }
            }
            _ => {}
        }
    }

    for (view, (total, at)) in &view_totals {
        if *total > sys.n as f64 + 1e-9 {
            report.violations.push(InvariantViolation {
                at: *at,
                kind: InvariantKind::WeightTotal,
                message: format!("total weight {total} in view {view} exceeds n = {}", sys.n),
            });
        }
    }
    report.violations.sort_by(|a, b| a.at.cmp(&b.at));
    report
}
