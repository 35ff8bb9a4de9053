//! Trace log records.
//!
//! A run produces an ordered list of trace events; serialized as JSON lines
//! they form the trace log consumed by `check-trace` and the determinism
//! checks. Protocol-level events are always recorded; per-message send and
//! delivery records only at the full level.

use crate::time::SimTime;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TraceLevel {
    /// Installs, view changes, phase completions, operations, crashes.
    #[default]
    Protocol,
    /// Everything, including every send and delivery.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "ev", rename_all = "snake_case")]
pub enum TraceEvent {
    Send {
        t: SimTime,
        src: usize,
        dst: usize,
        kind: String,
        info: String,
    },
    Deliver {
        t: SimTime,
        src: usize,
        dst: usize,
        kind: String,
        info: String,
    },
    Crash {
        t: SimTime,
        process: usize,
    },
    /// A server began uninstalling `view - 1` to install `view`.
    ChangeStarted {
        t: SimTime,
        server: usize,
        view: u64,
    },
    /// A server adopted `view` as current; `weight` is its own weight there.
    Install {
        t: SimTime,
        server: usize,
        view: u64,
        weight: f64,
    },
    /// A server's latency score table, dumped at install time.
    Scores {
        t: SimTime,
        server: usize,
        scores: Vec<(usize, f64)>,
    },
    /// A client phase gathered a weighted quorum.
    PhaseComplete {
        t: SimTime,
        client: u64,
        op: u64,
        phase: u8,
        view: u64,
        responders: u32,
        started_at: SimTime,
    },
    OpInvoked {
        t: SimTime,
        client: u64,
        op: u64,
        kind: String,
    },
    OpCompleted {
        t: SimTime,
        client: u64,
        op: u64,
        kind: String,
        view: u64,
        restarts: u32,
    },
}

impl TraceEvent {
    pub fn time(&self) -> SimTime {
        match self {
            TraceEvent::Send { t, .. }
            | TraceEvent::Deliver { t, .. }
            | TraceEvent::Crash { t, .. }
            | TraceEvent::ChangeStarted { t, .. }
            | TraceEvent::Install { t, .. }
            | TraceEvent::Scores { t, .. }
            | TraceEvent::PhaseComplete { t, .. }
            | TraceEvent::OpInvoked { t, .. }
            | TraceEvent::OpCompleted { t, .. } => *t,
        }
    }
}

/// Append-only event log with a verbosity level.
#[derive(Debug)]
pub struct Trace {
    level: TraceLevel,
    events: Vec<TraceEvent>,
}

impl Trace {
    pub fn new(level: TraceLevel) -> Self {
        Trace {
            level,
            events: Vec::new(),
        }
    }

    pub fn full(&self) -> bool {
        self.level == TraceLevel::Full
    }

    pub fn push(&mut self, ev: TraceEvent) {
        self.events.push(ev);
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn into_events(self) -> Vec<TraceEvent> {
        self.events
    }

    /// Serializes the log as JSON lines.
    pub fn to_jsonl(events: &[TraceEvent]) -> String {
        let mut out = String::new();
        for ev in events {
            out.push_str(&serde_json::to_string(ev).expect("trace events serialize"));
            out.push('\n');
        }
        out
    }

    /// Parses a JSON-lines trace log.
    pub fn from_jsonl(text: &str) -> Result<Vec<TraceEvent>, serde_json::Error> {
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect()
    }
}
