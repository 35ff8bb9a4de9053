//! Weighted atomic read/write storage with consensus-free weight
//! reassignment, plus the tooling to study it.
//!
//! The protocol stack replicates a single register over `n` servers with
//! ABD-style two-phase reads and writes, where a quorum is any server set
//! whose *weight* exceeds `n/2`. Weights adapt to observed latencies without
//! consensus: servers trade fixed `epsilon` weight quanta pairwise for the
//! next view ([`pwr`]), and a timeout-driven view changer installs views one
//! at a time behind a weighted-majority state synchronization
//! ([`view_changer`]). Faster servers accumulate weight, so quorums shrink
//! toward the fast minority and quorum latency drops, while per-server
//! weight bounds keep any `f` crashes survivable ([`quorum`]).
//!
//! Everything runs on a deterministic discrete-event simulator ([`simnet`]):
//! fixed seed plus fixed configuration replays byte-identically. The
//! [`harness`] builds full experiments from JSON configs, records operation
//! histories and protocol traces, checks linearizability and protocol
//! invariants, and emits metrics. [`analysis`] answers the static questions
//! (quorum latency and capacity of simple vs weighted majority systems).
//!
//! See the `examples/` directory for one runnable walkthrough per
//! capability, and the thin `wabd` binary for the `run` / `sweep` /
//! `analyze` / `check-trace` command-line surface.

pub mod abd;
pub mod analysis;
pub mod harness;
pub mod message;
pub mod monitor;
pub mod pwr;
pub mod quorum;
pub mod simnet;
pub mod time;
pub mod trace;
pub mod view_changer;
pub mod views;

pub use abd::{ClientState, OpKind, RegisterState, Value};
pub use analysis::{smqs, wmqs, QuorumSystem};
pub use harness::{
    check_linearizability, check_protocol_invariants, run_experiment, ExperimentConfig, Mode,
};
pub use monitor::LatencyScoreTable;
pub use pwr::{PwrRecord, PwrState};
pub use quorum::{ConfigError, ServerId, SystemConfig};
pub use simnet::{Envelope, LatencySchedule, SimNet};
pub use trace::{Trace, TraceEvent, TraceLevel};
pub use view_changer::ViewChangerState;
pub use views::{more_up_to_date, ViewId, INITIAL_VIEW};
