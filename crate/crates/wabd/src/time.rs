//! Simulated time.
//!
//! Simulated clocks are integer nanoseconds so that event ordering and trace
//! output never depend on float comparison. Configuration and display use
//! milliseconds.

/// A point in simulated time, in nanoseconds since the start of the run.
pub type SimTime = u64;

pub const NANOS_PER_MS: u64 = 1_000_000;

pub fn ms(ms: u64) -> SimTime {
    ms * NANOS_PER_MS
}

/// Converts a (possibly fractional) millisecond latency to nanoseconds,
/// clamped to at least one nanosecond so no hop is ever instantaneous.
pub fn ms_f64(ms: f64) -> SimTime {
    let ns = (ms * NANOS_PER_MS as f64).round();
    if ns < 1.0 {
        1
    } else {
        ns as SimTime
    }
}

pub fn as_ms(t: SimTime) -> f64 {
    t as f64 / NANOS_PER_MS as f64
}
