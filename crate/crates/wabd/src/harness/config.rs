//! Experiment configuration: the JSON schema the CLI loads and the defaults
//! the evaluation setup uses (five servers, one tolerated crash, ten
//! closed-loop clients at a 0.5 read ratio, 200 s runs, 10 s latency epochs,
//! epsilon 0.1).

use crate::quorum::{ConfigError, SystemConfig};
use crate::trace::TraceLevel;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Full protocol: monitoring, pairwise reassignment, view changes.
    #[default]
    Weighted,
    /// Baseline: weights pinned to 1, no reassignment, no view changes.
    Static,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemParams {
    pub n: usize,
    pub f: usize,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClientParams {
    pub count: usize,
    pub read_ratio: f64,
}

impl Default for ClientParams {
    fn default() -> Self {
        ClientParams {
            count: 10,
            read_ratio: 0.5,
        }
    }
}

/// Link latency model. Each server has a characteristic round-trip `L`;
/// one-way latency between two processes is the mean of their halves, so a
/// client (characteristic 0) sees a round trip of exactly `L_j` to server
/// `j`, and servers `i, j` see `(L_i + L_j)` between each other. Every
/// `delta_ms` the characteristic values are reassigned (a seeded
/// permutation) when `shuffle` is on.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatencyParams {
    pub server_rtts_ms: Vec<f64>,
    #[serde(default)]
    pub delta_ms: u64,
    #[serde(default)]
    pub shuffle: bool,
    #[serde(default = "default_jitter")]
    pub jitter: f64,
}

fn default_jitter() -> f64 {
    0.1
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CrashSpec {
    pub server: usize,
    pub at_ms: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimerParams {
    #[serde(default = "default_view_timeout")]
    pub view_timeout_ms: u64,
    #[serde(default = "default_propose_interval")]
    pub propose_interval_ms: u64,
    #[serde(default = "default_ping_interval")]
    pub ping_interval_ms: u64,
    #[serde(default = "default_resend_interval")]
    pub resend_interval_ms: u64,
}

fn default_view_timeout() -> u64 {
    20_000
}
fn default_propose_interval() -> u64 {
    1_000
}
fn default_ping_interval() -> u64 {
    500
}
fn default_resend_interval() -> u64 {
    2_000
}

impl Default for TimerParams {
    fn default() -> Self {
        TimerParams {
            view_timeout_ms: default_view_timeout(),
            propose_interval_ms: default_propose_interval(),
            ping_interval_ms: default_ping_interval(),
            resend_interval_ms: default_resend_interval(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub system: SystemParams,
    #[serde(default)]
    pub clients: ClientParams,
    #[serde(default = "default_duration")]
    pub duration_ms: u64,
    #[serde(default)]
    pub mode: Mode,
    pub latency: LatencyParams,
    #[serde(default)]
    pub crashes: Vec<CrashSpec>,
    #[serde(default)]
    pub timers: TimerParams,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_max_views")]
    pub max_views: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub trace_level: TraceLevel,
}

fn default_duration() -> u64 {
    200_000
}
fn default_tau() -> f64 {
    0.05
}
fn default_max_views() -> u64 {
    64
}

#[derive(Debug, Error)]
pub enum ExperimentConfigError {
    #[error(transparent)]
    System(#[from] ConfigError),
    #[error("duration must be positive")]
    ZeroDuration,
    #[error("need at least one client")]
    NoClients,
    #[error("read_ratio {0} outside [0, 1]")]
    BadReadRatio(f64),
    #[error("latency profile has {got} entries for {need} servers")]
    BadLatencyProfile { got: usize, need: usize },
    #[error("jitter {0} outside [0, 1)")]
    BadJitter(f64),
    #[error("crash plan names server {0} outside the system")]
    BadCrashTarget(usize),
    #[error("crash plan kills {got} servers but f = {f}")]
    TooManyCrashes { got: usize, f: usize },
}

impl ExperimentConfig {
    /// Validates the experiment and returns the derived system config.
    pub fn system_config(&self) -> Result<SystemConfig, ExperimentConfigError> {
        let sys = SystemConfig::new(self.system.n, self.system.f, self.system.epsilon)?;
        if self.duration_ms == 0 {
            return Err(ExperimentConfigError::ZeroDuration);
        }
        if self.clients.count == 0 {
            return Err(ExperimentConfigError::NoClients);
        }
        if !(0.0..=1.0).contains(&self.clients.read_ratio) {
            return Err(ExperimentConfigError::BadReadRatio(self.clients.read_ratio));
        }
        if self.latency.server_rtts_ms.len() != sys.n {
            return Err(ExperimentConfigError::BadLatencyProfile {
                got: self.latency.server_rtts_ms.len(),
                need: sys.n,
            });
        }
        if !(0.0..1.0).contains(&self.latency.jitter) {
            return Err(ExperimentConfigError::BadJitter(self.latency.jitter));
        }
        for c in &self.crashes {
            if c.server >= sys.n {
                return Err(ExperimentConfigError::BadCrashTarget(c.server));
            }
        }
        if self.crashes.len() > sys.f {
            return Err(ExperimentConfigError::TooManyCrashes {
                got: self.crashes.len(),
                f: sys.f,
            });
        }
        Ok(sys)
    }

    /// The reference skewed topology used for baseline comparisons. All
    /// evaluation-style defaults apply: 5 servers, f = 1, epsilon 0.1, ten
    /// clients, static latencies.
    pub fn reference(mode: Mode, seed: u64) -> Self {
        ExperimentConfig {
            system: SystemParams {
                n: 5,
                f: 1,
                epsilon: 0.1,
            },
            clients: ClientParams::default(),
            duration_ms: 60_000,
            mode,
            latency: LatencyParams {
                server_rtts_ms: vec![20.0, 45.0, 100.0, 140.0, 180.0],
                delta_ms: 0,
                shuffle: false,
                jitter: 0.1,
            },
            crashes: Vec::new(),
            timers: TimerParams::default(),
            tau: 0.05,
            max_views: 64,
            seed,
            trace_level: TraceLevel::Protocol,
        }
    }
}
