//! Weight bounds, the weighted-majority quorum predicate, and system
//! configuration validation.
//!
//! A weight assignment is acceptable when the total stays bounded by `n` and
//! every individual weight stays strictly inside `(wl, wu)`. Those two bounds
//! are what make the system survive `f` crashes: even if the `f` heaviest
//! servers fail, the remaining `n - f` servers each hold more than `wl`
//! weight and `(n - f) * wl > n / 2`, so a quorum of correct servers always
//! exists.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Id of a server process. Values are dense indices `0..n`.
pub type ServerId = usize;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("n must be at least 1 (got {0})")]
    TooFewServers(usize),
    #[error("f must be at least 1 (weight upper bound n/(2f) is undefined for f = 0)")]
    ZeroFailures,
    #[error("2f + 1 = {given} exceeds n = {n}")]
    TooManyFailures { given: usize, n: usize },
    #[error("weight upper bound wu = {wu} is below 1; no minority quorum is possible")]
    UpperBoundBelowOne { wu: f64 },
    #[error("epsilon {epsilon} must be positive")]
    NonPositiveEpsilon { epsilon: f64 },
    #[error("epsilon {epsilon} must be below wu - 1 = {limit}; a server at the default weight could never accept a transfer")]
    EpsilonTooLarge { epsilon: f64, limit: f64 },
}

/// Static system parameters: server count, failure bound, and the derived
/// weight bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Number of servers.
    pub n: usize,
    /// Maximum number of crash failures tolerated.
    pub f: usize,
    /// Weight quantum moved by one pairwise reassignment.
    pub epsilon: f64,
    /// Per-server weight lower bound, `n / (2(n - f))`.
    pub wl: f64,
    /// Per-server weight upper bound, `n / (2f)`.
    pub wu: f64,
}

impl SystemConfig {
    /// Builds a configuration from `(n, f, epsilon)`, deriving the weight
    /// bounds and rejecting parameter combinations that cannot keep a live
    /// weighted quorum through `f` crashes.
    pub fn new(n: usize, f: usize, epsilon: f64) -> Result<Self, ConfigError> {
        if n < 1 {
            return Err(ConfigError::TooFewServers(n));
        }
        if f == 0 {
            return Err(ConfigError::ZeroFailures);
        }
        if 2 * f + 1 > n {
            return Err(ConfigError::TooManyFailures { given: 2 * f + 1, n });
        }
        let nf = n as f64;
        let wl = nf / (2.0 * (n - f) as f64);
        let wu = nf / (2.0 * f as f64);
        if wu < 1.0 {
            return Err(ConfigError::UpperBoundBelowOne { wu });
        }
        if epsilon <= 0.0 {
            return Err(ConfigError::NonPositiveEpsilon { epsilon });
        }
        if epsilon >= wu - 1.0 {
            return Err(ConfigError::EpsilonTooLarge {
                epsilon,
                limit: wu - 1.0,
            });
        }
        debug_assert!(wl < 1.0 && 1.0 < wu);
        Ok(SystemConfig { n, f, epsilon, wl, wu })
    }

    /// The quorum threshold: a set of servers is a quorum when its total
    /// weight strictly exceeds this.
    pub fn quorum_threshold(&self) -> f64 {
        self.n as f64 / 2.0
    }

    /// True iff `total_weight` clears the weighted-majority threshold.
    pub fn is_weighted_quorum(&self, total_weight: f64) -> bool {
        total_weight > self.quorum_threshold()
    }

    /// Validates a full weight assignment: exactly `n` entries, total bounded
    /// by `n`, and every weight strictly inside `(wl, wu)`.
    pub fn check_weight_assignment(&self, weights: &BTreeMap<ServerId, f64>) -> bool {
        if weights.len() != self.n {
            return false;
        }
        // Tiny slack on the total absorbs f64 noise from summing +/- epsilon
        // deltas; individual bounds stay exact strict comparisons since legal
        // weights sit a full epsilon away from the bounds.
        let total: f64 = weights.values().sum();
        total <= self.n as f64 + 1e-9
            && weights.values().all(|&w| self.wl < w && w < self.wu)
    }
}
