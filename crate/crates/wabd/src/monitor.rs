//! Per-server latency scoring of peers.
//!
//! Each server keeps a smoothed round-trip score for every server in the
//! system, itself included: the ping loop probes the loopback link like any
//! other, so the owner's own entry is measured the same way as a peer's.
//! Scores feed the pairwise-reassignment conditions (who is slower than
//! whom) and the proposal-gating score shares.

use crate::quorum::ServerId;
use std::collections::BTreeMap;

/// Smoothing factor of the exponentially weighted moving average.
pub const EWMA_ALPHA: f64 = 0.2;

/// One server's view of everyone's latency, owner included.
///
/// Tables at different servers may disagree; each one is only ever read by
/// its owner.
#[derive(Debug, Clone)]
pub struct LatencyScoreTable {
    owner: ServerId,
    scores: BTreeMap<ServerId, f64>,
}

impl LatencyScoreTable {
    pub fn new(owner: ServerId) -> Self {
        LatencyScoreTable {
            owner,
            scores: BTreeMap::new(),
        }
    }

    pub fn owner(&self) -> ServerId {
        self.owner
    }

    /// Folds one round-trip sample (milliseconds) into `peer`'s score.
    ///
    /// The first sample initializes the score directly; later samples move it
    /// by `EWMA_ALPHA`. Passing the owner's own id records a loopback sample,
    /// which is how the self-score is maintained.
    pub fn record_rtt(&mut self, peer: ServerId, rtt_ms: f64) {
        debug_assert!(rtt_ms >= 0.0 && rtt_ms.is_finite());
        match self.scores.get_mut(&peer) {
            Some(score) => *score = EWMA_ALPHA * rtt_ms + (1.0 - EWMA_ALPHA) * *score,
            None => {
                self.scores.insert(peer, rtt_ms);
            }
        }
    }

    pub fn score(&self, id: ServerId) -> Option<f64> {
        self.scores.get(&id).copied()
    }

    pub fn self_score(&self) -> Option<f64> {
        self.score(self.owner)
    }

    /// Overwrites a score directly. Intended for tests and staged scenarios.
    pub fn set_score(&mut self, id: ServerId, score: f64) {
        self.scores.insert(id, score);
    }

    /// All peers scored slower than the owner, slowest first.
    ///
    /// Strict comparison: peers tied with the owner are excluded. Equal-score
    /// peers order by ascending id so the result is deterministic.
    pub fn slower_peers(&self) -> Vec<ServerId> {
        let own = match self.self_score() {
            Some(s) => s,
            None => return Vec::new(),
        };
        let mut out: Vec<(ServerId, f64)> = self
            .scores
            .iter()
            .filter(|&(&id, &score)| id != self.owner && own < score)
            .map(|(&id, &score)| (id, score))
            .collect();
        out.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        out.into_iter().map(|(id, _)| id).collect()
    }

    /// `id`'s share of the table's total score, in [0, 1].
    ///
    /// Shares are the unit the proposal gate compares: persistent latency
    /// gaps show up as share gaps regardless of the absolute score scale.
    pub fn score_share(&self, id: ServerId) -> Option<f64> {
        let total: f64 = self.scores.values().sum();
        if total <= 0.0 {
            return None;
        }
        self.score(id).map(|s| s / total)
    }

    /// Number of scored servers.
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Snapshot of all scores, for trace logging.
    pub fn entries(&self) -> impl Iterator<Item = (ServerId, f64)> + '_ {
        self.scores.iter().map(|(&id, &s)| (id, s))
    }
}
