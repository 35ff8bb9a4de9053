//! Pairwise weight reassignment.
//!
//! Weights are per-view: every server starts each view at the default weight
//! 1 and may shift it for the *succeeding* view by trading fixed `epsilon`
//! quanta with one peer at a time. A transfer is a propose/accept exchange
//! initiated by the would-be receiver, with matching guards on both sides:
//!
//! * view currency — the transfer targets the proposer's succeeding view,
//!   and the acceptor's succeeding view is no newer than it;
//! * no participation — neither side has begun installing that view (the
//!   dirty set freezes a view's weights once its installation starts);
//! * latency order — weight only flows toward the lower latency score;
//! * bounds — the receiver stays below `wu` counting requests still in
//!   flight, the sender stays strictly above `wl`.
//!
//! An accept that arrives after the receiver dirtied the view is dropped on
//! the receiver side while the sender already recorded its decrement, so that
//! `epsilon` is lost from the view's total. Totals therefore only ever shrink
//! below `n`, never grow.

use crate::monitor::LatencyScoreTable;
use crate::quorum::{ServerId, SystemConfig};
use crate::views::ViewId;
use std::collections::BTreeSet;

/// One pairwise weight reassignment: `receiver` gains and `sender` loses
/// `|delta| = epsilon` for `view`. Each side stores its own copy with the
/// sign from its perspective.
#[derive(Debug, Clone, PartialEq)]
pub struct PwrRecord {
    pub receiver: ServerId,
    pub sender: ServerId,
    pub view: ViewId,
    pub delta: f64,
}

/// Per-server reassignment state: recorded transfers and proposals awaiting
/// an accept.
#[derive(Debug, Clone)]
pub struct PwrState {
    owner: ServerId,
    pwrs: Vec<PwrRecord>,
    pwr_requests: Vec<PwrRecord>,
}

impl PwrState {
    pub fn new(owner: ServerId) -> Self {
        PwrState {
            owner,
            pwrs: Vec::new(),
            pwr_requests: Vec::new(),
        }
    }

    pub fn owner(&self) -> ServerId {
        self.owner
    }

    /// The owner's weight in `view`: the default 1 plus all recorded deltas
    /// for that view.
    pub fn get_weight(&self, view: ViewId) -> f64 {
        1.0 + self
            .pwrs
            .iter()
            .filter(|r| r.view == view)
            .map(|r| r.delta)
            .sum::<f64>()
    }

    /// Total weight of proposals for `view` still awaiting an accept.
    pub fn get_requested_weight(&self, view: ViewId) -> f64 {
        self.pwr_requests
            .iter()
            .filter(|r| r.view == view)
            .map(|r| r.delta)
            .sum()
    }

    /// Attempts to start one transfer toward the owner for the succeeding
    /// view. Returns the chosen peer and the view to propose for, or `None`
    /// when some receiver-side condition fails.
    ///
    /// Targets are the slower peers, slowest first, skipping peers whose
    /// score share does not exceed the owner's by more than `tau` (the
    /// oscillation damper) and peers already proposed to or already recorded
    /// for this view. One call emits at most one proposal.
    pub fn try_propose(
        &mut self,
        cview: ViewId,
        dirty: &BTreeSet<ViewId>,
        table: &LatencyScoreTable,
        config: &SystemConfig,
        tau: f64,
    ) -> Option<(ServerId, ViewId)> {
        let view = cview.succ();
        // no transfers for a view this server already participates in
        if dirty.contains(&view) {
            return None;
        }
        // upper bound, counting weight already requested but not yet answered
        if self.get_weight(view) + self.get_requested_weight(view) + config.epsilon >= config.wu {
            return None;
        }
        // slower peers only, filtered by the share-margin gate and
        // per-(view, target) dedup
        let own_share = table.score_share(self.owner)?;
        let target = table.slower_peers().into_iter().find(|&peer| {
            let margin_ok = table
                .score_share(peer)
                .map_or(false, |s| s - own_share > tau);
            margin_ok
                && !self
                    .pwr_requests
                    .iter()
                    .any(|r| r.view == view && r.sender == peer)
                && !self
                    .pwrs
                    .iter()
                    .any(|r| r.view == view && r.receiver == self.owner && r.sender == peer)
        })?;
        self.pwr_requests.push(PwrRecord {
            receiver: self.owner,
            sender: target,
            view,
            delta: config.epsilon,
        });
        Some((target, view))
    }

    /// Processes a proposal from `from` asking this server to give up
    /// `epsilon` for `view`. Returns the view to acknowledge when all
    /// sender-side conditions hold; refusals are silent.
    pub fn handle_propose(
        &mut self,
        from: ServerId,
        view: ViewId,
        epsilon: f64,
        cview: ViewId,
        dirty: &BTreeSet<ViewId>,
        table: &LatencyScoreTable,
        config: &SystemConfig,
    ) -> Option<ViewId> {
        // the view must be as up to date as this server's succeeding view
        if view < cview.succ() {
            return None;
        }
        // no participation in that view yet
        if dirty.contains(&view) {
            return None;
        }
        // the proposer must look faster than this server
        let proposer = table.score(from)?;
        let own = table.self_score()?;
        if proposer >= own {
            return None;
        }
        // stay strictly above the lower bound after the decrement
        if config.wl >= self.get_weight(view) - epsilon {
            return None;
        }
        self.insert_record(PwrRecord {
            receiver: from,
            sender: self.owner,
            view,
            delta: -epsilon,
        });
        Some(view)
    }

    /// Processes an accept from `from` for `view`. The matching pending
    /// request is removed unconditionally; the increment is only recorded
    /// when the view is still the succeeding view and not dirty, so a
    /// late accept loses its `epsilon` from the view total.
    pub fn handle_accept(
        &mut self,
        from: ServerId,
        view: ViewId,
        epsilon: f64,
        cview: ViewId,
        dirty: &BTreeSet<ViewId>,
    ) {
        self.pwr_requests
            .retain(|r| !(r.view == view && r.sender == from));
        if cview.succ() == view && !dirty.contains(&view) {
            self.insert_record(PwrRecord {
                receiver: self.owner,
                sender: from,
                view,
                delta: epsilon,
            });
        }
    }

    /// Drops records for views that can no longer matter: recorded transfers
    /// older than `cview` and pending requests for views at or below it.
    pub fn prune(&mut self, cview: ViewId) {
        self.pwrs.retain(|r| r.view >= cview);
        self.pwr_requests.retain(|r| r.view > cview);
    }

    pub fn pending_requests(&self, view: ViewId) -> usize {
        self.pwr_requests.iter().filter(|r| r.view == view).count()
    }

    pub fn records(&self) -> &[PwrRecord] {
        &self.pwrs
    }

    // Set semantics: one record per (receiver, sender, view) triple.
    fn insert_record(&mut self, rec: PwrRecord) {
        let dup = self.pwrs.iter().any(|r| {
            r.receiver == rec.receiver && r.sender == rec.sender && r.view == rec.view
        });
        if !dup {
            self.pwrs.push(rec);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::views::INITIAL_VIEW;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    const EPS: f64 = 0.1;

    fn config5() -> SystemConfig {
        SystemConfig::new(5, 1, EPS).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    /// Table where server ids 0.. have the given characteristic latencies:
    /// the owner's self score is 2*L and a peer's score is L_own + L_peer.
    fn table(owner: ServerId, lats: &[f64]) -> LatencyScoreTable {
        let mut t = LatencyScoreTable::new(owner);
        for (id, &l) in lats.iter().enumerate() {
            let score = if id == owner { 2.0 * l } else { lats[owner] + l };
            t.set_score(id, score);
        }
        t
    }

    #[test]
    fn default_weight_is_one() {
        let st = PwrState::new(0);
        assert_eq!(st.get_weight(INITIAL_VIEW), 1.0);
        assert_eq!(st.get_weight(ViewId(7)), 1.0);
    }

    #[test]
    fn weight_sums_matching_view_records() {
        let v2 = ViewId(2);
        let mut st = PwrState::new(0);
        st.insert_record(PwrRecord { receiver: 0, sender: 3, view: v2, delta: EPS });
        st.insert_record(PwrRecord { receiver: 0, sender: 4, view: v2, delta: EPS });
        st.insert_record(PwrRecord { receiver: 0, sender: 4, view: ViewId(3), delta: EPS });
        assert!(close(st.get_weight(v2), 1.0 + 2.0 * EPS));
        assert!(close(st.get_weight(ViewId(3)), 1.0 + EPS));

        let mut sender = PwrState::new(3);
        sender.insert_record(PwrRecord { receiver: 0, sender: 3, view: v2, delta: -EPS });
        assert!(close(sender.get_weight(v2), 1.0 - EPS));
    }

    #[test]
    fn requested_weight_filters_by_view() {
        let mut st = PwrState::new(0);
        assert_eq!(st.get_requested_weight(ViewId(2)), 0.0);
        st.pwr_requests.push(PwrRecord { receiver: 0, sender: 1, view: ViewId(2), delta: EPS });
        st.pwr_requests.push(PwrRecord { receiver: 0, sender: 3, view: ViewId(2), delta: EPS });
        assert!(close(st.get_requested_weight(ViewId(2)), 0.2));
        assert_eq!(st.get_requested_weight(ViewId(3)), 0.0);
    }

    #[test]
    fn propose_targets_slowest_qualifying_peer() {
        let cfg = config5();
        let t = table(0, &[20.0, 45.0, 100.0, 140.0, 180.0]);
        let mut st = PwrState::new(0);
        let (target, view) = st
            .try_propose(INITIAL_VIEW, &BTreeSet::new(), &t, &cfg, 0.05)
            .expect("conditions hold");
        assert_eq!(target, 4);
        assert_eq!(view, ViewId(1));
        assert_eq!(st.pending_requests(ViewId(1)), 1);
        // Next call rotates to the next slowest peer.
        let (target2, _) = st
            .try_propose(INITIAL_VIEW, &BTreeSet::new(), &t, &cfg, 0.05)
            .unwrap();
        assert_eq!(target2, 3);
    }

    #[test]
    fn propose_blocked_by_upper_bound() {
        let cfg = config5();
        let t = table(0, &[20.0, 45.0, 100.0, 140.0, 180.0]);
        let mut st = PwrState::new(0);
        let v1 = ViewId(1);
        // Weight 2.4 for v1: 2.4 + 0 + 0.1 = 2.5 fails the strict upper-bound check.
        for sender in 1..15 {
            st.insert_record(PwrRecord { receiver: 0, sender, view: v1, delta: EPS });
        }
        assert!(close(st.get_weight(v1), 2.4));
        assert!(st.try_propose(INITIAL_VIEW, &BTreeSet::new(), &t, &cfg, 0.05).is_none());
    }

    #[test]
    fn propose_blocked_by_dirty_view() {
        let cfg = config5();
        let t = table(0, &[20.0, 45.0, 100.0, 140.0, 180.0]);
        let mut st = PwrState::new(0);
        let dirty: BTreeSet<ViewId> = [ViewId(1)].into();
        assert!(st.try_propose(INITIAL_VIEW, &dirty, &t, &cfg, 0.05).is_none());
    }

    #[test]
    fn propose_respects_share_margin() {
        let cfg = config5();
        // Peers barely slower than the owner: share gaps under tau.
        let t = table(0, &[100.0, 101.0, 102.0, 103.0, 104.0]);
        let mut st = PwrState::new(0);
        assert!(st.try_propose(INITIAL_VIEW, &BTreeSet::new(), &t, &cfg, 0.05).is_none());
        // With the gate off the slowest peer qualifies again.
        assert_eq!(
            st.try_propose(INITIAL_VIEW, &BTreeSet::new(), &t, &cfg, 0.0),
            Some((4, ViewId(1)))
        );
    }

    #[test]
    fn accept_decrements_weight() {
        let cfg = config5();
        let t = table(4, &[20.0, 45.0, 100.0, 140.0, 180.0]);
        let mut st = PwrState::new(4);
        let v1 = ViewId(1);
        let got = st.handle_propose(0, v1, EPS, INITIAL_VIEW, &BTreeSet::new(), &t, &cfg);
        assert_eq!(got, Some(v1));
        assert!(close(st.get_weight(v1), 1.0 - EPS));
    }

    #[test]
    fn refuse_when_lower_bound_would_break() {
        let cfg = config5();
        let t = table(4, &[20.0, 45.0, 100.0, 140.0, 180.0]);
        let mut st = PwrState::new(4);
        let v1 = ViewId(1);
        // Already down to 0.7: another transfer would hit 0.6 < wl = 0.625.
        for receiver in [0, 1, 2] {
            st.insert_record(PwrRecord { receiver, sender: 4, view: v1, delta: -EPS });
        }
        assert!(close(st.get_weight(v1), 0.7));
        assert!(st
            .handle_propose(3, v1, EPS, INITIAL_VIEW, &BTreeSet::new(), &t, &cfg)
            .is_none());
    }

    #[test]
    fn refuse_stale_view_proposal() {
        let cfg = config5();
        let t = table(4, &[20.0, 45.0, 100.0, 140.0, 180.0]);
        let mut st = PwrState::new(4);
        // Proposal for v1 while this server already moved to cview v1:
        // succ(cview) = v2 > v1: the proposal is behind this server.
        assert!(st
            .handle_propose(0, ViewId(1), EPS, ViewId(1), &BTreeSet::new(), &t, &cfg)
            .is_none());
        // A proposal ahead of our succeeding view is fine.
        assert!(st
            .handle_propose(0, ViewId(3), EPS, ViewId(1), &BTreeSet::new(), &t, &cfg)
            .is_some());
    }

    #[test]
    fn refuse_when_proposer_looks_slower() {
        let cfg = config5();
        let t = table(1, &[20.0, 45.0, 100.0, 140.0, 180.0]);
        let mut st = PwrState::new(1);
        // Server 3 is slower than owner 1; refuse to send weight downhill.
        assert!(st
            .handle_propose(3, ViewId(1), EPS, INITIAL_VIEW, &BTreeSet::new(), &t, &cfg)
            .is_none());
        // Server 0 is faster; accepted.
        assert!(st
            .handle_propose(0, ViewId(1), EPS, INITIAL_VIEW, &BTreeSet::new(), &t, &cfg)
            .is_some());
    }

    #[test]
    fn accept_records_increment_and_clears_request() {
        let cfg = config5();
        let t = table(0, &[20.0, 45.0, 100.0, 140.0, 180.0]);
        let mut st = PwrState::new(0);
        let (target, view) = st
            .try_propose(INITIAL_VIEW, &BTreeSet::new(), &t, &cfg, 0.05)
            .unwrap();
        st.handle_accept(target, view, EPS, INITIAL_VIEW, &BTreeSet::new());
        assert!(close(st.get_weight(view), 1.0 + EPS));
        assert_eq!(st.pending_requests(view), 0);
    }

    #[test]
    fn late_accept_is_lost_but_request_cleared() {
        let mut st = PwrState::new(0);
        let v1 = ViewId(1);
        st.pwr_requests.push(PwrRecord { receiver: 0, sender: 4, view: v1, delta: EPS });
        let dirty: BTreeSet<ViewId> = [v1].into();
        st.handle_accept(4, v1, EPS, INITIAL_VIEW, &dirty);
        assert_eq!(st.get_weight(v1), 1.0);
        assert_eq!(st.pending_requests(v1), 0);
    }

    #[test]
    fn accept_for_wrong_view_is_ignored() {
        let mut st = PwrState::new(0);
        st.handle_accept(4, ViewId(3), EPS, INITIAL_VIEW, &BTreeSet::new());
        assert_eq!(st.get_weight(ViewId(3)), 1.0);
    }

    #[test]
    fn duplicate_records_collapse() {
        let mut st = PwrState::new(0);
        let rec = PwrRecord { receiver: 0, sender: 4, view: ViewId(1), delta: EPS };
        st.insert_record(rec.clone());
        st.insert_record(rec);
        assert!(close(st.get_weight(ViewId(1)), 1.0 + EPS));
    }

    #[test]
    fn prune_drops_stale_state() {
        let mut st = PwrState::new(0);
        st.insert_record(PwrRecord { receiver: 0, sender: 1, view: ViewId(1), delta: EPS });
        st.insert_record(PwrRecord { receiver: 0, sender: 1, view: ViewId(2), delta: EPS });
        st.pwr_requests.push(PwrRecord { receiver: 0, sender: 2, view: ViewId(2), delta: EPS });
        st.pwr_requests.push(PwrRecord { receiver: 0, sender: 2, view: ViewId(3), delta: EPS });
        st.prune(ViewId(2));
        assert_eq!(st.get_weight(ViewId(1)), 1.0);
        assert!(close(st.get_weight(ViewId(2)), 1.0 + EPS));
        assert_eq!(st.pending_requests(ViewId(2)), 0);
        assert_eq!(st.pending_requests(ViewId(3)), 1);
    }

    /// Random propose/accept/dirty interleavings keep every weight inside
    /// (wl, wu) and only ever lose weight from a view, never mint it.
    #[test]
    fn random_interleavings_conserve_or_lose_weight() {
        let cfg = config5();
        let lats = [20.0, 45.0, 100.0, 140.0, 180.0];
        let mut rng = StdRng::seed_from_u64(42);
        for trial in 0..200 {
            let mut states: Vec<PwrState> = (0..5).map(PwrState::new).collect();
            let tables: Vec<LatencyScoreTable> =
                (0..5).map(|i| table(i, &lats)).collect();
            let mut dirty: Vec<BTreeSet<ViewId>> =
                vec![[INITIAL_VIEW].into(); 5];
            let cview = INITIAL_VIEW;
            let target_view = cview.succ();
            // In-flight messages: (kind, from, to, view). 0 = propose, 1 = accept.
            let mut wire: Vec<(u8, ServerId, ServerId, ViewId)> = Vec::new();
            let mut lost = 0u32;
            for _ in 0..120 {
                match rng.gen_range(0..4) {
                    0 => {
                        let i = rng.gen_range(0..5);
                        if let Some((to, view)) =
                            states[i].try_propose(cview, &dirty[i], &tables[i], &cfg, 0.0)
                        {
                            wire.push((0, i, to, view));
                        }
                    }
                    1 | 2 if !wire.is_empty() => {
                        let k = rng.gen_range(0..wire.len());
                        let (kind, from, to, view) = wire.swap_remove(k);
                        if kind == 0 {
                            if let Some(v) = states[to].handle_propose(
                                from, view, EPS, cview, &dirty[to], &tables[to], &cfg,
                            ) {
                                wire.push((1, to, from, v));
                            }
                        } else {
                            let before = states[to].get_weight(view);
                            states[to].handle_accept(from, view, EPS, cview, &dirty[to]);
                            if states[to].get_weight(view) == before {
                                lost += 1;
                            }
                        }
                    }
                    3 => {
                        let i = rng.gen_range(0..5);
                        dirty[i].insert(target_view);
                    }
                    _ => {}
                }
                for st in &states {
                    let w = st.get_weight(target_view);
                    assert!(
                        cfg.wl < w && w < cfg.wu,
                        "trial {trial}: weight {w} out of bounds"
                    );
                }
            }
            // Sender decrements without receiver increments are the only
            // imbalance, and they can only shrink the total.
            let undelivered_accepts =
                wire.iter().filter(|(kind, ..)| *kind == 1).count() as u32;
            let total: f64 = states.iter().map(|s| s.get_weight(target_view)).sum();
            let expected = 5.0 - EPS * (lost + undelivered_accepts) as f64;
            assert!(
                (total - expected).abs() < 1e-9,
                "trial {trial}: total {total} expected {expected}"
            );
            assert!(total <= 5.0 + 1e-9);
        }
    }
}
