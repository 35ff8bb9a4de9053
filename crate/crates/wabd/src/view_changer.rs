//! The view changer: timeout-driven view change requests, weighted-majority
//! register synchronization, and installation.
//!
//! A change to the succeeding view runs through six steps once a matching
//! request is known: relay the request if not yet sent, disable reads and
//! writes, mark the view dirty (freezing weight transfers for it), broadcast
//! the local register state tagged with the current view and weight, wait for
//! state updates from a weighted majority of the current view, then merge the
//! freshest register state, advance the current view, arm a fresh timeout,
//! and re-enable reads and writes.

use crate::abd::{RegisterState, Value};
use crate::quorum::{ServerId, SystemConfig};
use crate::views::{ViewId, INITIAL_VIEW};
use std::collections::BTreeSet;

/// One received state_update: a peer's register snapshot plus its weight in
/// `view`, sent while that peer was uninstalling `view`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateUpdateRecord {
    pub sender: ServerId,
    pub value: Value,
    pub ts: u64,
    pub cid: u64,
    pub view: ViewId,
    pub weight: f64,
}

/// Effects of starting a view change, to be turned into broadcasts.
#[derive(Debug)]
pub struct ChangeStarted {
    /// Relay the change_view request (it had not been sent yet).
    pub relay: Option<ViewId>,
    /// This server's own state_update to broadcast.
    pub update: StateUpdateRecord,
}

/// Effects of installing a view.
#[derive(Debug)]
pub struct Installed {
    pub view: ViewId,
    /// Register state merged from the uninstall quorum.
    pub merged_ts: u64,
    pub merged_cid: u64,
}

#[derive(Debug, Clone)]
pub struct ViewChangerState {
    owner: ServerId,
    cview: ViewId,
    rchange_views: BTreeSet<ViewId>,
    schange_views: BTreeSet<ViewId>,
    state_updates: Vec<StateUpdateRecord>,
    dirty_views: BTreeSet<ViewId>,
    rw_enabled: bool,
    in_progress: Option<ViewId>,
}

impl ViewChangerState {
    pub fn new(owner: ServerId) -> Self {
        Self::new_at(owner, INITIAL_VIEW)
    }

    /// Starts from an arbitrary current view, as a server resuming mid
    /// sequence would. The current view counts as participated-in.
    pub fn new_at(owner: ServerId, cview: ViewId) -> Self {
        let mut dirty_views: BTreeSet<ViewId> = [INITIAL_VIEW].into();
        dirty_views.insert(cview);
        ViewChangerState {
            owner,
            cview,
            rchange_views: BTreeSet::new(),
            schange_views: BTreeSet::new(),
            state_updates: Vec::new(),
            dirty_views,
            rw_enabled: true,
            in_progress: None,
        }
    }

    pub fn owner(&self) -> ServerId {
        self.owner
    }

    pub fn cview(&self) -> ViewId {
        self.cview
    }

    pub fn dirty_views(&self) -> &BTreeSet<ViewId> {
        &self.dirty_views
    }

    pub fn rw_enabled(&self) -> bool {
        self.rw_enabled
    }

    pub fn change_in_progress(&self) -> Option<ViewId> {
        self.in_progress
    }

    /// The view timer for `cview` expired: request a change to the
    /// succeeding view unless such a request was already sent.
    pub fn on_view_timeout(&mut self) -> Option<ViewId> {
        let next = self.cview.succ();
        if self.schange_views.contains(&next) {
            return None;
        }
        self.rchange_views.insert(next);
        self.schange_views.insert(next);
        Some(next)
    }

    pub fn handle_change_view(&mut self, view: ViewId) {
        self.rchange_views.insert(view);
    }

    /// Stores a peer's state_update. Quorum counting is order-insensitive,
    /// so updates arriving before the triggering change_view just wait here.
    pub fn handle_state_update(&mut self, rec: StateUpdateRecord) {
        if rec.view < self.cview {
            return; // can never be counted again
        }
        let dup = self
            .state_updates
            .iter()
            .any(|r| r.sender == rec.sender && r.view == rec.view);
        if !dup {
            self.state_updates.push(rec);
        }
    }

    /// Total recorded weight of state_updates for `view`.
    pub fn sum_weights(&self, view: ViewId) -> f64 {
        self.state_updates
            .iter()
            .filter(|r| r.view == view)
            .map(|r| r.weight)
            .sum()
    }

    /// Steps S1-S4: begins the change to the succeeding view if one was
    /// requested and none is already running. `weight` is this server's
    /// weight in the current view.
    pub fn maybe_start_change(
        &mut self,
        reg: &RegisterState,
        weight: f64,
    ) -> Option<ChangeStarted> {
        let next = self.cview.succ();
        if self.in_progress.is_some() || !self.rchange_views.contains(&next) {
            return None;
        }
        // S1: relay unless already sent
        let relay = if self.schange_views.insert(next) {
            Some(next)
        } else {
            None
        };
        // S2: disable reads/writes
        self.rw_enabled = false;
        // S3: freeze weight transfers for the view being installed
        self.dirty_views.insert(next);
        self.in_progress = Some(next);
        // S4: broadcast own register state and record it locally
        let (ts, cid, value) = reg.snapshot();
        let update = StateUpdateRecord {
            sender: self.owner,
            value,
            ts,
            cid,
            view: self.cview,
            weight,
        };
        self.handle_state_update(update.clone());
        Some(ChangeStarted { relay, update })
    }

    /// Steps S5-S6: installs the succeeding view once state_updates for the
    /// current view carry a weighted majority. Returns `None` while still
    /// waiting.
    pub fn try_install(
        &mut self,
        reg: &mut RegisterState,
        config: &SystemConfig,
    ) -> Option<Installed> {
        let next = self.in_progress?;
        debug_assert_eq!(next, self.cview.succ());
        if !config.is_weighted_quorum(self.sum_weights(self.cview)) {
            return None;
        }
        let matching: Vec<&StateUpdateRecord> = self
            .state_updates
            .iter()
            .filter(|r| r.view == self.cview)
            .collect();
        let max_ts = matching.iter().map(|r| r.ts).max().unwrap();
        let max_cid = matching
            .iter()
            .filter(|r| r.ts == max_ts)
            .map(|r| r.cid)
            .max()
            .unwrap();
        let winners: Vec<&&StateUpdateRecord> = matching
            .iter()
            .filter(|r| r.ts == max_ts && r.cid == max_cid)
            .collect();
        // A (ts, cid) pair identifies one written value; disagreement here
        // means quorum intersection was violated upstream.
        assert!(
            winners.windows(2).all(|w| w[0].value == w[1].value),
            "conflicting values for (ts={max_ts}, cid={max_cid}) while installing {next}"
        );
        let value = winners[0].value.clone();
        reg.set(max_ts, max_cid, value);
        self.cview = next;
        self.in_progress = None;
        self.rw_enabled = true;
        // Records older than the predecessor view can never be counted again.
        if let Some(keep_from) = self.cview.pred() {
            self.state_updates.retain(|r| r.view >= keep_from);
        }
        Some(Installed {
            view: next,
            merged_ts: max_ts,
            merged_cid: max_cid,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abd::bottom;

    fn cfg5() -> SystemConfig {
        SystemConfig::new(5, 1, 0.1).unwrap()
    }

    fn unit_update(sender: ServerId, view: ViewId) -> StateUpdateRecord {
        StateUpdateRecord {
            sender,
            value: bottom(),
            ts: 0,
            cid: 0,
            view,
            weight: 1.0,
        }
    }

    #[test]
    fn timeout_broadcasts_once() {
        let mut vc = ViewChangerState::new(0);
        assert_eq!(vc.on_view_timeout(), Some(ViewId(1)));
        assert!(vc.rchange_views.contains(&ViewId(1)));
        // Second fire before the install is suppressed.
        assert_eq!(vc.on_view_timeout(), None);
    }

    #[test]
    fn change_view_receipt_is_idempotent_and_can_be_early() {
        let mut vc = ViewChangerState::new(0);
        vc.handle_change_view(ViewId(5));
        vc.handle_change_view(ViewId(5));
        assert_eq!(vc.rchange_views.len(), 1);
        // A request far ahead of cview does not start anything.
        let reg = RegisterState::new();
        assert!(vc.maybe_start_change(&reg, 1.0).is_none());
    }

    #[test]
    fn start_change_runs_s1_through_s4() {
        let mut vc = ViewChangerState::new(2);
        let mut reg = RegisterState::new();
        reg.set(3, 1, b"x".to_vec());
        vc.handle_change_view(ViewId(1));
        let started = vc.maybe_start_change(&reg, 1.0).unwrap();
        assert_eq!(started.relay, Some(ViewId(1)));
        assert!(!vc.rw_enabled());
        assert!(vc.dirty_views().contains(&ViewId(1)));
        assert_eq!(started.update.view, ViewId(0));
        assert_eq!(started.update.ts, 3);
        // Own update already counted.
        assert_eq!(vc.sum_weights(ViewId(0)), 1.0);
        // No second start while one is running.
        assert!(vc.maybe_start_change(&reg, 1.0).is_none());
    }

    #[test]
    fn relay_suppressed_after_own_timeout() {
        let mut vc = ViewChangerState::new(0);
        vc.on_view_timeout();
        let reg = RegisterState::new();
        let started = vc.maybe_start_change(&reg, 1.0).unwrap();
        assert_eq!(started.relay, None);
    }

    #[test]
    fn install_needs_strict_weighted_majority() {
        let cfg = cfg5();
        let mut vc = ViewChangerState::new(0);
        let mut reg = RegisterState::new();
        vc.handle_change_view(ViewId(1));
        vc.maybe_start_change(&reg, 1.0).unwrap();
        // Own update (1.0) plus one more: 2.0 < 2.5, still waiting. A
        // boundary case: 2.5 exactly does not install either.
        vc.handle_state_update(unit_update(1, ViewId(0)));
        assert!(vc.try_install(&mut reg, &cfg).is_none());
        let mut half = unit_update(2, ViewId(0));
        half.weight = 0.5;
        vc.handle_state_update(half);
        assert_eq!(vc.sum_weights(ViewId(0)), 2.5);
        assert!(vc.try_install(&mut reg, &cfg).is_none());
        // Crossing the threshold installs.
        vc.handle_state_update(unit_update(3, ViewId(0)));
        let installed = vc.try_install(&mut reg, &cfg).unwrap();
        assert_eq!(installed.view, ViewId(1));
        assert_eq!(vc.cview(), ViewId(1));
        assert!(vc.rw_enabled());
    }

    #[test]
    fn install_merges_max_ts_then_max_cid() {
        let cfg = cfg5();
        let mut vc = ViewChangerState::new(0);
        let mut reg = RegisterState::new();
        vc.handle_change_view(ViewId(1));
        vc.maybe_start_change(&reg, 1.0).unwrap();
        let records = [
            (1, 2u64, 1u64, b"A".to_vec()),
            (2, 2, 3, b"B".to_vec()),
            (3, 1, 9, b"C".to_vec()),
        ];
        for (sender, ts, cid, val) in records.iter().cloned() {
            vc.handle_state_update(StateUpdateRecord {
                sender,
                value: val,
                ts,
                cid,
                view: ViewId(0),
                weight: 1.0,
            });
        }
        // Brute-force oracle over the record set (own bottom record included).
        let mut all = vec![(0u64, 0u64, bottom())];
        all.extend(records.iter().map(|(_, t, c, v)| (*t, *c, v.clone())));
        let expected = all.iter().max_by_key(|(t, c, _)| (*t, *c)).cloned().unwrap();
        assert_eq!(expected, (2, 3, b"B".to_vec()));

        let installed = vc.try_install(&mut reg, &cfg).unwrap();
        assert_eq!((installed.merged_ts, installed.merged_cid), (2, 3));
        assert_eq!(reg.snapshot(), (2, 3, b"B".to_vec()));
    }

    #[test]
    fn state_updates_for_older_views_never_recounted() {
        let cfg = cfg5();
        let mut vc = ViewChangerState::new(0);
        let mut reg = RegisterState::new();
        vc.handle_change_view(ViewId(1));
        vc.maybe_start_change(&reg, 1.0).unwrap();
        for s in 1..=2 {
            vc.handle_state_update(unit_update(s, ViewId(0)));
        }
        vc.try_install(&mut reg, &cfg).unwrap();
        // Records for v0 must not count toward the next change (v1 -> v2).
        vc.handle_change_view(ViewId(2));
        vc.maybe_start_change(&reg, 1.0).unwrap();
        assert_eq!(vc.sum_weights(ViewId(1)), 1.0); // own record only
        assert!(vc.try_install(&mut reg, &cfg).is_none());
    }

    #[test]
    fn duplicate_state_updates_collapse() {
        let mut vc = ViewChangerState::new(0);
        vc.handle_state_update(unit_update(1, ViewId(0)));
        vc.handle_state_update(unit_update(1, ViewId(0)));
        assert_eq!(vc.sum_weights(ViewId(0)), 1.0);
    }

    #[test]
    fn lagging_server_walks_each_view_in_order() {
        // All change_view requests up to v5 arrive while this server still
        // sits at v0; peers' state updates for every view are already in.
        // The server must install v1..v5 one at a time, acting on a request
        // for v_{k+1} only once its current view reaches v_k.
        let cfg = cfg5();
        let mut vc = ViewChangerState::new(0);
        let mut reg = RegisterState::new();
        for k in 1..=5u64 {
            vc.handle_change_view(ViewId(k));
        }
        for view in 0..5u64 {
            for s in 1..=2 {
                vc.handle_state_update(unit_update(s, ViewId(view)));
            }
        }
        let mut installed = Vec::new();
        while let Some(started) = vc.maybe_start_change(&reg, 1.0) {
            assert_eq!(started.update.view, vc.cview());
            let inst = vc.try_install(&mut reg, &cfg).expect("updates are ready");
            installed.push(inst.view.index());
        }
        assert_eq!(installed, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn early_state_update_waits_for_the_change() {
        let cfg = cfg5();
        let mut vc = ViewChangerState::new(0);
        let mut reg = RegisterState::new();
        // Updates arrive before the change_view request.
        for s in 1..=3 {
            vc.handle_state_update(unit_update(s, ViewId(0)));
        }
        assert!(vc.try_install(&mut reg, &cfg).is_none()); // no change running
        vc.handle_change_view(ViewId(1));
        vc.maybe_start_change(&reg, 1.0).unwrap();
        assert!(vc.try_install(&mut reg, &cfg).is_some());
    }
}
