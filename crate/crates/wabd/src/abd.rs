//! Weighted ABD: the replicated register and the two-phase client protocol.
//!
//! Clients tag every request with their current view and broadcast to all
//! servers; servers answer with their own view and attach their weight only
//! when the views matched. A phase completes once the matching responses
//! carry total weight above `n/2`. A response from a newer view advances the
//! client's view and restarts the operation; responses from older views are
//! dropped (a lagging server cannot contribute to the current quorum, and
//! restarting on it could livelock against one slow server — the original
//! rule is available via [`ClientState::restart_on_any_mismatch`]).
//!
//! Restarts are timestamp-idempotent: a write that already entered phase 2
//! keeps its `(ts, cid)` and re-runs phase 2 alone, so one write can never
//! occupy two points of the register lineage no matter how many view
//! changes interrupt it.

use crate::message::Message;
use crate::quorum::{ServerId, SystemConfig};
use crate::time::SimTime;
use crate::views::{ViewId, INITIAL_VIEW};
use std::collections::BTreeMap;

/// Register values are opaque byte strings; the empty string is the
/// distinguished "never written" marker and is not a legal written value.
pub type Value = Vec<u8>;

pub fn bottom() -> Value {
    Vec::new()
}

pub fn is_bottom(v: &Value) -> bool {
    v.is_empty()
}

/// The replicated register triple. `(ts, cid)` pairs order lexicographically
/// and never decrease at a server.
#[derive(Debug, Clone, PartialEq)]
pub struct RegisterState {
    pub ts: u64,
    pub cid: u64,
    pub val: Value,
}

impl RegisterState {
    pub fn new() -> Self {
        RegisterState {
            ts: 0,
            cid: 0,
            val: bottom(),
        }
    }

    /// Write-ordering rule: adopt iff `(ts, cid)` strictly exceeds the
    /// current pair.
    pub fn adopt_if_newer(&mut self, ts: u64, cid: u64, val: &Value) -> bool {
        if ts > self.ts || (ts == self.ts && cid > self.cid) {
            self.ts = ts;
            self.cid = cid;
            self.val = val.clone();
            true
        } else {
            false
        }
    }

    pub fn snapshot(&self) -> (u64, u64, Value) {
        (self.ts, self.cid, self.val.clone())
    }

    pub fn set(&mut self, ts: u64, cid: u64, val: Value) {
        self.ts = ts;
        self.cid = cid;
        self.val = val;
    }
}

impl Default for RegisterState {
    fn default() -> Self {
        Self::new()
    }
}

/// Server side of phase 1: always answers; the weight is attached only when
/// the request's view matches the server's current view.
pub fn server_handle_read(
    reg: &RegisterState,
    cnt: u64,
    req_view: ViewId,
    cview: ViewId,
    weight: f64,
) -> Message {
    let w = if cview == req_view { Some(weight) } else { None };
    Message::ReadAck {
        value: reg.val.clone(),
        ts: reg.ts,
        cid: reg.cid,
        cnt,
        view: cview,
        weight: w,
    }
}

/// Server side of phase 2: adopts the incoming triple when it is newer, and
/// acks regardless (a stale write is absorbed without effect).
pub fn server_handle_write(
    reg: &mut RegisterState,
    value: &Value,
    ts: u64,
    cid: u64,
    cnt: u64,
    req_view: ViewId,
    cview: ViewId,
    weight: f64,
) -> Message {
    let w = if cview == req_view {
        reg.adopt_if_newer(ts, cid, value);
        Some(weight)
    } else {
        None
    };
    Message::WriteAck {
        cnt,
        view: cview,
        weight: w,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    Read,
    Write,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

/// Statistics of one completed phase (its final attempt).
#[derive(Debug, Clone, Copy)]
pub struct PhaseStats {
    pub started_at: SimTime,
    pub completed_at: SimTime,
    pub responders: usize,
}

/// A finished operation, as reported to the harness.
#[derive(Debug, Clone)]
pub struct OpResult {
    pub kind: OpKind,
    /// Value read, or value written.
    pub value: Value,
    pub invoked_at: SimTime,
    pub completed_at: SimTime,
    /// The view the final phase completed in.
    pub view: ViewId,
    pub phase1: PhaseStats,
    pub phase2: PhaseStats,
    pub restarts: u32,
}

/// What the client decided after one incoming ack.
#[derive(Debug)]
pub enum AckOutcome {
    /// Stale or irrelevant; nothing changes.
    Ignored,
    /// Counted toward the current phase, quorum not reached yet.
    Accumulated,
    /// Phase 1 finished; broadcast this phase 2 request.
    StartPhase2 { msg: Message, stats: PhaseStats },
    /// A newer view was learned; the operation restarted. Broadcast this
    /// fresh phase 1 request.
    Restarted(Message),
    /// The operation finished.
    Completed(OpResult),
}

#[derive(Debug)]
struct InFlight {
    kind: OpKind,
    /// Value to write (writes) — empty for reads until phase 1 selects one.
    value: Value,
    phase: Phase,
    /// Responses of the current phase attempt, keyed by server.
    acks: BTreeMap<ServerId, f64>,
    /// Running maximum `(ts, cid, val)` among phase 1 responses.
    best: (u64, u64, Value),
    /// Phase 2 payload once selected.
    write_ts: u64,
    write_cid: u64,
    invoked_at: SimTime,
    phase_started_at: SimTime,
    phase1_stats: Option<PhaseStats>,
    restarts: u32,
}

/// Client half of the protocol: one operation in flight at a time.
#[derive(Debug)]
pub struct ClientState {
    id: u64,
    op_cnt: u64,
    cview: ViewId,
    op: Option<InFlight>,
    /// Strict compatibility mode: restart on stale views too, instead of
    /// dropping them.
    pub restart_on_any_mismatch: bool,
}

impl ClientState {
    /// `id` must be nonzero; 0 is reserved for the initial register state.
    pub fn new(id: u64) -> Self {
        assert!(id > 0, "client id 0 is reserved");
        ClientState {
            id,
            op_cnt: 0,
            cview: INITIAL_VIEW,
            op: None,
            restart_on_any_mismatch: false,
        }
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn cview(&self) -> ViewId {
        self.cview
    }

    pub fn idle(&self) -> bool {
        self.op.is_none()
    }

    /// Begins a read. Returns the phase 1 request to broadcast.
    pub fn start_read(&mut self, now: SimTime) -> Message {
        self.start(OpKind::Read, bottom(), now)
    }

    /// Begins a write of `value` (must not be the bottom marker).
    pub fn start_write(&mut self, value: Value, now: SimTime) -> Message {
        assert!(!is_bottom(&value), "cannot write the bottom marker");
        self.start(OpKind::Write, value, now)
    }

    fn start(&mut self, kind: OpKind, value: Value, now: SimTime) -> Message {
        assert!(self.op.is_none(), "one operation in flight per client");
        self.op = Some(InFlight {
            kind,
            value,
            phase: Phase::One,
            acks: BTreeMap::new(),
            best: (0, 0, bottom()),
            write_ts: 0,
            write_cid: 0,
            invoked_at: now,
            phase_started_at: now,
            phase1_stats: None,
            restarts: 0,
        });
        self.op_cnt += 1;
        Message::Read {
            cnt: self.op_cnt,
            view: self.cview,
        }
    }

    /// The current phase's request, for periodic re-broadcast to servers
    /// that were lagging when they first saw it.
    pub fn current_request(&self) -> Option<Message> {
        let op = self.op.as_ref()?;
        Some(match op.phase {
            Phase::One => Message::Read {
                cnt: self.op_cnt,
                view: self.cview,
            },
            Phase::Two => Message::Write {
                value: op.value.clone(),
                ts: op.write_ts,
                cid: op.write_cid,
                cnt: self.op_cnt,
                view: self.cview,
            },
        })
    }

    /// Feeds one readack/writeack into the in-flight operation.
    pub fn on_ack(
        &mut self,
        from: ServerId,
        msg: &Message,
        config: &SystemConfig,
        now: SimTime,
    ) -> AckOutcome {
        if self.op.is_none() {
            return AckOutcome::Ignored;
        }
        match msg {
            Message::ReadAck {
                value,
                ts,
                cid,
                cnt,
                view,
                weight,
            } => {
                if *cnt != self.op_cnt || self.op.as_ref().unwrap().phase != Phase::One {
                    return AckOutcome::Ignored;
                }
                match self.classify(*view, *weight) {
                    Classified::Matching(w) => {
                        let op = self.op.as_mut().unwrap();
                        if op.acks.insert(from, w).is_none() {
                            // Track the maximum (ts, cid) and its value.
                            if (*ts, *cid) > (op.best.0, op.best.1) {
                                op.best = (*ts, *cid, value.clone());
                            } else if (*ts, *cid) == (op.best.0, op.best.1) {
                                assert!(
                                    is_bottom(&op.best.2) && is_bottom(value)
                                        || op.best.2 == *value,
                                    "distinct values under one (ts, cid) pair"
                                );
                            }
                        }
                        self.try_finish_phase1(config, now)
                    }
                    Classified::Newer => AckOutcome::Restarted(self.restart(now)),
                    Classified::Stale => {
                        if self.restart_on_any_mismatch {
                            AckOutcome::Restarted(self.restart(now))
                        } else {
                            AckOutcome::Ignored
                        }
                    }
                }
            }
            Message::WriteAck { cnt, view, weight } => {
                if *cnt != self.op_cnt || self.op.as_ref().unwrap().phase != Phase::Two {
                    return AckOutcome::Ignored;
                }
                match self.classify(*view, *weight) {
                    Classified::Matching(w) => {
                        let op = self.op.as_mut().unwrap();
                        op.acks.insert(from, w);
                        self.try_finish_phase2(config, now)
                    }
                    Classified::Newer => AckOutcome::Restarted(self.restart(now)),
                    Classified::Stale => {
                        if self.restart_on_any_mismatch {
                            AckOutcome::Restarted(self.restart(now))
                        } else {
                            AckOutcome::Ignored
                        }
                    }
                }
            }
            _ => AckOutcome::Ignored,
        }
    }

    fn classify(&mut self, view: ViewId, weight: Option<f64>) -> Classified {
        if view == self.cview {
            match weight {
                Some(w) => Classified::Matching(w),
                // The server's view matched neither the request nor ours;
                // by the time this arrives it is stale.
                None => Classified::Stale,
            }
        } else if view > self.cview {
            self.cview = view;
            Classified::Newer
        } else {
            Classified::Stale
        }
    }

    fn restart(&mut self, now: SimTime) -> Message {
        let op = self.op.as_mut().unwrap();
        op.acks.clear();
        op.phase_started_at = now;
        op.restarts += 1;
        self.op_cnt += 1;
        // A write that already picked its (ts, cid) must keep them: only
        // phase 2 is retried, in the new view. Re-running phase 1 would
        // mint a second timestamp for the same value, and a value the
        // view-change merge already propagated could then reappear after
        // being overwritten.
        if op.kind == OpKind::Write && op.phase == Phase::Two {
            return Message::Write {
                value: op.value.clone(),
                ts: op.write_ts,
                cid: op.write_cid,
                cnt: self.op_cnt,
                view: self.cview,
            };
        }
        op.phase = Phase::One;
        op.best = (0, 0, bottom());
        op.phase1_stats = None;
        if op.kind == OpKind::Read {
            op.value = bottom();
        }
        Message::Read {
            cnt: self.op_cnt,
            view: self.cview,
        }
    }

    fn try_finish_phase1(&mut self, config: &SystemConfig, now: SimTime) -> AckOutcome {
        let op = self.op.as_mut().unwrap();
        let total: f64 = op.acks.values().sum();
        if !config.is_weighted_quorum(total) {
            return AckOutcome::Accumulated;
        }
        let stats = PhaseStats {
            started_at: op.phase_started_at,
            completed_at: now,
            responders: op.acks.len(),
        };
        op.phase1_stats = Some(stats);
        match op.kind {
            OpKind::Read => {
                // Write back the freshest value under its own (ts, cid).
                op.value = op.best.2.clone();
                op.write_ts = op.best.0;
                op.write_cid = op.best.1;
            }
            OpKind::Write => {
                op.write_ts = op.best.0 + 1;
                op.write_cid = self.id;
            }
        }
        op.phase = Phase::Two;
        op.acks.clear();
        op.phase_started_at = now;
        AckOutcome::StartPhase2 {
            msg: Message::Write {
                value: op.value.clone(),
                ts: op.write_ts,
                cid: op.write_cid,
                cnt: self.op_cnt,
                view: self.cview,
            },
            stats,
        }
    }

    fn try_finish_phase2(&mut self, config: &SystemConfig, now: SimTime) -> AckOutcome {
        let total: f64 = self.op.as_ref().unwrap().acks.values().sum();
        if !config.is_weighted_quorum(total) {
            return AckOutcome::Accumulated;
        }
        let op = self.op.take().unwrap();
        AckOutcome::Completed(OpResult {
            kind: op.kind,
            value: op.value,
            invoked_at: op.invoked_at,
            completed_at: now,
            view: self.cview,
            phase1: op.phase1_stats.expect("phase 1 finished before phase 2"),
            phase2: PhaseStats {
                started_at: op.phase_started_at,
                completed_at: now,
                responders: op.acks.len(),
            },
            restarts: op.restarts,
        })
    }
}

enum Classified {
    Matching(f64),
    Newer,
    Stale,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg5() -> SystemConfig {
        SystemConfig::new(5, 1, 0.1).unwrap()
    }

    fn cfg4() -> SystemConfig {
        SystemConfig::new(4, 1, 0.1).unwrap()
    }

    fn readack(ts: u64, cid: u64, val: &[u8], cnt: u64, view: ViewId, w: f64) -> Message {
        Message::ReadAck {
            value: val.to_vec(),
            ts,
            cid,
            cnt,
            view,
            weight: Some(w),
        }
    }

    fn writeack(cnt: u64, view: ViewId, w: f64) -> Message {
        Message::WriteAck {
            cnt,
            view,
            weight: Some(w),
        }
    }

    #[test]
    fn register_adopts_newer_timestamps() {
        let mut reg = RegisterState::new();
        assert!(reg.adopt_if_newer(2, 1, &b"a".to_vec()));
        assert!(!reg.adopt_if_newer(1, 9, &b"b".to_vec()));
        assert_eq!(reg.val, b"a".to_vec());
        // Equal ts: larger cid wins, smaller loses.
        assert!(reg.adopt_if_newer(2, 3, &b"c".to_vec()));
        assert!(!reg.adopt_if_newer(2, 2, &b"d".to_vec()));
        assert_eq!((reg.ts, reg.cid), (2, 3));
    }

    #[test]
    fn read_handler_attaches_weight_only_on_view_match() {
        let reg = RegisterState::new();
        let m = server_handle_read(&reg, 1, ViewId(0), ViewId(0), 1.2);
        assert!(matches!(m, Message::ReadAck { weight: Some(w), .. } if w == 1.2));
        let m = server_handle_read(&reg, 1, ViewId(0), ViewId(1), 1.2);
        match m {
            Message::ReadAck { weight, view, .. } => {
                assert_eq!(weight, None);
                assert_eq!(view, ViewId(1));
            }
            _ => panic!(),
        }
    }

    #[test]
    fn write_handler_examples() {
        let mut reg = RegisterState::new();
        reg.set(1, 1, b"old".to_vec());
        // Newer timestamp adopted.
        server_handle_write(&mut reg, &b"new".to_vec(), 2, 1, 1, ViewId(0), ViewId(0), 1.0);
        assert_eq!(reg.val, b"new".to_vec());
        // Stale write absorbed, ack still carries weight.
        let m = server_handle_write(&mut reg, &b"stale".to_vec(), 1, 9, 2, ViewId(0), ViewId(0), 1.0);
        assert_eq!(reg.val, b"new".to_vec());
        assert!(matches!(m, Message::WriteAck { weight: Some(_), .. }));
        // View mismatch: no adoption, bottom weight.
        let m = server_handle_write(&mut reg, &b"x".to_vec(), 9, 9, 3, ViewId(0), ViewId(1), 1.0);
        assert_eq!(reg.val, b"new".to_vec());
        assert!(matches!(m, Message::WriteAck { weight: None, .. }));
    }

    #[test]
    fn unit_weight_phase_completes_on_third_response() {
        let cfg = cfg5();
        let mut c = ClientState::new(1);
        let req = c.start_read(0);
        let cnt = match req {
            Message::Read { cnt, .. } => cnt,
            _ => panic!(),
        };
        let v0 = ViewId(0);
        assert!(matches!(
            c.on_ack(0, &readack(0, 0, b"", cnt, v0, 1.0), &cfg, 10),
            AckOutcome::Accumulated
        ));
        assert!(matches!(
            c.on_ack(1, &readack(0, 0, b"", cnt, v0, 1.0), &cfg, 11),
            AckOutcome::Accumulated
        ));
        // 3.0 > 2.5
        assert!(matches!(
            c.on_ack(2, &readack(0, 0, b"", cnt, v0, 1.0), &cfg, 12),
            AckOutcome::StartPhase2 { .. }
        ));
    }

    #[test]
    fn weighted_two_server_quorum_at_n4() {
        // Weights 1.4 + 1.1 = 2.5 > 4/2 complete a phase with two responses.
        let cfg = cfg4();
        let mut c = ClientState::new(1);
        let cnt = match c.start_read(0) {
            Message::Read { cnt, .. } => cnt,
            _ => panic!(),
        };
        let v0 = ViewId(0);
        assert!(matches!(
            c.on_ack(0, &readack(0, 0, b"", cnt, v0, 1.4), &cfg, 10),
            AckOutcome::Accumulated
        ));
        assert!(matches!(
            c.on_ack(1, &readack(0, 0, b"", cnt, v0, 1.1), &cfg, 11),
            AckOutcome::StartPhase2 { .. }
        ));
    }

    #[test]
    fn newer_view_restarts_with_fresh_opcnt() {
        let cfg = cfg5();
        let mut c = ClientState::new(1);
        let cnt = match c.start_read(0) {
            Message::Read { cnt, .. } => cnt,
            _ => panic!(),
        };
        let newer = Message::ReadAck {
            value: bottom(),
            ts: 0,
            cid: 0,
            cnt,
            view: ViewId(1),
            weight: None,
        };
        match c.on_ack(0, &newer, &cfg, 5) {
            AckOutcome::Restarted(Message::Read { cnt: cnt2, view }) => {
                assert_eq!(view, ViewId(1));
                assert!(cnt2 > cnt);
            }
            other => panic!("expected restart, got {other:?}"),
        }
        assert_eq!(c.cview(), ViewId(1));
        // The old attempt's acks are now ignored.
        assert!(matches!(
            c.on_ack(1, &readack(0, 0, b"", cnt, ViewId(1), 1.0), &cfg, 6),
            AckOutcome::Ignored
        ));
    }

    #[test]
    fn stale_view_response_is_dropped() {
        let cfg = cfg5();
        let mut c = ClientState::new(1);
        c.cview = ViewId(2);
        let cnt = match c.start_read(0) {
            Message::Read { cnt, .. } => cnt,
            _ => panic!(),
        };
        let stale = Message::ReadAck {
            value: bottom(),
            ts: 0,
            cid: 0,
            cnt,
            view: ViewId(1),
            weight: None,
        };
        assert!(matches!(c.on_ack(0, &stale, &cfg, 5), AckOutcome::Ignored));
        assert_eq!(c.cview(), ViewId(2));

        // Strict mode restarts instead.
        let mut c2 = ClientState::new(2);
        c2.restart_on_any_mismatch = true;
        c2.cview = ViewId(2);
        let cnt = match c2.start_read(0) {
            Message::Read { cnt, .. } => cnt,
            _ => panic!(),
        };
        let stale = Message::ReadAck {
            value: bottom(),
            ts: 0,
            cid: 0,
            cnt,
            view: ViewId(1),
            weight: None,
        };
        assert!(matches!(c2.on_ack(0, &stale, &cfg, 5), AckOutcome::Restarted(_)));
    }

    #[test]
    fn write_restart_in_phase_two_keeps_its_timestamp() {
        let cfg = cfg5();
        let mut c = ClientState::new(4);
        let cnt = match c.start_write(b"val".to_vec(), 0) {
            Message::Read { cnt, .. } => cnt,
            _ => panic!(),
        };
        let v0 = ViewId(0);
        for i in 0..3 {
            c.on_ack(i, &readack(5, 2, b"x", cnt, v0, 1.0), &cfg, 1);
        }
        // Phase 2 is now in flight with ts = 6, cid = 4. A newer view
        // arrives: the retry must carry the same triple in the new view.
        let newer = Message::WriteAck {
            cnt: c.op_cnt,
            view: ViewId(1),
            weight: None,
        };
        match c.on_ack(0, &newer, &cfg, 2) {
            AckOutcome::Restarted(Message::Write { ts, cid, value, view, .. }) => {
                assert_eq!((ts, cid), (6, 4));
                assert_eq!(value, b"val".to_vec());
                assert_eq!(view, ViewId(1));
            }
            other => panic!("expected phase 2 retry, got {other:?}"),
        }
        // A read restarted mid write-back re-runs phase 1 instead.
        let mut r = ClientState::new(5);
        let cnt = match r.start_read(0) {
            Message::Read { cnt, .. } => cnt,
            _ => panic!(),
        };
        for i in 0..3 {
            r.on_ack(i, &readack(5, 2, b"x", cnt, v0, 1.0), &cfg, 1);
        }
        let newer = Message::WriteAck {
            cnt: r.op_cnt,
            view: ViewId(1),
            weight: None,
        };
        assert!(matches!(
            r.on_ack(0, &newer, &cfg, 2),
            AckOutcome::Restarted(Message::Read { .. })
        ));
    }

    #[test]
    fn duplicate_acks_do_not_double_count() {
        let cfg = cfg5();
        let mut c = ClientState::new(1);
        let cnt = match c.start_read(0) {
            Message::Read { cnt, .. } => cnt,
            _ => panic!(),
        };
        let v0 = ViewId(0);
        for _ in 0..4 {
            assert!(matches!(
                c.on_ack(0, &readack(0, 0, b"", cnt, v0, 1.0), &cfg, 1),
                AckOutcome::Accumulated
            ));
        }
    }

    #[test]
    fn write_selects_max_ts_plus_one_and_own_cid() {
        let cfg = cfg5();
        let mut c = ClientState::new(7);
        let cnt = match c.start_write(b"val".to_vec(), 0) {
            Message::Read { cnt, .. } => cnt,
            _ => panic!(),
        };
        let v0 = ViewId(0);
        c.on_ack(0, &readack(3, 2, b"x", cnt, v0, 1.0), &cfg, 1);
        c.on_ack(1, &readack(1, 5, b"y", cnt, v0, 1.0), &cfg, 2);
        match c.on_ack(2, &readack(2, 9, b"z", cnt, v0, 1.0), &cfg, 3) {
            AckOutcome::StartPhase2 { msg: Message::Write { ts, cid, value, .. }, .. } => {
                assert_eq!(ts, 4);
                assert_eq!(cid, 7);
                assert_eq!(value, b"val".to_vec());
            }
            other => panic!("expected phase 2, got {other:?}"),
        }
    }

    #[test]
    fn read_writes_back_freshest_value() {
        let cfg = cfg5();
        let mut c = ClientState::new(1);
        let cnt = match c.start_read(0) {
            Message::Read { cnt, .. } => cnt,
            _ => panic!(),
        };
        let v0 = ViewId(0);
        c.on_ack(0, &readack(2, 1, b"a", cnt, v0, 1.0), &cfg, 1);
        c.on_ack(1, &readack(2, 3, b"b", cnt, v0, 1.0), &cfg, 2);
        let phase2 = c.on_ack(2, &readack(1, 9, b"c", cnt, v0, 1.0), &cfg, 3);
        match phase2 {
            AckOutcome::StartPhase2 { msg: Message::Write { ts, cid, value, .. }, .. } => {
                // max ts 2, then max cid 3 selects "b".
                assert_eq!((ts, cid), (2, 3));
                assert_eq!(value, b"b".to_vec());
            }
            other => panic!("expected phase 2, got {other:?}"),
        }
        // Finish the write-back and check the returned value.
        for (i, t) in [(0usize, 4u64), (1, 5), (2, 6)] {
            match c.on_ack(i, &writeack(cnt, v0, 1.0), &cfg, t) {
                AckOutcome::Accumulated => {}
                AckOutcome::Completed(res) => {
                    assert_eq!(res.kind, OpKind::Read);
                    assert_eq!(res.value, b"b".to_vec());
                    assert_eq!(res.view, v0);
                    assert_eq!(res.phase2.responders, 3);
                    return;
                }
                other => panic!("unexpected {other:?}"),
            }
        }
        panic!("operation did not complete");
    }

    #[test]
    fn fresh_system_read_returns_bottom() {
        let cfg = cfg5();
        let mut c = ClientState::new(1);
        let cnt = match c.start_read(0) {
            Message::Read { cnt, .. } => cnt,
            _ => panic!(),
        };
        let v0 = ViewId(0);
        for i in 0..3 {
            c.on_ack(i, &readack(0, 0, b"", cnt, v0, 1.0), &cfg, 1);
        }
        for i in 0..3 {
            if let AckOutcome::Completed(res) = c.on_ack(i, &writeack(cnt, v0, 1.0), &cfg, 2) {
                assert!(is_bottom(&res.value));
                return;
            }
        }
        panic!("operation did not complete");
    }
}
