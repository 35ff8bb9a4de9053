//! Builds one simulation from a configuration and drives it to completion.
//!
//! A run wires `n` server nodes (monitor + weight reassignment + view
//! changer + register) and a set of closed-loop clients onto the simulated
//! network, then processes events until the configured duration. Everything
//! consumed from the seeded generators happens in event order, so a run is a
//! pure function of its configuration.

use crate::abd::{AckOutcome, ClientState, OpKind, RegisterState};
use crate::abd::{server_handle_read, server_handle_write};
use crate::harness::config::{ExperimentConfig, ExperimentConfigError, Mode};
use crate::harness::lin::HistoryEvent;
use crate::harness::metrics::{InstallRow, MetricsReport, OpRow};
use crate::message::Message;
use crate::monitor::LatencyScoreTable;
use crate::pwr::PwrState;
use crate::quorum::{ServerId, SystemConfig};
use crate::simnet::{CrashPlan, Event, LatencySchedule, ProcessId, SimNet, TimerTag};
use crate::time::{as_ms, ms, SimTime};
use crate::trace::{Trace, TraceEvent};
use crate::view_changer::{StateUpdateRecord, ViewChangerState};
use crate::views::INITIAL_VIEW;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Everything a finished run reports.
pub struct RunOutput {
    pub metrics: MetricsReport,
    pub history: Vec<HistoryEvent>,
    pub trace: Vec<TraceEvent>,
}

struct ServerNode {
    monitor: LatencyScoreTable,
    pwr: PwrState,
    vc: ViewChangerState,
    reg: RegisterState,
    queued: Vec<(ProcessId, Message)>,
}

struct ClientNode {
    state: ClientState,
    rng: ChaCha8Rng,
    writes_issued: u64,
    ops_started: u64,
    last_broadcast: SimTime,
    history_index: Option<usize>,
}

struct World {
    sys: SystemConfig,
    cfg: ExperimentConfig,
    net: SimNet,
    servers: Vec<ServerNode>,
    clients: Vec<ClientNode>,
    history: Vec<HistoryEvent>,
    ops: Vec<OpRow>,
    installs: Vec<InstallRow>,
}

/// Runs one experiment to completion.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput, ExperimentConfigError> {
    let sys = cfg.system_config()?;
    let n = sys.n;
    let n_clients = cfg.clients.count;

    let mut topology_rng = ChaCha8Rng::seed_from_u64(mix(cfg.seed, 0xA001));
    let schedule = build_schedule(cfg, n, n_clients, &mut topology_rng);
    let crash_plan = CrashPlan {
        crashes: cfg
            .crashes
            .iter()
            .map(|c| (c.server, ms(c.at_ms)))
            .collect(),
    };
    let net = SimNet::new(
        schedule,
        &crash_plan,
        cfg.latency.jitter,
        ChaCha8Rng::seed_from_u64(mix(cfg.seed, 0xB002)),
        Trace::new(cfg.trace_level),
    );

    let servers = (0..n)
        .map(|id| ServerNode {
            monitor: LatencyScoreTable::new(id),
            pwr: PwrState::new(id),
            vc: ViewChangerState::new(id),
            reg: RegisterState::new(),
            queued: Vec::new(),
        })
        .collect();
    let clients = (0..n_clients)
        .map(|i| ClientNode {
            state: ClientState::new(i as u64 + 1),
            rng: ChaCha8Rng::seed_from_u64(mix(cfg.seed, 0xC000 + i as u64)),
            writes_issued: 0,
            ops_started: 0,
            last_broadcast: 0,
            history_index: None,
        })
        .collect();

    let mut world = World {
        sys,
        cfg: cfg.clone(),
        net,
        servers,
        clients,
        history: Vec::new(),
        ops: Vec::new(),
        installs: Vec::new(),
    };
    world.arm_initial_timers();
    let until = ms(cfg.duration_ms);
    while let Some(ev) = world.net.next_event(until) {
        match ev {
            Event::Deliver(env) => world.on_deliver(env.dst, env.src, env.msg),
            Event::Timer { process, tag } => world.on_timer(process, tag),
            Event::Crash { .. } => {}
        }
    }

    let ops_incomplete = world.history.iter().filter(|h| h.complete.is_none()).count() as u64;
    let metrics = MetricsReport::build(
        cfg.mode,
        cfg.seed,
        cfg.duration_ms,
        world.ops,
        world.installs,
        ops_incomplete,
    );
    Ok(RunOutput {
        metrics,
        history: world.history,
        trace: world.net.trace.into_events(),
    })
}

/// Splitmix-style seed decorrelation.
fn mix(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_mul(0x9E3779B97F4A7C15)
        .wrapping_add(stream.wrapping_mul(0xBF58476D1CE4E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// One-way latency matrix over servers then clients: the mean of the two
/// endpoints' characteristic half-round-trips, so client (characteristic 0)
/// to server j costs `L_j / 2` each way and a server's loopback round trip
/// measures `2 * L_i`.
fn matrix_from(profile: &[f64], n: usize, n_clients: usize) -> Vec<Vec<f64>> {
    let total = n + n_clients;
    let l = |p: usize| if p < n { profile[p] } else { 0.0 };
    (0..total)
        .map(|src| {
            (0..total)
                .map(|dst| ((l(src) + l(dst)) / 2.0).max(0.01))
                .collect()
        })
        .collect()
}

fn build_schedule(
    cfg: &ExperimentConfig,
    n: usize,
    n_clients: usize,
    topology_rng: &mut ChaCha8Rng,
) -> LatencySchedule {
    let base = &cfg.latency.server_rtts_ms;
    if cfg.latency.delta_ms == 0 {
        return LatencySchedule::fixed(matrix_from(base, n, n_clients));
    }
    let mut epochs = Vec::new();
    let mut at = 0u64;
    let mut profile = base.clone();
    while at < cfg.duration_ms {
        epochs.push((ms(at), matrix_from(&profile, n, n_clients)));
        if cfg.latency.shuffle {
            // Fisher-Yates over the characteristic latencies.
            for i in (1..profile.len()).rev() {
                let j = topology_rng.gen_range(0..=i);
                profile.swap(i, j);
            }
        }
        at += cfg.latency.delta_ms;
    }
    LatencySchedule::new(epochs)
}

impl World {
    fn n(&self) -> usize {
        self.sys.n
    }

    fn weighted(&self) -> bool {
        self.cfg.mode == Mode::Weighted
    }

    fn arm_initial_timers(&mut self) {
        for s in 0..self.n() {
            self.net.set_timer(s, ms(1), TimerTag::PingRound);
            if self.weighted() {
                self.net.set_timer(
                    s,
                    ms(self.cfg.timers.propose_interval_ms),
                    TimerTag::ProposeTick,
                );
                self.net.set_timer(
                    s,
                    ms(self.cfg.timers.view_timeout_ms),
                    TimerTag::ViewTimeout(INITIAL_VIEW),
                );
            }
        }
        for i in 0..self.clients.len() {
            let pid = self.n() + i;
            self.net
                .set_timer(pid, ms(1) + i as u64, TimerTag::ClientStart);
            self.net.set_timer(
                pid,
                ms(self.cfg.timers.resend_interval_ms),
                TimerTag::ResendTick,
            );
        }
    }

    fn broadcast_to_servers(&mut self, src: ProcessId, msg: Message, include_self: bool) {
        for dst in 0..self.n() {
            if dst == src && !include_self {
                continue;
            }
            self.net.send(src, dst, msg.clone());
        }
    }

    fn on_deliver(&mut self, dst: ProcessId, src: ProcessId, msg: Message) {
        if dst < self.n() {
            self.server_message(dst, src, msg);
        } else {
            self.client_message(dst, src, msg);
        }
    }

    fn on_timer(&mut self, process: ProcessId, tag: TimerTag) {
        if process < self.n() {
            self.server_timer(process, tag);
        } else {
            self.client_timer(process, tag);
        }
    }

    // ---- server side ----

    fn server_message(&mut self, id: ServerId, src: ProcessId, msg: Message) {
        match msg {
            Message::Ping { sent_at } => {
                self.net.send(id, src, Message::Pong { echo: sent_at });
            }
            Message::Pong { echo } => {
                let rtt = as_ms(self.net.now() - echo);
                self.servers[id].monitor.record_rtt(src, rtt);
            }
            Message::ProposePwr { view, epsilon } => {
                let s = &mut self.servers[id];
                let cview = s.vc.cview();
                if let Some(v) = s.pwr.handle_propose(
                    src,
                    view,
                    epsilon,
                    cview,
                    s.vc.dirty_views(),
                    &s.monitor,
                    &self.sys,
                ) {
                    self.net
                        .send(id, src, Message::AcceptPwr { view: v, epsilon });
                }
            }
            Message::AcceptPwr { view, epsilon } => {
                let s = &mut self.servers[id];
                let cview = s.vc.cview();
                s.pwr
                    .handle_accept(src, view, epsilon, cview, s.vc.dirty_views());
            }
            Message::ChangeView { view } => {
                self.servers[id].vc.handle_change_view(view);
                self.progress_change(id);
            }
            Message::StateUpdate {
                sender,
                value,
                ts,
                cid,
                view,
                weight,
            } => {
                self.servers[id].vc.handle_state_update(StateUpdateRecord {
                    sender,
                    value,
                    ts,
                    cid,
                    view,
                    weight,
                });
                self.progress_install(id);
            }
            Message::Read { .. } | Message::Write { .. } => {
                if self.servers[id].vc.rw_enabled() {
                    self.serve(id, src, msg);
                } else {
                    // Queued until the install finishes (step S6).
                    self.servers[id].queued.push((src, msg));
                }
            }
            Message::ReadAck { .. } | Message::WriteAck { .. } => {
                unreachable!("servers do not receive acks")
            }
        }
    }

    fn serve(&mut self, id: ServerId, client: ProcessId, msg: Message) {
        let s = &mut self.servers[id];
        let cview = s.vc.cview();
        let weight = s.pwr.get_weight(cview);
        let reply = match msg {
            Message::Read { cnt, view } => server_handle_read(&s.reg, cnt, view, cview, weight),
            Message::Write {
                value,
                ts,
                cid,
                cnt,
                view,
            } => server_handle_write(&mut s.reg, &value, ts, cid, cnt, view, cview, weight),
            _ => return,
        };
        self.net.send(id, client, reply);
    }

    fn server_timer(&mut self, id: ServerId, tag: TimerTag) {
        match tag {
            TimerTag::PingRound => {
                let now = self.net.now();
                for dst in 0..self.n() {
                    self.net.send(id, dst, Message::Ping { sent_at: now });
                }
                self.net
                    .set_timer(id, ms(self.cfg.timers.ping_interval_ms), TimerTag::PingRound);
            }
            TimerTag::ProposeTick => {
                let s = &mut self.servers[id];
                let cview = s.vc.cview();
                if let Some((target, view)) = s.pwr.try_propose(
                    cview,
                    s.vc.dirty_views(),
                    &s.monitor,
                    &self.sys,
                    self.cfg.tau,
                ) {
                    self.net.send(
                        id,
                        target,
                        Message::ProposePwr {
                            view,
                            epsilon: self.sys.epsilon,
                        },
                    );
                }
                self.net.set_timer(
                    id,
                    ms(self.cfg.timers.propose_interval_ms),
                    TimerTag::ProposeTick,
                );
            }
            TimerTag::ViewTimeout(view) => {
                if view == self.servers[id].vc.cview() {
                    if let Some(next) = self.servers[id].vc.on_view_timeout() {
                        self.broadcast_to_servers(id, Message::ChangeView { view: next }, false);
                        self.progress_change(id);
                    }
                }
            }
            _ => unreachable!("client timer delivered to a server"),
        }
    }

    /// Starts a pending view change (steps S1-S4) when one is requested.
    fn progress_change(&mut self, id: ServerId) {
        let s = &mut self.servers[id];
        let weight = s.pwr.get_weight(s.vc.cview());
        if let Some(started) = s.vc.maybe_start_change(&s.reg, weight) {
            let t = self.net.now();
            self.net.trace.push(TraceEvent::ChangeStarted {
                t,
                server: id,
                view: started.update.view.index() + 1,
            });
            if let Some(v) = started.relay {
                self.broadcast_to_servers(id, Message::ChangeView { view: v }, false);
            }
            let u = started.update;
            self.broadcast_to_servers(
                id,
                Message::StateUpdate {
                    sender: u.sender,
                    value: u.value,
                    ts: u.ts,
                    cid: u.cid,
                    view: u.view,
                    weight: u.weight,
                },
                false,
            );
            self.progress_install(id);
        }
    }

    /// Completes a running view change (steps S5-S6) once the weighted
    /// majority is in.
    fn progress_install(&mut self, id: ServerId) {
        let s = &mut self.servers[id];
        if s.vc.change_in_progress().is_none() {
            return;
        }
        let Some(inst) = s.vc.try_install(&mut s.reg, &self.sys) else {
            return;
        };
        s.pwr.prune(inst.view);
        let weight = s.pwr.get_weight(inst.view);
        let scores: Vec<(usize, f64)> = s.monitor.entries().collect();
        let t = self.net.now();
        self.net.trace.push(TraceEvent::Install {
            t,
            server: id,
            view: inst.view.index(),
            weight,
        });
        self.net.trace.push(TraceEvent::Scores {
            t,
            server: id,
            scores,
        });
        self.installs.push(InstallRow {
            time_ms: as_ms(t),
            server: id,
            view: inst.view.index(),
            weight,
        });
        if self.weighted() && inst.view.index() < self.cfg.max_views {
            self.net.set_timer(
                id,
                ms(self.cfg.timers.view_timeout_ms),
                TimerTag::ViewTimeout(inst.view),
            );
        }
        // Answer everything that arrived while reads/writes were disabled.
        let queued = std::mem::take(&mut self.servers[id].queued);
        for (client, msg) in queued {
            self.serve(id, client, msg);
        }
        // The request for the next view may already be waiting.
        self.progress_change(id);
    }

    // ---- client side ----

    fn client_index(&self, pid: ProcessId) -> usize {
        pid - self.n()
    }

    fn client_message(&mut self, pid: ProcessId, src: ProcessId, msg: Message) {
        let idx = self.client_index(pid);
        let now = self.net.now();
        let outcome = self.clients[idx].state.on_ack(src, &msg, &self.sys, now);
        match outcome {
            AckOutcome::Ignored | AckOutcome::Accumulated => {}
            AckOutcome::StartPhase2 { msg, stats } => {
                let c = &self.clients[idx];
                self.net.trace.push(TraceEvent::PhaseComplete {
                    t: now,
                    client: c.state.id(),
                    op: c.ops_started,
                    phase: 1,
                    view: c.state.cview().index(),
                    responders: stats.responders as u32,
                    started_at: stats.started_at,
                });
                self.client_broadcast(idx, msg);
            }
            AckOutcome::Restarted(msg) => {
                self.client_broadcast(idx, msg);
            }
            AckOutcome::Completed(res) => {
                let client_id = self.clients[idx].state.id();
                let op_no = self.clients[idx].ops_started;
                self.net.trace.push(TraceEvent::PhaseComplete {
                    t: now,
                    client: client_id,
                    op: op_no,
                    phase: 2,
                    view: res.view.index(),
                    responders: res.phase2.responders as u32,
                    started_at: res.phase2.started_at,
                });
                self.net.trace.push(TraceEvent::OpCompleted {
                    t: now,
                    client: client_id,
                    op: op_no,
                    kind: kind_str(res.kind).into(),
                    view: res.view.index(),
                    restarts: res.restarts,
                });
                if let Some(h) = self.clients[idx].history_index.take() {
                    let ev = &mut self.history[h];
                    ev.complete = Some(res.completed_at);
                    ev.view = Some(res.view.index());
                    if res.kind == OpKind::Read {
                        ev.value = res.value.clone();
                    }
                }
                let quorum_latency = (res.phase1.completed_at - res.phase1.started_at)
                    + (res.phase2.completed_at - res.phase2.started_at);
                self.ops.push(OpRow {
                    client: client_id,
                    kind: kind_str(res.kind).into(),
                    invoke_ms: as_ms(res.invoked_at),
                    complete_ms: as_ms(res.completed_at),
                    latency_ms: as_ms(quorum_latency),
                    view: res.view.index(),
                    restarts: res.restarts,
                });
                // Closed loop: the next operation starts immediately.
                self.start_next_op(idx);
            }
        }
    }

    fn client_timer(&mut self, pid: ProcessId, tag: TimerTag) {
        let idx = self.client_index(pid);
        match tag {
            TimerTag::ClientStart => self.start_next_op(idx),
            TimerTag::ResendTick => {
                let now = self.net.now();
                let c = &self.clients[idx];
                let resend = ms(self.cfg.timers.resend_interval_ms);
                if !c.state.idle() && now.saturating_sub(c.last_broadcast) >= resend {
                    if let Some(msg) = c.state.current_request() {
                        self.client_broadcast(idx, msg);
                    }
                }
                self.net.set_timer(pid, resend, TimerTag::ResendTick);
            }
            _ => unreachable!("server timer delivered to a client"),
        }
    }

    fn start_next_op(&mut self, idx: usize) {
        let now = self.net.now();
        let read_ratio = self.cfg.clients.read_ratio;
        let c = &mut self.clients[idx];
        let is_read = c.rng.gen_bool(read_ratio);
        c.ops_started += 1;
        let (msg, kind, value) = if is_read {
            (c.state.start_read(now), OpKind::Read, Vec::new())
        } else {
            let value = format!("c{}-{}", c.state.id(), c.writes_issued).into_bytes();
            c.writes_issued += 1;
            (
                c.state.start_write(value.clone(), now),
                OpKind::Write,
                value,
            )
        };
        let client_id = c.state.id();
        let op_no = c.ops_started;
        self.history.push(HistoryEvent {
            client: client_id,
            kind,
            value,
            invoke: now,
            complete: None,
            view: None,
        });
        self.clients[idx].history_index = Some(self.history.len() - 1);
        self.net.trace.push(TraceEvent::OpInvoked {
            t: now,
            client: client_id,
            op: op_no,
            kind: kind_str(kind).into(),
        });
        self.client_broadcast(idx, msg);
    }

    fn client_broadcast(&mut self, idx: usize, msg: Message) {
        let pid = self.n() + idx;
        for dst in 0..self.n() {
            self.net.send(pid, dst, msg.clone());
        }
        self.clients[idx].last_broadcast = self.net.now();
    }
}

fn kind_str(kind: OpKind) -> &'static str {
    match kind {
        OpKind::Read => "read",
        OpKind::Write => "write",
    }
}
