//! Deterministic discrete-event simulated network.
//!
//! Reliable FIFO-per-link delivery with time-varying latencies, timers, and
//! crash injection. Events pop in `(time, kind rank, source, sequence)`
//! order, so a fixed configuration and seed replays bit-identically.
//!
//! Latency between two processes is looked up in the schedule epoch current
//! at send time, optionally stretched by seeded multiplicative jitter, and
//! then clamped so deliveries on one ordered link never reorder.

use crate::message::Message;
use crate::time::{ms_f64, SimTime};
use crate::trace::{Trace, TraceEvent};
use crate::views::ViewId;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

/// Id of any simulated process. Servers occupy `0..n`, clients follow.
pub type ProcessId = usize;

/// A message in flight.
#[derive(Debug, Clone)]
pub struct Envelope {
    pub src: ProcessId,
    pub dst: ProcessId,
    pub send_time: SimTime,
    pub deliver_time: SimTime,
    pub msg: Message,
}

/// Why a timer fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimerTag {
    /// Periodic latency probe round.
    PingRound,
    /// Periodic pairwise-reassignment attempt.
    ProposeTick,
    /// The view timer for this view expired.
    ViewTimeout(ViewId),
    /// Periodic client re-broadcast check.
    ResendTick,
    /// Client starts its first operation.
    ClientStart,
}

impl TimerTag {
    pub fn label(&self) -> String {
        match self {
            TimerTag::PingRound => "ping_round".into(),
            TimerTag::ProposeTick => "propose_tick".into(),
            TimerTag::ViewTimeout(v) => format!("view_timeout({v})"),
            TimerTag::ResendTick => "resend_tick".into(),
            TimerTag::ClientStart => "client_start".into(),
        }
    }
}

pub type TimerId = u64;

/// An event handed to the driver.
#[derive(Debug)]
pub enum Event {
    Deliver(Envelope),
    Timer {
        process: ProcessId,
        tag: TimerTag,
    },
    Crash {
        process: ProcessId,
    },
}

/// One-way latency matrices switching at fixed times. The epoch in force at
/// send time decides a message's flight time.
#[derive(Debug, Clone)]
pub struct LatencySchedule {
    /// `(start_time, matrix)` with strictly increasing start times; the
    /// first epoch must start at 0. `matrix[src][dst]` is one-way
    /// milliseconds and must be positive.
    epochs: Vec<(SimTime, Vec<Vec<f64>>)>,
}

impl LatencySchedule {
    pub fn new(epochs: Vec<(SimTime, Vec<Vec<f64>>)>) -> Self {
        assert!(!epochs.is_empty(), "schedule needs at least one epoch");
        assert_eq!(epochs[0].0, 0, "first epoch must start at time 0");
        assert!(
            epochs.windows(2).all(|w| w[0].0 < w[1].0),
            "epoch start times must strictly increase"
        );
        for (_, m) in &epochs {
            assert!(m.iter().all(|row| row.iter().all(|&l| l > 0.0)));
        }
        LatencySchedule { epochs }
    }

    /// Single epoch in force for the whole run.
    pub fn fixed(matrix: Vec<Vec<f64>>) -> Self {
        Self::new(vec![(0, matrix)])
    }

    pub fn one_way_ms(&self, at: SimTime, src: ProcessId, dst: ProcessId) -> f64 {
        let idx = match self.epochs.binary_search_by_key(&at, |e| e.0) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        self.epochs[idx].1[src][dst]
    }

    pub fn epoch_count(&self) -> usize {
        self.epochs.len()
    }
}

/// Scheduled server crashes. At most `f` of them should name servers; the
/// driver enforces that when building plans.
#[derive(Debug, Clone, Default)]
pub struct CrashPlan {
    pub crashes: Vec<(ProcessId, SimTime)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Rank {
    Crash = 0,
    Delivery = 1,
    Timer = 2,
}

#[derive(Debug)]
enum Queued {
    Deliver(Envelope),
    Timer {
        process: ProcessId,
        id: TimerId,
        tag: TimerTag,
    },
    Crash {
        process: ProcessId,
    },
}

/// The simulated network and event queue.
pub struct SimNet {
    now: SimTime,
    queue: BinaryHeap<Reverse<(SimTime, Rank, ProcessId, u64)>>,
    payloads: BTreeMap<u64, Queued>,
    seq: u64,
    schedule: LatencySchedule,
    jitter: f64,
    jitter_rng: ChaCha8Rng,
    crashed: BTreeSet<ProcessId>,
    cancelled: BTreeSet<TimerId>,
    next_timer: TimerId,
    /// Last scheduled delivery per ordered link, for the FIFO clamp.
    link_last: BTreeMap<(ProcessId, ProcessId), SimTime>,
    pub trace: Trace,
}

impl SimNet {
    pub fn new(
        schedule: LatencySchedule,
        crash_plan: &CrashPlan,
        jitter: f64,
        jitter_rng: ChaCha8Rng,
        trace: Trace,
    ) -> Self {
        assert!((0.0..1.0).contains(&jitter));
        let mut net = SimNet {
            now: 0,
            queue: BinaryHeap::new(),
            payloads: BTreeMap::new(),
            seq: 0,
            schedule,
            jitter,
            jitter_rng,
            crashed: BTreeSet::new(),
            cancelled: BTreeSet::new(),
            next_timer: 0,
            link_last: BTreeMap::new(),
            trace,
        };
        for &(process, at) in &crash_plan.crashes {
            net.push(at, Rank::Crash, process, Queued::Crash { process });
        }
        net
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn is_crashed(&self, p: ProcessId) -> bool {
        self.crashed.contains(&p)
    }

    fn push(&mut self, time: SimTime, rank: Rank, src: ProcessId, q: Queued) {
        let seq = self.seq;
        self.seq += 1;
        self.payloads.insert(seq, q);
        self.queue.push(Reverse((time, rank, src, seq)));
    }

    /// Sends `msg` from `src` to `dst`, scheduling delivery after the
    /// current one-way latency plus jitter. A send from a crashed process is
    /// a driver bug.
    pub fn send(&mut self, src: ProcessId, dst: ProcessId, msg: Message) {
        debug_assert!(!self.is_crashed(src), "crashed processes emit nothing");
        let base = self.schedule.one_way_ms(self.now, src, dst);
        let factor = if self.jitter > 0.0 {
            self.jitter_rng
                .gen_range(1.0 - self.jitter..=1.0 + self.jitter)
        } else {
            1.0
        };
        let mut deliver = self.now + ms_f64(base * factor);
        // FIFO per ordered link: never schedule before an earlier message.
        if let Some(&last) = self.link_last.get(&(src, dst)) {
            deliver = deliver.max(last);
        }
        self.link_last.insert((src, dst), deliver);
        if self.trace.full() {
            self.trace.push(TraceEvent::Send {
                t: self.now,
                src,
                dst,
                kind: msg.kind().into(),
                info: msg.summary(),
            });
        }
        let env = Envelope {
            src,
            dst,
            send_time: self.now,
            deliver_time: deliver,
            msg,
        };
        self.push(deliver, Rank::Delivery, src, Queued::Deliver(env));
    }

    /// Arms a timer owned by `process` to fire `delay` from now.
    pub fn set_timer(&mut self, process: ProcessId, delay: SimTime, tag: TimerTag) -> TimerId {
        assert!(delay > 0);
        let id = self.next_timer;
        self.next_timer += 1;
        self.push(
            self.now + delay,
            Rank::Timer,
            process,
            Queued::Timer { process, id, tag },
        );
        id
    }

    pub fn cancel_timer(&mut self, id: TimerId) {
        self.cancelled.insert(id);
    }

    /// Pops the next event at or before `until`, advancing simulated time.
    /// Deliveries to crashed processes and timers of crashed processes are
    /// consumed silently.
    pub fn next_event(&mut self, until: SimTime) -> Option<Event> {
        loop {
            let &Reverse((time, _, _, seq)) = self.queue.peek()?;
            if time > until {
                return None;
            }
            self.queue.pop();
            let item = self.payloads.remove(&seq).expect("payload for queued event");
            self.now = time;
            match item {
                Queued::Deliver(env) => {
                    if self.is_crashed(env.dst) {
                        continue; // dropped at delivery time
                    }
                    if self.trace.full() {
                        self.trace.push(TraceEvent::Deliver {
                            t: time,
                            src: env.src,
                            dst: env.dst,
                            kind: env.msg.kind().into(),
                            info: env.msg.summary(),
                        });
                    }
                    return Some(Event::Deliver(env));
                }
                Queued::Timer { process, id, tag } => {
                    if self.cancelled.remove(&id) || self.is_crashed(process) {
                        continue;
                    }
                    return Some(Event::Timer { process, tag });
                }
                Queued::Crash { process } => {
                    if !self.crashed.insert(process) {
                        continue;
                    }
                    self.trace.push(TraceEvent::Crash { t: time, process });
                    return Some(Event::Crash { process });
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::TraceLevel;
    use rand::SeedableRng;

    fn flat(n: usize, ms: f64) -> Vec<Vec<f64>> {
        vec![vec![ms; n]; n]
    }

    fn quiet_net(schedule: LatencySchedule, crash: &CrashPlan, jitter: f64, seed: u64) -> SimNet {
        SimNet::new(
            schedule,
            crash,
            jitter,
            ChaCha8Rng::seed_from_u64(seed),
            Trace::new(TraceLevel::Protocol),
        )
    }

    #[test]
    fn delivery_after_one_way_latency() {
        let mut net = quiet_net(
            LatencySchedule::fixed(flat(2, 45.0)),
            &CrashPlan::default(),
            0.0,
            1,
        );
        net.send(0, 1, Message::Ping { sent_at: 0 });
        match net.next_event(u64::MAX) {
            Some(Event::Deliver(env)) => {
                assert_eq!(env.deliver_time, crate::time::ms(45));
                assert_eq!(net.now(), crate::time::ms(45));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fifo_per_link_despite_jitter() {
        let mut net = quiet_net(
            LatencySchedule::fixed(flat(2, 50.0)),
            &CrashPlan::default(),
            0.5,
            7,
        );
        for i in 0..20 {
            net.send(0, 1, Message::Ping { sent_at: i });
        }
        let mut last = 0;
        let mut order = Vec::new();
        while let Some(ev) = net.next_event(u64::MAX) {
            if let Event::Deliver(env) = ev {
                assert!(env.deliver_time >= last);
                last = env.deliver_time;
                if let Message::Ping { sent_at } = env.msg {
                    order.push(sent_at);
                }
            }
        }
        assert_eq!(order, (0..20).collect::<Vec<_>>());
    }

    #[test]
    fn crashed_destination_drops_delivery() {
        let plan = CrashPlan {
            crashes: vec![(1, crate::time::ms(10))],
        };
        let mut net = quiet_net(LatencySchedule::fixed(flat(2, 45.0)), &plan, 0.0, 1);
        net.send(0, 1, Message::Ping { sent_at: 0 });
        // Crash first, then the delivery is silently consumed.
        assert!(matches!(
            net.next_event(u64::MAX),
            Some(Event::Crash { process: 1 })
        ));
        assert!(net.next_event(u64::MAX).is_none());
    }

    #[test]
    fn timers_fire_cancel_and_die_with_their_owner() {
        let plan = CrashPlan {
            crashes: vec![(1, crate::time::ms(100))],
        };
        let mut net = quiet_net(LatencySchedule::fixed(flat(2, 1.0)), &plan, 0.0, 1);
        net.set_timer(0, crate::time::ms(20), TimerTag::PingRound);
        let cancelled = net.set_timer(0, crate::time::ms(30), TimerTag::PingRound);
        net.cancel_timer(cancelled);
        net.set_timer(1, crate::time::ms(200), TimerTag::PingRound); // owner crashes first
        assert!(matches!(
            net.next_event(u64::MAX),
            Some(Event::Timer { process: 0, .. })
        ));
        assert_eq!(net.now(), crate::time::ms(20));
        assert!(matches!(
            net.next_event(u64::MAX),
            Some(Event::Crash { process: 1 })
        ));
        assert!(net.next_event(u64::MAX).is_none());
    }

    #[test]
    fn epochs_switch_latency_at_send_time() {
        let schedule = LatencySchedule::new(vec![
            (0, flat(2, 10.0)),
            (crate::time::ms(100), flat(2, 70.0)),
        ]);
        let mut net = quiet_net(schedule, &CrashPlan::default(), 0.0, 1);
        net.send(0, 1, Message::Ping { sent_at: 0 });
        net.set_timer(0, crate::time::ms(150), TimerTag::PingRound);
        // First delivery at 10ms under the old epoch.
        match net.next_event(u64::MAX) {
            Some(Event::Deliver(env)) => assert_eq!(env.deliver_time, crate::time::ms(10)),
            other => panic!("unexpected {other:?}"),
        }
        // After the switch, the same link takes 70ms.
        assert!(matches!(net.next_event(u64::MAX), Some(Event::Timer { .. })));
        net.send(0, 1, Message::Ping { sent_at: 1 });
        match net.next_event(u64::MAX) {
            Some(Event::Deliver(env)) => {
                assert_eq!(env.deliver_time, crate::time::ms(150 + 70));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn identical_seeds_replay_identically() {
        let run = |seed: u64| -> Vec<(SimTime, ProcessId, ProcessId)> {
            let mut net = quiet_net(
                LatencySchedule::fixed(flat(3, 25.0)),
                &CrashPlan::default(),
                0.2,
                seed,
            );
            for src in 0..3usize {
                for dst in 0..3usize {
                    net.send(src, dst, Message::Ping { sent_at: 0 });
                }
            }
            let mut log = Vec::new();
            while let Some(Event::Deliver(env)) = net.next_event(u64::MAX) {
                log.push((env.deliver_time, env.src, env.dst));
            }
            log
        };
        assert_eq!(run(99), run(99));
        assert_ne!(run(99), run(100)); // different jitter stream
    }
}
