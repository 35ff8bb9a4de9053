//! Protocol message payloads.
//!
//! Every message that crosses the simulated wire is one of these variants.
//! Views travel as their integer index; weights travel as `f64`; register
//! values are opaque byte strings where the empty string is the distinguished
//! "never written" marker.

use crate::abd::Value;
use crate::quorum::ServerId;
use crate::time::SimTime;
use crate::views::ViewId;

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    /// Latency probe; carries its send time so the pong can be matched
    /// without a correlation table.
    Ping { sent_at: SimTime },
    Pong { echo: SimTime },

    /// Proposal to receive `epsilon` weight from the destination for `view`.
    ProposePwr { view: ViewId, epsilon: f64 },
    /// Acceptance of a proposal: the sender gave up `epsilon` for `view`.
    AcceptPwr { view: ViewId, epsilon: f64 },

    /// Request to change the installed view to `view`.
    ChangeView { view: ViewId },
    /// Register state plus the sender's weight in `view`, sent while
    /// uninstalling `view`.
    StateUpdate {
        sender: ServerId,
        value: Value,
        ts: u64,
        cid: u64,
        view: ViewId,
        weight: f64,
    },

    /// ABD phase 1 request.
    Read { cnt: u64, view: ViewId },
    /// ABD phase 1 response. `weight` is `None` when the server's view did
    /// not match the request's.
    ReadAck {
        value: Value,
        ts: u64,
        cid: u64,
        cnt: u64,
        view: ViewId,
        weight: Option<f64>,
    },
    /// ABD phase 2 request.
    Write {
        value: Value,
        ts: u64,
        cid: u64,
        cnt: u64,
        view: ViewId,
    },
    /// ABD phase 2 response.
    WriteAck {
        cnt: u64,
        view: ViewId,
        weight: Option<f64>,
    },
}

impl Message {
    /// Short tag for trace records.
    pub fn kind(&self) -> &'static str {
        match self {
            Message::Ping { .. } => "ping",
            Message::Pong { .. } => "pong",
            Message::ProposePwr { .. } => "propose_pwr",
            Message::AcceptPwr { .. } => "accept_pwr",
            Message::ChangeView { .. } => "change_view",
            Message::StateUpdate { .. } => "state_update",
            Message::Read { .. } => "read",
            Message::ReadAck { .. } => "readack",
            Message::Write { .. } => "write",
            Message::WriteAck { .. } => "writeack",
        }
    }

    /// One-line payload summary for trace records.
    pub fn summary(&self) -> String {
        match self {
            Message::Ping { .. } | Message::Pong { .. } => String::new(),
            Message::ProposePwr { view, epsilon } | Message::AcceptPwr { view, epsilon } => {
                format!("{view} eps={epsilon}")
            }
            Message::ChangeView { view } => format!("{view}"),
            Message::StateUpdate {
                sender,
                ts,
                cid,
                view,
                weight,
                ..
            } => format!("from=s{sender} ts={ts} cid={cid} {view} w={weight}"),
            Message::Read { cnt, view } => format!("cnt={cnt} {view}"),
            Message::ReadAck {
                ts,
                cid,
                cnt,
                view,
                weight,
                ..
            } => format!(
                "ts={ts} cid={cid} cnt={cnt} {view} w={}",
                weight.map_or("none".into(), |w| w.to_string())
            ),
            Message::Write { ts, cid, cnt, view, .. } => {
                format!("ts={ts} cid={cid} cnt={cnt} {view}")
            }
            Message::WriteAck { cnt, view, weight } => format!(
                "cnt={cnt} {view} w={}",
                weight.map_or("none".into(), |w| w.to_string())
            ),
        }
    }
}
