//! Views: the linear sequence of weight-assignment epochs.
//!
//! The system moves through a single linear sequence of views. Each view
//! carries its own per-server weight assignment (see [`crate::pwr`]); a view
//! is identified by its position in the sequence, with the initial view at
//! index 0.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Identifier of a view: its position in the installed-view sequence.
///
/// Views serialize as their integer index in all message encodings and
/// trace logs.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct ViewId(pub u64);

/// The initial view.
pub const INITIAL_VIEW: ViewId = ViewId(0);

impl ViewId {
    pub fn index(self) -> u64 {
        self.0
    }

    /// The succeeding view.
    pub fn succ(self) -> ViewId {
        ViewId(self.0 + 1)
    }

    /// The preceding view. Defined only for non-initial views.
    pub fn pred(self) -> Option<ViewId> {
        self.0.checked_sub(1).map(ViewId)
    }
}

impl fmt::Display for ViewId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// Returns true iff `w` is reachable from `v` by one or more `succ` steps.
///
/// Successor chasing is bounded by the target index: views form a finite
/// linear sequence, so once the chase passes `w` it can never reach it.
pub fn more_up_to_date(v: ViewId, w: ViewId) -> bool {
    let mut cur = v.succ();
    loop {
        if cur == w {
            return true;
        }
        if cur.index() > w.index() {
            return false;
        }
        cur = cur.succ();
    }
}
