use serde::{Deserialize, Serialize};

use crate::error::{RejectReason, SubmitError};
use crate::model::{AllocationProfile, Request, RequestId, Slot};

/// Outcome of an admission attempt.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "decision", content = "detail", rename_all = "snake_case")]
pub enum Decision<K: Ord = Slot> {
    Accepted(AllocationProfile<K>),
    Rejected(RejectReason),
}

impl<K: Ord> Decision<K> {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Decision::Accepted(_))
    }

    pub fn profile(&self) -> Option<&AllocationProfile<K>> {
        match self {
            Decision::Accepted(p) => Some(p),
            Decision::Rejected(_) => None,
        }
    }
}

/// What happened during one slot.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SlotReport {
    pub slot: Slot,
    pub sent: f64,
    /// Mean link utilisation of the slot, in `[0, 1]`.
    pub utilization: f64,
    pub accepted: u64,
    pub rejected: u64,
    pub cancelled_reservations: Vec<RequestId>,
    /// Per-link utilisation; empty for single-link schedulers.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub link_utilization: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum RequestStatus {
    Active,
    Completed { at: Slot },
    Cancelled { at: Slot },
    Rejected,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Counters {
    pub accepted: u64,
    pub rejected: u64,
    pub sent: f64,
    pub completed: u64,
    pub cancelled: u64,
    /// Admitted requests that reached their deadline unfinished. Always zero
    /// unless an invariant is broken.
    pub missed: u64,
}

/// Common driver interface of the single-link schedulers.
pub trait Scheduler {
    fn t_now(&self) -> Slot;
    fn submit(&mut self, request: Request) -> Result<Decision, SubmitError>;
    /// Use spare capacity of the current slot. A no-op for schedulers that
    /// already pack work as early as possible.
    fn fill_current_slot(&mut self);
    fn advance(&mut self) -> SlotReport;
    fn counters(&self) -> Counters;
    fn capacity(&self) -> f64;
}
