use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{RequestId, Slot};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("request {id}: volume must be positive and finite, got {volume}")]
    NonPositiveVolume { id: RequestId, volume: f64 },
    #[error("request {id}: deadline {deadline} is not after arrival {arrival}")]
    EmptyWindow {
        id: RequestId,
        arrival: Slot,
        deadline: Slot,
    },
    #[error("request {id}: source and destination are the same node")]
    SameEndpoints { id: RequestId },
    #[error("link capacity must be positive and finite, got {0}")]
    BadCapacity(f64),
    #[error("horizon must be at least one slot")]
    ZeroHorizon,
    #[error("topology: {0}")]
    Topology(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// A window `(from, to]` that the link does not track.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("window ({from}, {to}] is outside tracked slots [{base}, {end}]")]
pub struct WindowError {
    pub from: Slot,
    pub to: Slot,
    pub base: Slot,
    pub end: Slot,
}

/// Caller-side misuse of a scheduler. Capacity-driven refusals are not errors;
/// they come back as [`RejectReason`].
#[derive(Debug, Error)]
pub enum SubmitError {
    #[error(transparent)]
    Invalid(#[from] ModelError),
    #[error("request {id} arrives at slot {arrival} but the clock is at {now}")]
    FutureArrival {
        id: RequestId,
        arrival: Slot,
        now: Slot,
    },
    #[error("request id {0} is already known to this scheduler")]
    DuplicateId(RequestId),
    #[error("request {0} is unknown or no longer active")]
    UnknownRequest(RequestId),
    #[error("request {0} needs both src and dst for network scheduling")]
    MissingEndpoints(RequestId),
    #[error("request {id}: node {node} is not in the topology")]
    UnknownNode { id: RequestId, node: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum RejectReason {
    /// The window cannot hold the volume; `shortfall` is the missing amount.
    InsufficientCapacity { shortfall: f64 },
    PastDeadline { deadline: Slot, now: Slot },
    /// The deadline lies beyond the slots the scheduler tracks.
    Horizon { deadline: Slot, limit: Slot },
    NoPath,
}
