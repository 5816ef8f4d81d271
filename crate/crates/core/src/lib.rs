//! Close-to-deadline bandwidth scheduling for deadline-constrained bulk
//! transfers on timeslotted links and networks.
//!
//! Requests are admitted on arrival if and only if they fit on the residual
//! capacity before their deadline. Admitted traffic is booked as late as
//! possible and pulled forward when the current slot has spare capacity, so
//! no admitted booking ever has to move to make room for a newcomer.

pub mod baseline;
pub mod error;
pub mod kernel;
pub mod link;
pub mod link_state;
pub mod model;
pub mod net;
pub mod report;
pub mod sim;
pub mod topology;
pub mod workload;

pub use baseline::BaselineScheduler;
pub use error::{ModelError, RejectReason, SubmitError, WindowError};
pub use link::{LinkScheduler, PullMove};
pub use link_state::LinkState;
pub use model::{AllocationProfile, Request, RequestId, RequestKind, Slot, DUST, EPS};
pub use net::{NetMove, NetScheduler};
pub use report::{Counters, Decision, RequestStatus, Scheduler, SlotReport};
pub use sim::{MetricsReport, SimError};
pub use topology::{LinkId, LinkSpec, Topology};
pub use workload::{SchedulerKind, SimulationConfig};
