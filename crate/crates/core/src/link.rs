//! The close-to-deadline scheduler for a single link.
//!
//! Every admitted request is placed as late as its deadline allows on the
//! residual capacity, and nothing already admitted is ever moved later. That
//! keeps the free space in front of any deadline maximal, so admission only
//! has to look at the residual window of the new request. Spare capacity in
//! the current slot is filled by pulling mass forward from the earliest
//! booked slot.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, RejectReason, SubmitError};
use crate::kernel::{solve_latest_first, LatestFirstProblem};
use crate::link_state::LinkState;
use crate::model::{AllocationProfile, Request, RequestId, RequestKind, Slot, DUST, EPS};
use crate::report::{Counters, Decision, RequestStatus, Scheduler, SlotReport};

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Record {
    request: Request,
    sent: f64,
    content_ready: bool,
    /// Booked volume that lost its slot while the content was missing.
    stranded: f64,
    status: RequestStatus,
}

/// One pull-forward step: `amount` of `request` moved from slot `from` into
/// the current slot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PullMove {
    pub request: RequestId,
    pub from: Slot,
    pub amount: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LinkScheduler {
    link: LinkState,
    records: BTreeMap<RequestId, Record>,
    live: BTreeSet<RequestId>,
    counters: Counters,
    slot_accepted: u64,
    slot_rejected: u64,
}

impl LinkScheduler {
    pub fn new(capacity: f64, horizon: u64) -> Result<Self, ModelError> {
        Ok(Self::with_link(LinkState::new(capacity, horizon)?))
    }

    pub fn with_link(link: LinkState) -> Self {
        Self {
            link,
            records: BTreeMap::new(),
            live: BTreeSet::new(),
            counters: Counters::default(),
            slot_accepted: 0,
            slot_rejected: 0,
        }
    }

    pub fn link(&self) -> &LinkState {
        &self.link
    }

    pub fn t_now(&self) -> Slot {
        self.link.base()
    }

    pub fn status(&self, id: RequestId) -> Option<RequestStatus> {
        self.records.get(&id).map(|r| r.status)
    }

    pub fn sent(&self, id: RequestId) -> f64 {
        self.records.get(&id).map_or(0.0, |r| r.sent)
    }

    /// Current bookings of `id` from the current slot onward.
    pub fn profile(&self, id: RequestId) -> AllocationProfile {
        match self.records.get(&id) {
            Some(r) if r.status == RequestStatus::Active => {
                self.link.profile_of(id, r.request.deadline, self.t_now())
            }
            _ => AllocationProfile::new(),
        }
    }

    pub fn live(&self) -> impl Iterator<Item = &Request> + '_ {
        self.live.iter().map(|id| &self.records[id].request)
    }

    /// Volume of `id` not yet transmitted.
    pub fn remaining(&self, id: RequestId) -> f64 {
        self.records
            .get(&id)
            .map_or(0.0, |r| (r.request.volume - r.sent).max(0.0))
    }

    /// Admit or reject an elastic request arriving in the current slot.
    /// Reservations are routed to [`reserve`](Self::reserve).
    pub fn submit(&mut self, request: Request) -> Result<Decision, SubmitError> {
        let ready = request.kind == RequestKind::Elastic;
        self.admit(request, ready)
    }

    /// Book bandwidth for a transfer whose content is not available yet. The
    /// admission test is the same as for elastic traffic; the booked mass is
    /// not sent until [`mark_content_available`](Self::mark_content_available).
    pub fn reserve(&mut self, mut request: Request) -> Result<Decision, SubmitError> {
        request.kind = RequestKind::Reservation;
        self.admit(request, false)
    }

    pub fn mark_content_available(&mut self, id: RequestId) -> Result<(), SubmitError> {
        let now = self.t_now();
        let rec = match self.records.get_mut(&id) {
            Some(r) if r.status == RequestStatus::Active => r,
            _ => return Err(SubmitError::UnknownRequest(id)),
        };
        rec.content_ready = true;
        if rec.stranded > DUST && rec.request.deadline > now {
            let (deadline, stranded) = (rec.request.deadline, rec.stranded);
            let left = self.place_latest(id, deadline, now, stranded);
            self.records.get_mut(&id).expect("record").stranded = left;
        }
        Ok(())
    }

    fn admit(&mut self, request: Request, content_ready: bool) -> Result<Decision, SubmitError> {
        request.validate()?;
        let now = self.t_now();
        if request.arrival > now {
            return Err(SubmitError::FutureArrival {
                id: request.id,
                arrival: request.arrival,
                now,
            });
        }
        if self.records.contains_key(&request.id) {
            return Err(SubmitError::DuplicateId(request.id));
        }
        let decision = if request.deadline <= now {
            Decision::Rejected(RejectReason::PastDeadline {
                deadline: request.deadline,
                now,
            })
        } else if request.deadline > self.link.end() {
            Decision::Rejected(RejectReason::Horizon {
                deadline: request.deadline,
                limit: self.link.end(),
            })
        } else {
            let residual = self
                .link
                .window(now, request.deadline)
                .expect("window checked against horizon");
            let problem = LatestFirstProblem::new(request.volume, now, request.deadline, residual);
            match solve_latest_first(&problem) {
                Ok(profile) => {
                    for (t, amount) in profile.iter() {
                        self.link.allocate(request.id, request.deadline, t, amount);
                    }
                    Decision::Accepted(profile)
                }
                Err(e) => Decision::Rejected(RejectReason::InsufficientCapacity {
                    shortfall: e.shortfall,
                }),
            }
        };
        let status = if decision.is_accepted() {
            self.counters.accepted += 1;
            self.slot_accepted += 1;
            self.live.insert(request.id);
            RequestStatus::Active
        } else {
            self.counters.rejected += 1;
            self.slot_rejected += 1;
            RequestStatus::Rejected
        };
        self.records.insert(
            request.id,
            Record {
                request,
                sent: 0.0,
                content_ready,
                stranded: 0.0,
                status,
            },
        );
        Ok(decision)
    }

    fn ready(&self, id: RequestId) -> bool {
        self.records.get(&id).is_some_and(|r| r.content_ready)
    }

    /// Books as much of `amount` as fits in `(after, deadline]`, latest slots
    /// first. Returns the part that did not fit.
    fn place_latest(&mut self, id: RequestId, deadline: Slot, after: Slot, amount: f64) -> f64 {
        if deadline <= after {
            return amount;
        }
        let residual = self.link.window(after, deadline).expect("window within horizon");
        let room: f64 = residual.iter().sum();
        let placeable = amount.min(room);
        if placeable > DUST {
            let problem = LatestFirstProblem::new(placeable, after, deadline, residual);
            if let Ok(profile) = solve_latest_first(&problem) {
                for (t, a) in profile.iter() {
                    self.link.allocate(id, deadline, t, a);
                }
            }
        }
        (amount - placeable).max(0.0)
    }

    /// Fill the spare capacity of the current slot from the earliest non-empty
    /// future slot, repeatedly, until the slot is full or nothing is left.
    ///
    /// Within one slot, bookings are drained by ascending deadline, then id.
    /// Reservations whose content is missing are skipped; if one of them is
    /// booked in the current slot, its mass is moved out first and re-booked
    /// latest-first in its remaining window once the pull is done.
    pub fn pull_forward(&mut self) -> Vec<PullMove> {
        let now = self.t_now();
        let deferred: Vec<_> = self
            .link
            .entries(now)
            .iter()
            .filter(|a| !self.ready(a.request))
            .copied()
            .collect();
        for a in &deferred {
            self.link.deallocate(a.request, a.deadline, now, a.amount);
        }

        let mut moves = Vec::new();
        let last = self
            .live
            .iter()
            .map(|id| self.records[id].request.deadline)
            .max()
            .unwrap_or(now)
            .min(self.link.end());
        let mut s = now + 1;
        while s <= last && self.link.residual(now) > DUST {
            let candidates = self.link.entries(s).to_vec();
            for a in candidates {
                if !self.ready(a.request) {
                    continue;
                }
                let spare = self.link.residual(now);
                if spare <= DUST {
                    break;
                }
                let amount = self
                    .link
                    .deallocate(a.request, a.deadline, s, a.amount.min(spare));
                self.link.allocate(a.request, a.deadline, now, amount);
                moves.push(PullMove {
                    request: a.request,
                    from: s,
                    amount,
                });
            }
            s += 1;
        }

        for a in deferred {
            let left = self.place_latest(a.request, a.deadline, now, a.amount);
            self.records.get_mut(&a.request).expect("record").stranded += left;
        }
        moves
    }

    /// Transmit the current slot, retire finished requests, expire
    /// reservations that can no longer finish, and move the clock.
    pub fn advance(&mut self) -> SlotReport {
        let now = self.t_now();
        let mut sent = 0.0;
        for a in self.link.rotate() {
            let rec = self.records.get_mut(&a.request).expect("booked request has a record");
            if rec.content_ready {
                rec.sent += a.amount;
                sent += a.amount;
            } else {
                rec.stranded += a.amount;
            }
        }
        self.counters.sent += sent;

        let mut cancelled = Vec::new();
        let live: Vec<RequestId> = self.live.iter().copied().collect();
        for id in live {
            let rec = &self.records[&id];
            let (volume, deadline) = (rec.request.volume, rec.request.deadline);
            let remaining = volume - rec.sent;
            if remaining <= EPS {
                self.finish(id, RequestStatus::Completed { at: now });
                continue;
            }
            let reservation = rec.request.kind == RequestKind::Reservation;
            if reservation && (!rec.content_ready || rec.stranded > DUST) {
                // Expiry: what the reservation could still use before its
                // deadline no longer covers what it has left to send.
                let stranded = rec.stranded;
                let usable = if deadline > now {
                    self.link.profile_of(id, deadline, now + 1).total()
                        + self.link.window_residual(now, deadline).unwrap_or(0.0)
                } else {
                    0.0
                };
                if usable < remaining - EPS {
                    self.link.release(id, deadline, now);
                    self.finish(id, RequestStatus::Cancelled { at: now });
                    self.counters.cancelled += 1;
                    cancelled.push(id);
                    continue;
                }
                if stranded > DUST {
                    let left = self.place_latest(id, deadline, now, stranded);
                    self.records.get_mut(&id).expect("record").stranded = left;
                }
                continue;
            }
            if deadline <= now {
                self.counters.missed += 1;
                self.link.release(id, deadline, now);
                self.finish(id, RequestStatus::Cancelled { at: now });
            }
        }

        let report = SlotReport {
            slot: now,
            sent,
            utilization: sent / self.link.capacity(),
            accepted: self.slot_accepted,
            rejected: self.slot_rejected,
            cancelled_reservations: cancelled,
            link_utilization: Vec::new(),
        };
        self.slot_accepted = 0;
        self.slot_rejected = 0;
        report
    }

    fn finish(&mut self, id: RequestId, status: RequestStatus) {
        self.live.remove(&id);
        let rec = self.records.get_mut(&id).expect("record");
        rec.status = status;
        if matches!(status, RequestStatus::Completed { .. }) {
            self.counters.completed += 1;
        }
    }

    pub fn counters(&self) -> Counters {
        self.counters
    }

    /// Checks link conservation, that bookings stay inside each request's
    /// window, and that every live request's volume is accounted for.
    pub fn check_invariants(&self) -> Result<(), String> {
        self.link.check_conservation()?;
        let ledger = self.link.ledger();
        for (id, profile) in &ledger {
            let rec = self
                .records
                .get(id)
                .ok_or_else(|| format!("booking for unknown request {id}"))?;
            if rec.status != RequestStatus::Active {
                return Err(format!("request {id} is {:?} but still booked", rec.status));
            }
            if let Some((t, _)) = profile.iter().find(|(t, _)| *t > rec.request.deadline) {
                return Err(format!("request {id} booked at {t} past deadline {}", rec.request.deadline));
            }
        }
        for id in &self.live {
            let rec = &self.records[id];
            let booked = ledger.get(id).map_or(0.0, |p| p.total());
            let accounted = rec.sent + booked + rec.stranded;
            if (accounted - rec.request.volume).abs() > 1e-7 {
                return Err(format!(
                    "request {id}: sent {} + booked {booked} + stranded {} != volume {}",
                    rec.sent, rec.stranded, rec.request.volume
                ));
            }
        }
        Ok(())
    }
}

impl Scheduler for LinkScheduler {
    fn t_now(&self) -> Slot {
        LinkScheduler::t_now(self)
    }

    fn submit(&mut self, request: Request) -> Result<Decision, SubmitError> {
        LinkScheduler::submit(self, request)
    }

    fn fill_current_slot(&mut self) {
        self.pull_forward();
    }

    fn advance(&mut self) -> SlotReport {
        LinkScheduler::advance(self)
    }

    fn counters(&self) -> Counters {
        self.counters
    }

    fn capacity(&self) -> f64 {
        self.link.capacity()
    }
}
