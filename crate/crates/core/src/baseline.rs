//! Rescheduling comparator: as-soon-as-possible placement, first come first
//! served, no preemption, and a joint re-pack of everything admitted when a
//! newcomer does not fit on the residual capacity.
//!
//! The re-pack considers every admitted request, not a subset, so this is an
//! idealised upper bound on what a rescheduling admission controller can
//! accept on one link.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, RejectReason, SubmitError};
use crate::kernel::{solve_earliest_first, LatestFirstProblem};
use crate::link_state::LinkState;
use crate::model::{AllocationProfile, Request, RequestId, Slot, DUST, EPS};
use crate::report::{Counters, Decision, RequestStatus, Scheduler, SlotReport};

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Record {
    request: Request,
    sent: f64,
    status: RequestStatus,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BaselineScheduler {
    link: LinkState,
    records: BTreeMap<RequestId, Record>,
    live: BTreeSet<RequestId>,
    counters: Counters,
    slot_accepted: u64,
    slot_rejected: u64,
    reschedules: u64,
}

impl BaselineScheduler {
    pub fn new(capacity: f64, horizon: u64) -> Result<Self, ModelError> {
        Ok(Self {
            link: LinkState::new(capacity, horizon)?,
            records: BTreeMap::new(),
            live: BTreeSet::new(),
            counters: Counters::default(),
            slot_accepted: 0,
            slot_rejected: 0,
            reschedules: 0,
        })
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

    /// Number of admissions that needed a joint re-pack.
    pub fn reschedules(&self) -> u64 {
        self.reschedules
    }

    pub fn submit(&mut self, request: Request) -> Result<Decision, SubmitError> {
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
            self.place(&request)
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
                status,
            },
        );
        Ok(decision)
    }

    fn place(&mut self, request: &Request) -> Decision {
        let now = self.t_now();
        let residual = self
            .link
            .window(now, request.deadline)
            .expect("window checked against horizon");
        let problem = LatestFirstProblem::new(request.volume, now, request.deadline, residual);
        if let Ok(profile) = solve_earliest_first(&problem) {
            for (t, a) in profile.iter() {
                self.link.allocate(request.id, request.deadline, t, a);
            }
            return Decision::Accepted(profile);
        }
        self.repack(request)
    }

    /// Joint earliest-deadline-first re-pack of the future mass of every live
    /// request plus the newcomer. Slot `t_now` is already committed and is
    /// left alone. Adopted only if every request still meets its deadline.
    fn repack(&mut self, request: &Request) -> Decision {
        let now = self.t_now();
        let mut jobs: Vec<(Slot, RequestId, f64)> = self
            .live
            .iter()
            .filter_map(|id| {
                let r = &self.records[id].request;
                let future = self.link.profile_of(*id, r.deadline, now + 1).total();
                (future > DUST).then_some((r.deadline, *id, future))
            })
            .collect();
        jobs.push((request.deadline, request.id, request.volume));
        jobs.sort_by_key(|j| (j.0, j.1));

        let last = jobs.last().map_or(now, |j| j.0);
        let cap = self.link.capacity();
        let mut free = vec![cap; (last - now) as usize];
        let mut cursor = 0usize;
        let mut plans: Vec<AllocationProfile> = Vec::with_capacity(jobs.len());
        let mut shortfall = 0.0;
        for &(deadline, _, volume) in &jobs {
            let mut left = volume;
            let mut plan = AllocationProfile::new();
            let end = (deadline - now) as usize;
            while left > DUST && cursor < end {
                let take = free[cursor].min(left);
                if take > DUST {
                    plan.add(now + 1 + cursor as u64, take);
                    free[cursor] -= take;
                    left -= take;
                }
                if free[cursor] <= DUST {
                    cursor += 1;
                }
            }
            if left > EPS {
                shortfall += left;
            }
            plans.push(plan);
        }
        if shortfall > 0.0 {
            return Decision::Rejected(RejectReason::InsufficientCapacity { shortfall });
        }

        self.reschedules += 1;
        for &(deadline, id, _) in &jobs {
            if id != request.id {
                self.link.release(id, deadline, now);
            }
        }
        let mut accepted = AllocationProfile::new();
        for (&(deadline, id, _), plan) in jobs.iter().zip(plans) {
            for (t, a) in plan.iter() {
                self.link.allocate(id, deadline, t, a);
            }
            if id == request.id {
                accepted = plan;
            }
        }
        Decision::Accepted(accepted)
    }

    pub fn advance(&mut self) -> SlotReport {
        let now = self.t_now();
        let mut sent = 0.0;
        for a in self.link.rotate() {
            let rec = self.records.get_mut(&a.request).expect("booked request has a record");
            rec.sent += a.amount;
            sent += a.amount;
        }
        self.counters.sent += sent;

        let live: Vec<RequestId> = self.live.iter().copied().collect();
        for id in live {
            let rec = self.records.get_mut(&id).expect("record");
            if rec.request.volume - rec.sent <= EPS {
                rec.status = RequestStatus::Completed { at: now };
                self.live.remove(&id);
                self.counters.completed += 1;
            } else if rec.request.deadline <= now {
                rec.status = RequestStatus::Cancelled { at: now };
                self.live.remove(&id);
                self.counters.missed += 1;
            }
        }

        let report = SlotReport {
            slot: now,
            sent,
            utilization: sent / self.link.capacity(),
            accepted: self.slot_accepted,
            rejected: self.slot_rejected,
            cancelled_reservations: Vec::new(),
            link_utilization: Vec::new(),
        };
        self.slot_accepted = 0;
        self.slot_rejected = 0;
        report
    }

    pub fn check_invariants(&self) -> Result<(), String> {
        self.link.check_conservation()?;
        let ledger = self.link.ledger();
        for id in &self.live {
            let rec = &self.records[id];
            let profile = ledger.get(id).cloned().unwrap_or_default();
            if let Some((t, _)) = profile.iter().find(|(t, _)| *t > rec.request.deadline) {
                return Err(format!("request {id} booked at {t} past its deadline"));
            }
            let accounted = rec.sent + profile.total();
            if (accounted - rec.request.volume).abs() > 1e-7 {
                return Err(format!(
                    "request {id}: sent {} + booked {} != volume {}",
                    rec.sent,
                    profile.total(),
                    rec.request.volume
                ));
            }
        }
        Ok(())
    }
}

impl Scheduler for BaselineScheduler {
    fn t_now(&self) -> Slot {
        BaselineScheduler::t_now(self)
    }

    fn submit(&mut self, request: Request) -> Result<Decision, SubmitError> {
        BaselineScheduler::submit(self, request)
    }

    fn fill_current_slot(&mut self) {}

    fn advance(&mut self) -> SlotReport {
        BaselineScheduler::advance(self)
    }

    fn counters(&self) -> Counters {
        self.counters
    }

    fn capacity(&self) -> f64 {
        self.link.capacity()
    }
}
