//! Close-to-deadline scheduling over a topology.
//!
//! Each arrival is routed with one min-cost flow on the residual network of
//! its window, which books traffic as late as possible on whole paths.
//! Existing bookings are never touched at admission time. Filling spare
//! capacity in the current slot is a heuristic here: a request booked early
//! on one link may not be early on the next link of its path, and without
//! knowing future arrivals no choice of what to pull is optimal in general.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, RejectReason, SubmitError};
use crate::kernel::{admissible_links, decompose_paths, reachable, solve_flow, FlowProblem, NetProfile};
use crate::link_state::LinkState;
use crate::model::{Request, RequestId, Slot, DUST, EPS};
use crate::report::{Counters, Decision, RequestStatus, SlotReport};
use crate::topology::{LinkId, Topology};

#[derive(Clone, Debug, Serialize, Deserialize)]
struct NetRecord {
    request: Request,
    src: usize,
    dst: usize,
    profile: NetProfile,
    delivered: f64,
    status: RequestStatus,
}

/// `amount` of `request` moved from slot `from` into the current slot along `path`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetMove {
    pub request: RequestId,
    pub from: Slot,
    pub path: Vec<LinkId>,
    pub amount: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NetScheduler {
    topology: Topology,
    links: Vec<LinkState>,
    /// Restrict routing to the links of the k shortest paths; 0 disables.
    k_paths: usize,
    records: BTreeMap<RequestId, NetRecord>,
    live: BTreeSet<RequestId>,
    counters: Counters,
    slot_accepted: u64,
    slot_rejected: u64,
}

impl NetScheduler {
    pub fn new(topology: Topology, horizon: u64, k_paths: usize) -> Result<Self, ModelError> {
        let links = topology
            .links()
            .iter()
            .map(|l| LinkState::new(l.capacity, horizon))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            topology,
            links,
            k_paths,
            records: BTreeMap::new(),
            live: BTreeSet::new(),
            counters: Counters::default(),
            slot_accepted: 0,
            slot_rejected: 0,
        })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn link(&self, l: LinkId) -> &LinkState {
        &self.links[l]
    }

    pub fn t_now(&self) -> Slot {
        self.links[0].base()
    }

    pub fn end(&self) -> Slot {
        self.links[0].end()
    }

    pub fn counters(&self) -> Counters {
        self.counters
    }

    pub fn status(&self, id: RequestId) -> Option<RequestStatus> {
        self.records.get(&id).map(|r| r.status)
    }

    pub fn delivered(&self, id: RequestId) -> f64 {
        self.records.get(&id).map_or(0.0, |r| r.delivered)
    }

    pub fn profile(&self, id: RequestId) -> NetProfile {
        match self.records.get(&id) {
            Some(r) if r.status == RequestStatus::Active => r.profile.clone(),
            _ => NetProfile::new(),
        }
    }

    pub fn live(&self) -> impl Iterator<Item = &Request> + '_ {
        self.live.iter().map(|id| &self.records[id].request)
    }

    /// Size of the routing LP for a request due at `deadline`.
    pub fn variable_count(&self, deadline: Slot) -> u64 {
        self.topology.link_count() as u64 * deadline.saturating_sub(self.t_now())
    }

    fn endpoints(&self, request: &Request) -> Result<(usize, usize), SubmitError> {
        let (Some(s), Some(d)) = (&request.source, &request.destination) else {
            return Err(SubmitError::MissingEndpoints(request.id));
        };
        let lookup = |n: &String| {
            self.topology.node(n).ok_or_else(|| SubmitError::UnknownNode {
                id: request.id,
                node: n.clone(),
            })
        };
        Ok((lookup(s)?, lookup(d)?))
    }

    /// The routing problem `request` would be solved with right now, or the
    /// reason it cannot be posed.
    pub fn flow_problem(&self, request: &Request) -> Result<Result<FlowProblem, RejectReason>, SubmitError> {
        request.validate()?;
        let (src, dst) = self.endpoints(request)?;
        let now = self.t_now();
        if request.deadline <= now {
            return Ok(Err(RejectReason::PastDeadline {
                deadline: request.deadline,
                now,
            }));
        }
        if request.deadline > self.end() {
            return Ok(Err(RejectReason::Horizon {
                deadline: request.deadline,
                limit: self.end(),
            }));
        }
        let n = self.topology.nodes().len();
        let ends = self.topology.endpoints();
        let admissible = if self.k_paths > 0 {
            let set = admissible_links(n, ends, src, dst, self.k_paths);
            if set.is_empty() {
                return Ok(Err(RejectReason::NoPath));
            }
            Some(set)
        } else {
            if !reachable(n, ends, src, dst) {
                return Ok(Err(RejectReason::NoPath));
            }
            None
        };
        let residual = self
            .links
            .iter()
            .map(|l| l.window(now, request.deadline).expect("window within horizon"))
            .collect();
        Ok(Ok(FlowProblem {
            node_count: n,
            links: ends.to_vec(),
            residual,
            source: src,
            sink: dst,
            volume: request.volume,
            t_now: now,
            deadline: request.deadline,
            admissible,
        }))
    }

    pub fn submit(&mut self, request: Request) -> Result<Decision<(Slot, LinkId)>, SubmitError> {
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
        let (src, dst) = self.endpoints(&request)?;
        let decision = match self.flow_problem(&request)? {
            Err(reason) => Decision::Rejected(reason),
            Ok(problem) => match solve_flow(&problem) {
                Ok(solution) => {
                    for ((t, l), a) in solution.profile.iter() {
                        self.links[l].allocate(request.id, request.deadline, t, a);
                    }
                    Decision::Accepted(solution.profile)
                }
                Err(e) => Decision::Rejected(RejectReason::InsufficientCapacity {
                    shortfall: e.shortfall,
                }),
            },
        };
        let (status, profile) = match &decision {
            Decision::Accepted(p) => {
                self.counters.accepted += 1;
                self.slot_accepted += 1;
                self.live.insert(request.id);
                (RequestStatus::Active, p.clone())
            }
            Decision::Rejected(_) => {
                self.counters.rejected += 1;
                self.slot_rejected += 1;
                (RequestStatus::Rejected, NetProfile::new())
            }
        };
        self.records.insert(
            request.id,
            NetRecord {
                request,
                src,
                dst,
                profile,
                delivered: 0.0,
                status,
            },
        );
        Ok(decision)
    }

    /// Pull future traffic into spare current-slot capacity.
    ///
    /// Each request's future bookings are split per slot into paths. Candidate
    /// moves are tried in order of (slot, deadline, id, path); the first whose
    /// whole path has spare capacity now is moved, as much as fits, and the
    /// scan restarts. Stops when no candidate fits. On a single link this is
    /// exactly the single-link pull-forward order.
    pub fn pull_forward(&mut self) -> Vec<NetMove> {
        let now = self.t_now();
        let mut moves = Vec::new();
        loop {
            if self.links.iter().all(|l| l.residual(now) <= DUST) {
                break;
            }
            let Some(mv) = self.next_pull(now) else {
                break;
            };
            let rec = self.records.get_mut(&mv.request).expect("record");
            let deadline = rec.request.deadline;
            for &l in &mv.path {
                self.links[l].deallocate(mv.request, deadline, mv.from, mv.amount);
                self.links[l].allocate(mv.request, deadline, now, mv.amount);
                rec.profile.take((mv.from, l), mv.amount);
                rec.profile.add((now, l), mv.amount);
            }
            moves.push(mv);
        }
        moves
    }

    fn next_pull(&self, now: Slot) -> Option<NetMove> {
        // (slot, deadline, id, path index), path, amount
        type Candidate = ((Slot, Slot, RequestId, usize), Vec<LinkId>, f64);
        let n = self.topology.nodes().len();
        let ends = self.topology.endpoints();
        let mut candidates: Vec<Candidate> = Vec::new();
        for id in &self.live {
            let rec = &self.records[id];
            let mut by_slot: BTreeMap<Slot, Vec<(LinkId, f64)>> = BTreeMap::new();
            for ((t, l), a) in rec.profile.iter() {
                if t > now {
                    by_slot.entry(t).or_default().push((l, a));
                }
            }
            for (t, flows) in by_slot {
                for (i, (path, amount)) in decompose_paths(n, ends, flows, rec.src, rec.dst)
                    .into_iter()
                    .enumerate()
                {
                    candidates.push(((t, rec.request.deadline, *id, i), path, amount));
                }
            }
        }
        candidates.sort_by_key(|c| c.0);
        candidates.into_iter().find_map(|((from, _, request, _), path, amount)| {
            let spare = path
                .iter()
                .map(|&l| self.links[l].residual(now))
                .fold(f64::INFINITY, f64::min);
            (spare > DUST).then(|| NetMove {
                request,
                from,
                path,
                amount: amount.min(spare),
            })
        })
    }

    /// Transmit the current slot on every link and move the clock.
    pub fn advance(&mut self) -> SlotReport {
        let now = self.t_now();
        let ends = self.topology.endpoints().to_vec();
        let mut link_utilization = Vec::with_capacity(self.links.len());
        let mut delivered = 0.0;
        for (l, link) in self.links.iter_mut().enumerate() {
            let cap = link.capacity();
            let mut used = 0.0;
            for a in link.rotate() {
                used += a.amount;
                let rec = self.records.get_mut(&a.request).expect("booked request has a record");
                rec.profile.remove((now, l));
                if ends[l].1 == rec.dst {
                    rec.delivered += a.amount;
                    delivered += a.amount;
                }
            }
            link_utilization.push(used / cap);
        }
        self.counters.sent += delivered;

        let live: Vec<RequestId> = self.live.iter().copied().collect();
        for id in live {
            let rec = self.records.get_mut(&id).expect("record");
            if rec.request.volume - rec.delivered <= EPS {
                rec.status = RequestStatus::Completed { at: now };
                self.live.remove(&id);
                self.counters.completed += 1;
            } else if rec.request.deadline <= now {
                rec.status = RequestStatus::Cancelled { at: now };
                self.live.remove(&id);
                self.counters.missed += 1;
            }
        }

        let utilization = link_utilization.iter().sum::<f64>() / link_utilization.len() as f64;
        let report = SlotReport {
            slot: now,
            sent: delivered,
            utilization,
            accepted: self.slot_accepted,
            rejected: self.slot_rejected,
            cancelled_reservations: Vec::new(),
            link_utilization,
        };
        self.slot_accepted = 0;
        self.slot_rejected = 0;
        report
    }

    /// Checks per-link conservation, that each live request's bookings match
    /// the link ledgers, per-slot flow conservation at intermediate nodes, and
    /// that source out-flow plus delivered volume equals the request volume.
    pub fn check_invariants(&self) -> Result<(), String> {
        for (l, link) in self.links.iter().enumerate() {
            link.check_conservation().map_err(|e| format!("link {l}: {e}"))?;
        }
        let ends = self.topology.endpoints();
        let n = self.topology.nodes().len();
        for id in &self.live {
            let rec = &self.records[id];
            let mut balance: BTreeMap<Slot, Vec<f64>> = BTreeMap::new();
            let mut out_of_source = 0.0;
            for ((t, l), a) in rec.profile.iter() {
                if t > rec.request.deadline {
                    return Err(format!("request {id} booked at {t} past its deadline"));
                }
                let booked = self.links[l]
                    .entries(t)
                    .iter()
                    .find(|x| x.request == *id)
                    .map_or(0.0, |x| x.amount);
                if (booked - a).abs() > EPS {
                    return Err(format!("request {id} ledger mismatch at ({t}, {l})"));
                }
                let (u, v) = ends[l];
                let b = balance.entry(t).or_insert_with(|| vec![0.0; n]);
                b[u] -= a;
                b[v] += a;
                if u == rec.src {
                    out_of_source += a;
                }
            }
            for (t, b) in &balance {
                for (node, net) in b.iter().enumerate() {
                    if node != rec.src && node != rec.dst && net.abs() > EPS {
                        return Err(format!("request {id}: node {node} unbalanced by {net} at slot {t}"));
                    }
                }
            }
            if (out_of_source + rec.delivered - rec.request.volume).abs() > 1e-7 {
                return Err(format!(
                    "request {id}: booked {out_of_source} + delivered {} != volume {}",
                    rec.delivered, rec.request.volume
                ));
            }
        }
        Ok(())
    }
}
