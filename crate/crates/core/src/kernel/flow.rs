//! Network allocation as a min-cost flow on a time-layered graph.
//!
//! Layer `t` holds one copy of every node and one arc per link with capacity
//! `C_{t,l}` and unit cost `td - t`. A super-source feeds the request's source
//! in every layer and the request's sink drains into a super-sink, so flow is
//! conserved per slot at intermediate nodes and never stored across slots.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use crate::model::{AllocationProfile, Slot, DUST, EPS};
use crate::topology::LinkId;

use super::Infeasible;

#[derive(Clone, Debug, PartialEq)]
pub struct FlowProblem {
    pub node_count: usize,
    /// `(src, dst)` node indices per link.
    pub links: Vec<(usize, usize)>,
    /// `residual[l][i]` is the free capacity of link `l` at slot `t_now + 1 + i`.
    pub residual: Vec<Vec<f64>>,
    pub source: usize,
    pub sink: usize,
    pub volume: f64,
    pub t_now: Slot,
    pub deadline: Slot,
    /// When set, only these links may carry flow.
    pub admissible: Option<BTreeSet<LinkId>>,
}

impl FlowProblem {
    pub fn window(&self) -> u64 {
        self.deadline - self.t_now
    }

    /// Size of the LP: one variable per link per slot in the window.
    pub fn variable_count(&self) -> u64 {
        self.links.len() as u64 * self.window()
    }

    fn admits(&self, l: LinkId) -> bool {
        self.admissible.as_ref().is_none_or(|a| a.contains(&l))
    }
}

pub type NetProfile = AllocationProfile<(Slot, LinkId)>;

#[derive(Clone, Debug, PartialEq)]
pub struct FlowSolution {
    pub profile: NetProfile,
    /// `sum over (t, l) of E(t, l) * (td - t)`.
    pub cost: f64,
}

/// Deadline cost of a network profile.
pub fn flow_cost(profile: &NetProfile, deadline: Slot) -> f64 {
    profile
        .iter()
        .map(|((t, _), e)| e * deadline.saturating_sub(t) as f64)
        .sum()
}

/// `(deadline cost, hops)`, compared lexicographically. A single scaled
/// integer would not do: with real capacities a tiny deadline-cost saving can
/// be outweighed by any finite hop weight.
type Cost = (i64, i64);

const UNREACHED: Cost = (i64::MAX, i64::MAX);

fn add(a: Cost, b: Cost) -> Cost {
    (a.0 + b.0, a.1 + b.1)
}

fn sub(a: Cost, b: Cost) -> Cost {
    (a.0 - b.0, a.1 - b.1)
}

#[derive(Clone, Debug)]
struct Arc {
    to: usize,
    cap: f64,
    cost: Cost,
}

/// Successive shortest paths with Johnson potentials. Capacities are real,
/// costs are integer pairs, so Dijkstra distances are exact.
struct MinCostFlow {
    arcs: Vec<Arc>,
    adj: Vec<Vec<usize>>,
}

impl MinCostFlow {
    fn new(n: usize) -> Self {
        Self {
            arcs: Vec::new(),
            adj: vec![Vec::new(); n],
        }
    }

    fn add_arc(&mut self, from: usize, to: usize, cap: f64, cost: Cost) -> usize {
        let e = self.arcs.len();
        self.arcs.push(Arc { to, cap, cost });
        self.arcs.push(Arc {
            to: from,
            cap: 0.0,
            cost: (-cost.0, -cost.1),
        });
        self.adj[from].push(e);
        self.adj[to].push(e + 1);
        e
    }

    /// Pushes up to `amount` from `s` to `t`; returns the amount left unrouted.
    fn run(&mut self, s: usize, t: usize, amount: f64) -> f64 {
        let n = self.adj.len();
        let mut potential = vec![(0, 0); n];
        let mut dist = vec![UNREACHED; n];
        let mut parent = vec![usize::MAX; n];
        let mut remaining = amount;
        while remaining > DUST {
            dist.fill(UNREACHED);
            parent.fill(usize::MAX);
            dist[s] = (0, 0);
            let mut heap = BinaryHeap::new();
            heap.push(Reverse(((0, 0), s)));
            while let Some(Reverse((d, u))) = heap.pop() {
                if d > dist[u] {
                    continue;
                }
                for &e in &self.adj[u] {
                    let arc = &self.arcs[e];
                    if arc.cap <= DUST {
                        continue;
                    }
                    let nd = sub(add(add(d, arc.cost), potential[u]), potential[arc.to]);
                    if nd < dist[arc.to] {
                        dist[arc.to] = nd;
                        parent[arc.to] = e;
                        heap.push(Reverse((nd, arc.to)));
                    }
                }
            }
            if dist[t] == UNREACHED {
                break;
            }
            for v in 0..n {
                if dist[v] != UNREACHED {
                    potential[v] = add(potential[v], dist[v]);
                }
            }
            let mut push = remaining;
            let mut v = t;
            while v != s {
                let e = parent[v];
                push = push.min(self.arcs[e].cap);
                v = self.arcs[e ^ 1].to;
            }
            let mut v = t;
            while v != s {
                let e = parent[v];
                self.arcs[e].cap -= push;
                self.arcs[e ^ 1].cap += push;
                v = self.arcs[e ^ 1].to;
            }
            remaining -= push;
        }
        remaining
    }
}

/// Minimum-deadline-cost routing of one request over the residual network.
///
/// Among cost-optimal flows, paths with fewer hops win; remaining ties fall to
/// exploration order (lower link index first).
pub fn solve_flow(p: &FlowProblem) -> Result<FlowSolution, Infeasible> {
    assert_ne!(p.source, p.sink, "source and sink must differ");
    assert!(p.deadline > p.t_now, "empty window");
    let n = p.node_count;
    let window = p.window() as usize;
    let super_source = n * window;
    let super_sink = super_source + 1;
    let node = |i: usize, v: usize| i * n + v;

    let mut g = MinCostFlow::new(n * window + 2);
    let mut link_arcs = Vec::new();
    for i in 0..window {
        let t = p.t_now + 1 + i as u64;
        let unit = ((p.deadline - t) as i64, 1);
        g.add_arc(super_source, node(i, p.source), f64::INFINITY, (0, 0));
        g.add_arc(node(i, p.sink), super_sink, f64::INFINITY, (0, 0));
        for (l, &(a, b)) in p.links.iter().enumerate() {
            // Flow never needs to re-enter the source or leave the sink.
            if b == p.source || a == p.sink || !p.admits(l) {
                continue;
            }
            let cap = p.residual[l][i];
            if cap <= DUST {
                continue;
            }
            let e = g.add_arc(node(i, a), node(i, b), cap, unit);
            link_arcs.push((e, t, l));
        }
    }

    let remaining = g.run(super_source, super_sink, p.volume);
    if remaining > EPS {
        return Err(Infeasible {
            shortfall: remaining,
        });
    }
    let profile: NetProfile = link_arcs
        .into_iter()
        .map(|(e, t, l)| ((t, l), g.arcs[e ^ 1].cap))
        .collect();
    let cost = flow_cost(&profile, p.deadline);
    Ok(FlowSolution { profile, cost })
}
