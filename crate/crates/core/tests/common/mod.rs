#![allow(dead_code)]

pub mod oracle;
pub mod simplex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rcd_core::kernel::FlowProblem;
use rcd_core::{BaselineScheduler, LinkScheduler, Request, Slot, Topology};

use oracle::Job;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Scale-aware comparison for objective values.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// A single-link kernel instance: volume, window and per-slot residuals,
/// some of them zero. About a fifth of the instances do not fit.
pub fn kernel_instance(rng: &mut impl Rng) -> (f64, Slot, Slot, Vec<f64>) {
    let t_now = rng.random_range(0..5u64);
    let window = rng.random_range(1..=12u64);
    let residual: Vec<f64> = (0..window)
        .map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random_range(0.0..1.0) })
        .collect();
    let room: f64 = residual.iter().sum();
    let volume = rng.random_range(0.01..=(room * 1.25).max(0.02));
    (volume, t_now, t_now + window, residual)
}

/// Requests arriving over `slots` slots with deadlines inside `horizon` of
/// their arrival. Sorted by arrival; ids in order.
pub fn request_sequence(rng: &mut impl Rng, count: usize, slots: u64, horizon: u64) -> Vec<Request> {
    let mut arrivals: Vec<u64> = (0..count).map(|_| rng.random_range(0..slots)).collect();
    arrivals.sort_unstable();
    arrivals
        .into_iter()
        .enumerate()
        .map(|(i, a)| {
            let d = rng.random_range(1..=horizon);
            let q = rng.random_range(0.05..2.0);
            Request::elastic(i as u64, q, a, a + d)
        })
        .collect()
}

/// Future outstanding mass of every live request of an RCD scheduler, as
/// oracle jobs over `(t_now, deadline]`.
pub fn future_jobs(s: &LinkScheduler) -> Vec<Job> {
    let now = s.t_now();
    s.live()
        .map(|r| Job {
            volume: s.link().profile_of(r.id, r.deadline, now + 1).total(),
            deadline: r.deadline,
        })
        .filter(|j| j.volume > 1e-12)
        .collect()
}

/// As [`future_jobs`] for the baseline scheduler.
pub fn baseline_future_jobs(s: &BaselineScheduler) -> Vec<Job> {
    let now = s.t_now();
    s.live()
        .map(|r| Job {
            volume: s.link().profile_of(r.id, r.deadline, now + 1).total(),
            deadline: r.deadline,
        })
        .filter(|j| j.volume > 1e-12)
        .collect()
}

/// A small random directed topology: 2 to 4 nodes, 1 to 6 distinct links.
pub fn small_topology(rng: &mut impl Rng) -> Topology {
    let names = ["A", "B", "C", "D"];
    let n = rng.random_range(2..=4usize);
    let mut pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (0..n).map(move |b| (a, b)))
        .filter(|(a, b)| a != b)
        .collect();
    let m = rng.random_range(1..=pairs.len().min(6));
    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        let (a, b) = pairs.swap_remove(rng.random_range(0..pairs.len()));
        edges.push((names[a], names[b], rng.random_range(0.5..2.0)));
    }
    Topology::from_edges(edges).expect("valid topology")
}

/// A flow problem on a random topology with random residuals over at most
/// four slots; endpoints are random distinct nodes.
pub fn flow_instance(rng: &mut impl Rng) -> FlowProblem {
    let topo = small_topology(rng);
    let n = topo.nodes().len();
    let source = rng.random_range(0..n);
    let sink = (source + rng.random_range(1..n)) % n;
    let window = rng.random_range(1..=4u64);
    let t_now = rng.random_range(0..3u64);
    let residual = topo
        .links()
        .iter()
        .map(|l| {
            (0..window)
                .map(|_| if rng.random_bool(0.15) { 0.0 } else { rng.random_range(0.0..l.capacity) })
                .collect()
        })
        .collect();
    FlowProblem {
        node_count: n,
        links: topo.endpoints().to_vec(),
        residual,
        source,
        sink,
        volume: rng.random_range(0.05..3.0),
        t_now,
        deadline: t_now + window,
        admissible: None,
    }
}

/// Checks per-slot conservation at intermediate nodes, capacity bounds and
/// the delivered total of a network profile.
pub fn check_flow_constraints(p: &FlowProblem, profile: &rcd_core::kernel::NetProfile) -> Result<(), String> {
    let tol = 1e-9;
    let mut delivered = 0.0;
    for i in 0..p.window() as usize {
        let t = p.t_now + 1 + i as u64;
        let mut balance = vec![0.0; p.node_count];
        for (l, &(a, b)) in p.links.iter().enumerate() {
            let x = profile.get((t, l));
            if x < -tol || x > p.residual[l][i] + tol {
                return Err(format!("link {l} slot {t}: {x} outside [0, {}]", p.residual[l][i]));
            }
            balance[a] -= x;
            balance[b] += x;
        }
        for (v, net) in balance.iter().enumerate() {
            if v != p.source && v != p.sink && net.abs() > tol {
                return Err(format!("node {v} slot {t} unbalanced by {net}"));
            }
        }
        delivered += balance[p.sink];
    }
    if profile.iter().any(|((t, _), _)| t <= p.t_now || t > p.deadline) {
        return Err("flow outside the window".into());
    }
    if (delivered - p.volume).abs() > 1e-7 {
        return Err(format!("delivered {delivered} != volume {}", p.volume));
    }
    Ok(())
}
