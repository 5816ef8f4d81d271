//! Reference formulations solved with the dense simplex.

use rcd_core::kernel::FlowProblem;
use rcd_core::Slot;

use super::simplex::{Cmp, Lp, Outcome};

/// Minimum of `sum x_t (td - t)` with `sum x_t = volume`, `0 <= x_t <= r_t`
/// over slots `t_now + 1 ..= deadline`. Returns the optimal profile and value.
pub fn latest_first_lp(volume: f64, t_now: Slot, deadline: Slot, residual: &[f64]) -> Option<(Vec<f64>, f64)> {
    let n = residual.len();
    assert_eq!(n as u64, deadline - t_now);
    let mut lp = Lp::new(n);
    for (i, r) in residual.iter().enumerate() {
        let t = t_now + 1 + i as u64;
        lp.cost(i, (deadline - t) as f64);
        lp.row(&[(i, 1.0)], Cmp::Le, *r);
    }
    lp.row(&(0..n).map(|i| (i, 1.0)).collect::<Vec<_>>(), Cmp::Eq, volume);
    match lp.solve() {
        Outcome::Optimal { x, value } => Some((x, value)),
        _ => None,
    }
}

/// A request's outstanding future volume and deadline on one link.
#[derive(Clone, Copy, Debug)]
pub struct Job {
    pub volume: f64,
    pub deadline: Slot,
}

/// Variables `x[j][t]` for slots `t_now + 1 ..= deadline_j`, capacity rows per
/// slot and a demand row per job. Returns the LP and the index of each
/// variable as `(job, slot)`.
fn single_link_lp(jobs: &[Job], t_now: Slot, capacity: &[f64]) -> (Lp, Vec<(usize, Slot)>) {
    let mut vars = Vec::new();
    for (j, job) in jobs.iter().enumerate() {
        for t in t_now + 1..=job.deadline {
            vars.push((j, t));
        }
    }
    let mut lp = Lp::new(vars.len());
    for (i, c) in capacity.iter().enumerate() {
        let t = t_now + 1 + i as u64;
        let terms: Vec<_> = vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.1 == t)
            .map(|(k, _)| (k, 1.0))
            .collect();
        if !terms.is_empty() {
            lp.row(&terms, Cmp::Le, *c);
        }
    }
    for (j, job) in jobs.iter().enumerate() {
        let terms: Vec<_> = vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.0 == j)
            .map(|(k, _)| (k, 1.0))
            .collect();
        lp.row(&terms, Cmp::Eq, job.volume);
    }
    (lp, vars)
}

/// Whether all jobs fit on per-slot capacities `capacity[i]` at slot
/// `t_now + 1 + i`.
pub fn single_link_feasible(jobs: &[Job], t_now: Slot, capacity: &[f64]) -> bool {
    assert!(jobs.iter().all(|j| j.deadline > t_now && j.deadline - t_now <= capacity.len() as u64));
    let (lp, _) = single_link_lp(jobs, t_now, capacity);
    matches!(lp.solve(), Outcome::Optimal { .. })
}

/// Least volume any feasible schedule of `jobs` must place in
/// `(t_now, threshold]`.
pub fn min_prefix(jobs: &[Job], t_now: Slot, capacity: &[f64], threshold: Slot) -> Option<f64> {
    let (mut lp, vars) = single_link_lp(jobs, t_now, capacity);
    for (k, &(_, t)) in vars.iter().enumerate() {
        if t <= threshold {
            lp.cost(k, 1.0);
        }
    }
    lp.solve().value()
}

/// Optimal deadline cost of the per-slot network LP: flow conservation at
/// every node other than source and sink in every slot, total net outflow of
/// the source equal to the volume, link capacities as bounds.
pub fn net_flow_lp(p: &FlowProblem) -> Option<f64> {
    let window = p.window() as usize;
    let m = p.links.len();
    let var = |i: usize, l: usize| i * m + l;
    let mut lp = Lp::new(window * m);
    for i in 0..window {
        let t = p.t_now + 1 + i as u64;
        for l in 0..m {
            lp.cost(var(i, l), (p.deadline - t) as f64);
            let allowed = p.admissible.as_ref().is_none_or(|a| a.contains(&l));
            lp.row(&[(var(i, l), 1.0)], Cmp::Le, if allowed { p.residual[l][i] } else { 0.0 });
        }
        for v in 0..p.node_count {
            if v == p.source || v == p.sink {
                continue;
            }
            let terms = balance_terms(&p.links, v, |l| var(i, l));
            if !terms.is_empty() {
                lp.row(&terms, Cmp::Eq, 0.0);
            }
        }
    }
    let mut out = Vec::new();
    for i in 0..window {
        for (t, c) in balance_terms(&p.links, p.source, |l| var(i, l)) {
            out.push((t, -c));
        }
    }
    lp.row(&out, Cmp::Eq, p.volume);
    lp.solve().value()
}

/// `+1` for links into `v`, `-1` for links out of it.
fn balance_terms(links: &[(usize, usize)], v: usize, var: impl Fn(usize) -> usize) -> Vec<(usize, f64)> {
    let mut terms = Vec::new();
    for (l, &(a, b)) in links.iter().enumerate() {
        if b == v {
            terms.push((var(l), 1.0));
        }
        if a == v {
            terms.push((var(l), -1.0));
        }
    }
    terms
}

/// One commodity of the joint network check.
#[derive(Clone, Copy, Debug)]
pub struct Commodity {
    pub source: usize,
    pub sink: usize,
    pub volume: f64,
    pub deadline: Slot,
}

/// Whether all commodities can be routed together on per-slot link
/// capacities `capacity[l][i]` at slot `t_now + 1 + i`, each with per-slot
/// conservation at its intermediate nodes.
pub fn joint_feasible(
    node_count: usize,
    links: &[(usize, usize)],
    capacity: &[Vec<f64>],
    t_now: Slot,
    commodities: &[Commodity],
) -> bool {
    let m = links.len();
    let mut vars = Vec::new();
    for (k, c) in commodities.iter().enumerate() {
        for t in t_now + 1..=c.deadline {
            for l in 0..m {
                vars.push((k, t, l));
            }
        }
    }
    let index = |k: usize, t: Slot, l: usize| vars.iter().position(|&v| v == (k, t, l));
    let mut lp = Lp::new(vars.len());
    let window = capacity.first().map_or(0, Vec::len);
    for (l, caps) in capacity.iter().enumerate().take(m) {
        for (i, &cap) in caps.iter().enumerate().take(window) {
            let t = t_now + 1 + i as u64;
            let terms: Vec<_> = (0..commodities.len())
                .filter_map(|k| index(k, t, l))
                .map(|x| (x, 1.0))
                .collect();
            if !terms.is_empty() {
                lp.row(&terms, Cmp::Le, cap);
            }
        }
    }
    for (k, c) in commodities.iter().enumerate() {
        let mut out = Vec::new();
        for t in t_now + 1..=c.deadline {
            let at = |l: usize| index(k, t, l).expect("variable exists");
            for v in 0..node_count {
                if v == c.source || v == c.sink {
                    continue;
                }
                let terms = balance_terms(links, v, at);
                if !terms.is_empty() {
                    lp.row(&terms, Cmp::Eq, 0.0);
                }
            }
            out.extend(balance_terms(links, c.source, at).into_iter().map(|(x, v)| (x, -v)));
        }
        lp.row(&out, Cmp::Eq, c.volume);
    }
    matches!(lp.solve(), Outcome::Optimal { .. })
}
