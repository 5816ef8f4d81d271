//! Single-link allocation: the latest-possible fill that minimises
//! `sum E(t) * (td - t)`, and its earliest-first mirror.

use crate::model::{AllocationProfile, Slot, DUST, EPS};

use super::Infeasible;

/// Allocate `volume` over slots `(t_now, deadline]` given per-slot residuals.
#[derive(Clone, Debug, PartialEq)]
pub struct LatestFirstProblem {
    pub volume: f64,
    pub t_now: Slot,
    pub deadline: Slot,
    /// `residual[i]` is the free capacity of slot `t_now + 1 + i`.
    pub residual: Vec<f64>,
}

impl LatestFirstProblem {
    pub fn new(volume: f64, t_now: Slot, deadline: Slot, residual: Vec<f64>) -> Self {
        assert!(deadline > t_now, "empty window ({t_now}, {deadline}]");
        assert_eq!(residual.len() as u64, deadline - t_now, "residual length mismatch");
        Self {
            volume,
            t_now,
            deadline,
            residual,
        }
    }

    fn slot(&self, i: usize) -> Slot {
        self.t_now + 1 + i as u64
    }
}

/// Fills the deadline slot to its residual, then the one before, and so on
/// until the volume is placed. This is the exact minimiser of the deadline
/// cost since every slot's unit cost strictly decreases toward the deadline.
pub fn solve_latest_first(p: &LatestFirstProblem) -> Result<AllocationProfile, Infeasible> {
    fill(p, (0..p.residual.len()).rev())
}

/// Mirror image of [`solve_latest_first`]: earliest slots first.
pub fn solve_earliest_first(p: &LatestFirstProblem) -> Result<AllocationProfile, Infeasible> {
    fill(p, 0..p.residual.len())
}

fn fill(p: &LatestFirstProblem, order: impl Iterator<Item = usize>) -> Result<AllocationProfile, Infeasible> {
    let mut remaining = p.volume;
    let mut profile = AllocationProfile::new();
    for i in order {
        if remaining <= DUST {
            break;
        }
        let r = p.residual[i];
        if r <= DUST {
            continue;
        }
        let take = r.min(remaining);
        profile.add(p.slot(i), take);
        remaining -= take;
    }
    if remaining > EPS {
        return Err(Infeasible {
            shortfall: remaining,
        });
    }
    Ok(profile)
}
