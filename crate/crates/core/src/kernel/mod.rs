//! Exact solvers for the per-request allocation problems.

mod flow;
mod latest_first;
mod paths;

use thiserror::Error;

pub use flow::{flow_cost, solve_flow, FlowProblem, FlowSolution, NetProfile};
pub use latest_first::{solve_earliest_first, solve_latest_first, LatestFirstProblem};
pub use paths::{admissible_links, decompose_paths, k_shortest_paths, reachable};

/// The demand does not fit; `shortfall` is the volume that could not be placed.
#[derive(Clone, Copy, Debug, Error, PartialEq)]
#[error("infeasible: {shortfall} units could not be placed")]
pub struct Infeasible {
    pub shortfall: f64,
}
