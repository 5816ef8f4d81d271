//! Synthetic request streams: Poisson arrivals per slot, exponential deadline
//! offsets and exponential volumes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};

use crate::model::{Request, DEFAULT_SLOT_SECS};
use crate::topology::Topology;
use crate::kernel::reachable;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerKind {
    #[default]
    Rcd,
    Baseline,
}

impl SchedulerKind {
    pub fn name(self) -> &'static str {
        match self {
            SchedulerKind::Rcd => "rcd",
            SchedulerKind::Baseline => "baseline",
        }
    }
}

impl std::fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SchedulerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rcd" => Ok(SchedulerKind::Rcd),
            "baseline" => Ok(SchedulerKind::Baseline),
            other => Err(format!("unknown scheduler {other:?} (expected rcd or baseline)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    /// Mean arrivals per slot.
    pub lambda: f64,
    pub mean_deadline_offset: f64,
    pub mean_demand: f64,
    pub slots: u64,
    pub replications: u32,
    pub seed: u64,
    pub scheduler: SchedulerKind,
    /// Link capacity per slot before the high-priority share is removed.
    pub capacity: f64,
    /// Fraction of capacity reserved for high-priority traffic.
    pub highpri_fraction: f64,
    /// Future slots tracked by the scheduler. Defaults to the largest
    /// deadline offset in the generated stream.
    pub horizon: Option<u64>,
    /// Path pruning for network runs; 0 routes over every link.
    pub k_paths: usize,
    pub slot_secs: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            mean_deadline_offset: 12.0,
            mean_demand: 0.286,
            slots: 576,
            replications: 3,
            seed: 1,
            scheduler: SchedulerKind::Rcd,
            capacity: 1.0,
            highpri_fraction: 0.0,
            horizon: None,
            k_paths: 0,
            slot_secs: DEFAULT_SLOT_SECS,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), String> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(format!("{name} must be positive, got {v}"))
            }
        };
        positive("lambda", self.lambda)?;
        positive("mean_deadline_offset", self.mean_deadline_offset)?;
        positive("mean_demand", self.mean_demand)?;
        positive("capacity", self.capacity)?;
        if self.slots == 0 {
            return Err("slots must be at least 1".into());
        }
        if self.replications == 0 {
            return Err("replications must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.highpri_fraction) {
            return Err(format!("highpri_fraction must be in [0, 1), got {}", self.highpri_fraction));
        }
        if self.horizon == Some(0) {
            return Err("horizon must be at least 1".into());
        }
        Ok(())
    }

    /// Capacity left for deadline traffic.
    pub fn effective_capacity(&self) -> f64 {
        self.capacity * (1.0 - self.highpri_fraction)
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// The request stream of one replication, ordered by arrival then id. Ids
/// count from 0 in arrival order. The stream depends only on the seed, the
/// replication index and the distribution parameters.
pub fn generate_workload(config: &SimulationConfig, replication: u32) -> Vec<Request> {
    let mut rng = config.rng(u64::from(replication));
    let arrivals = Poisson::new(config.lambda).expect("lambda validated");
    let offsets = Exp::new(1.0 / config.mean_deadline_offset).expect("offset validated");
    let volumes = Exp::new(1.0 / config.mean_demand).expect("demand validated");
    let mut out = Vec::new();
    for t in 0..config.slots {
        let n = arrivals.sample(&mut rng) as u64;
        for _ in 0..n {
            let d = (offsets.sample(&mut rng).round() as u64).max(1);
            let mut q: f64 = volumes.sample(&mut rng);
            // Exp can return exactly zero.
            if q <= 0.0 {
                q = f64::MIN_POSITIVE;
            }
            out.push(Request::elastic(out.len() as u64, q, t, t + d));
        }
    }
    out
}

/// [`generate_workload`] with endpoints drawn uniformly from the ordered node
/// pairs that have a path. Endpoints come from a separate random stream so the
/// timing and volumes match the single-link stream of the same replication.
pub fn generate_network_workload(
    config: &SimulationConfig,
    topology: &Topology,
    replication: u32,
) -> Vec<Request> {
    let n = topology.nodes().len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|s| (0..n).map(move |d| (s, d)))
        .filter(|&(s, d)| s != d && reachable(n, topology.endpoints(), s, d))
        .collect();
    let mut rng = config.rng(u64::from(replication) | 1 << 63);
    generate_workload(config, replication)
        .into_iter()
        .map(|r| {
            if pairs.is_empty() {
                return r;
            }
            let (s, d) = pairs[rng.random_range(0..pairs.len())];
            r.between(&topology.nodes()[s], &topology.nodes()[d])
        })
        .collect()
}

/// Largest deadline offset in a stream.
pub fn max_offset(requests: &[Request]) -> u64 {
    requests
        .iter()
        .map(|r| r.deadline - r.arrival)
        .max()
        .unwrap_or(1)
}
