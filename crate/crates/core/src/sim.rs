//! Slot-by-slot simulation loop and result tables.
//!
//! Each slot: submit that slot's arrivals in id order, let the scheduler fill
//! the current slot, then transmit and advance. Only the submit calls are
//! timed.

use std::io::Write;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline::BaselineScheduler;
use crate::error::{ModelError, SubmitError};
use crate::link::LinkScheduler;
use crate::model::Request;
use crate::net::NetScheduler;
use crate::report::Scheduler;
use crate::topology::Topology;
use crate::workload::{generate_network_workload, generate_workload, max_offset, SchedulerKind, SimulationConfig};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("horizon of {horizon} slots is shorter than a generated deadline offset of {needed} slots")]
    Horizon { needed: u64, horizon: u64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Submit(#[from] SubmitError),
    #[error("network runs support only the rcd scheduler")]
    NetworkBaseline,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicationMetrics {
    pub replication: u32,
    pub requests: u64,
    pub accepted: u64,
    pub rejected: u64,
    pub failure_rate: f64,
    pub utilization: f64,
    /// Volume transmitted within the simulated slots.
    pub sent: f64,
    /// Wall-clock seconds per submit call.
    pub mean_alloc_time: f64,
    /// Mean utilisation of each link; empty for single-link runs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub link_utilization: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub lambda: f64,
    pub scheduler: SchedulerKind,
    pub failure_rate: f64,
    pub utilization: f64,
    pub mean_allocation_time: f64,
    pub replications: Vec<ReplicationMetrics>,
}

impl MetricsReport {
    fn from_replications(config: &SimulationConfig, replications: Vec<ReplicationMetrics>) -> Self {
        let n = replications.len() as f64;
        let mean = |f: fn(&ReplicationMetrics) -> f64| replications.iter().map(f).sum::<f64>() / n;
        Self {
            lambda: config.lambda,
            scheduler: config.scheduler,
            failure_rate: mean(|r| r.failure_rate),
            utilization: mean(|r| r.utilization),
            mean_allocation_time: mean(|r| r.mean_alloc_time),
            replications,
        }
    }

    /// Mean per-link utilisation across replications.
    pub fn link_utilization(&self) -> Vec<f64> {
        let Some(first) = self.replications.first() else {
            return Vec::new();
        };
        let n = self.replications.len() as f64;
        (0..first.link_utilization.len())
            .map(|l| self.replications.iter().map(|r| r.link_utilization[l]).sum::<f64>() / n)
            .collect()
    }
}

fn horizon_for(config: &SimulationConfig, stream: &[Request]) -> Result<u64, SimError> {
    let needed = max_offset(stream);
    match config.horizon {
        None => Ok(needed),
        Some(h) if h < needed => Err(SimError::Horizon { needed, horizon: h }),
        Some(h) => Ok(h),
    }
}

struct Tally {
    requests: u64,
    accepted: u64,
    elapsed: Duration,
}

impl Tally {
    fn metrics(
        self,
        replication: u32,
        sent: f64,
        capacity: f64,
        slots: u64,
        link_utilization: Vec<f64>,
    ) -> ReplicationMetrics {
        let rejected = self.requests - self.accepted;
        let per_request = |x: f64| if self.requests == 0 { 0.0 } else { x / self.requests as f64 };
        ReplicationMetrics {
            replication,
            requests: self.requests,
            accepted: self.accepted,
            rejected,
            failure_rate: per_request(rejected as f64),
            utilization: sent / (capacity * slots as f64),
            sent,
            mean_alloc_time: per_request(self.elapsed.as_secs_f64()),
            link_utilization,
        }
    }
}

fn drive<S: Scheduler>(s: &mut S, stream: Vec<Request>, slots: u64) -> Result<(Tally, f64), SimError> {
    let mut tally = Tally {
        requests: 0,
        accepted: 0,
        elapsed: Duration::ZERO,
    };
    let mut sent = 0.0;
    let mut arrivals = stream.into_iter().peekable();
    for t in 0..slots {
        while let Some(r) = arrivals.next_if(|r| r.arrival == t) {
            let start = Instant::now();
            let decision = s.submit(r)?;
            tally.elapsed += start.elapsed();
            tally.requests += 1;
            tally.accepted += u64::from(decision.is_accepted());
        }
        s.fill_current_slot();
        sent += s.advance().sent;
    }
    Ok((tally, sent))
}

/// One replication on a single link.
pub fn run_replication(config: &SimulationConfig, replication: u32) -> Result<ReplicationMetrics, SimError> {
    config.validate().map_err(SimError::Config)?;
    run_stream(config, generate_workload(config, replication), replication)
}

/// Drives a given request stream, sorted by arrival, through a single-link
/// scheduler. Arrivals at or after `config.slots` are ignored.
pub fn run_stream(
    config: &SimulationConfig,
    stream: Vec<Request>,
    replication: u32,
) -> Result<ReplicationMetrics, SimError> {
    config.validate().map_err(SimError::Config)?;
    let horizon = horizon_for(config, &stream)?;
    let cap = config.effective_capacity();
    let (tally, sent) = match config.scheduler {
        SchedulerKind::Rcd => drive(&mut LinkScheduler::new(cap, horizon)?, stream, config.slots)?,
        SchedulerKind::Baseline => drive(&mut BaselineScheduler::new(cap, horizon)?, stream, config.slots)?,
    };
    Ok(tally.metrics(replication, sent, cap, config.slots, Vec::new()))
}

/// All replications of `config`, averaged.
pub fn run_simulation(config: &SimulationConfig) -> Result<MetricsReport, SimError> {
    let reps = (0..config.replications)
        .map(|r| run_replication(config, r))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MetricsReport::from_replications(config, reps))
}

/// One replication over a topology. Utilisation is the mean over links and
/// slots; `sent` counts volume delivered to destinations.
pub fn run_network_replication(
    config: &SimulationConfig,
    topology: &Topology,
    replication: u32,
) -> Result<ReplicationMetrics, SimError> {
    config.validate().map_err(SimError::Config)?;
    if config.scheduler != SchedulerKind::Rcd {
        return Err(SimError::NetworkBaseline);
    }
    let stream = generate_network_workload(config, topology, replication);
    let horizon = horizon_for(config, &stream)?;
    let topo = topology.scaled(1.0 - config.highpri_fraction)?;
    let mut s = NetScheduler::new(topo, horizon, config.k_paths)?;
    let mut tally = Tally {
        requests: 0,
        accepted: 0,
        elapsed: Duration::ZERO,
    };
    let mut sent = 0.0;
    let mut link_busy = vec![0.0; topology.link_count()];
    let mut arrivals = stream.into_iter().peekable();
    for t in 0..config.slots {
        while let Some(r) = arrivals.next_if(|r| r.arrival == t) {
            let start = Instant::now();
            let decision = s.submit(r)?;
            tally.elapsed += start.elapsed();
            tally.requests += 1;
            tally.accepted += u64::from(decision.is_accepted());
        }
        s.pull_forward();
        let report = s.advance();
        sent += report.sent;
        for (b, u) in link_busy.iter_mut().zip(&report.link_utilization) {
            *b += u;
        }
    }
    let slots = config.slots as f64;
    let links: Vec<f64> = link_busy.iter().map(|b| b / slots).collect();
    let mut m = tally.metrics(replication, sent, 1.0, config.slots, links);
    m.utilization = m.link_utilization.iter().sum::<f64>() / m.link_utilization.len() as f64;
    Ok(m)
}

pub fn run_network_simulation(config: &SimulationConfig, topology: &Topology) -> Result<MetricsReport, SimError> {
    let reps = (0..config.replications)
        .map(|r| run_network_replication(config, topology, r))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MetricsReport::from_replications(config, reps))
}

/// Both schedulers at one arrival rate, on identical streams.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub lambda: f64,
    pub rcd: MetricsReport,
    pub baseline: MetricsReport,
}

impl ComparisonRow {
    /// Baseline time per admission over RCD time per admission.
    pub fn speed_ratio(&self) -> f64 {
        self.baseline.mean_allocation_time / self.rcd.mean_allocation_time
    }
}

pub fn compare_schedulers(config: &SimulationConfig, lambdas: &[f64]) -> Result<Vec<ComparisonRow>, SimError> {
    lambdas
        .iter()
        .map(|&lambda| {
            let run = |scheduler| {
                run_simulation(&SimulationConfig {
                    lambda,
                    scheduler,
                    ..config.clone()
                })
            };
            Ok(ComparisonRow {
                lambda,
                rcd: run(SchedulerKind::Rcd)?,
                baseline: run(SchedulerKind::Baseline)?,
            })
        })
        .collect()
}

#[derive(Serialize)]
struct LongRow<'a> {
    lambda: f64,
    scheduler: &'a str,
    replication: u32,
    failure_rate: String,
    utilization: String,
    mean_alloc_time_us: String,
}

/// One row per (report, replication). Set `with_timing` to false to blank
/// the timing column for byte-stable comparisons.
pub fn write_long_csv<W: Write>(reports: &[&MetricsReport], out: W, with_timing: bool) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        for rep in &r.replications {
            w.serialize(LongRow {
                lambda: r.lambda,
                scheduler: r.scheduler.name(),
                replication: rep.replication,
                failure_rate: format!("{:.6}", rep.failure_rate),
                utilization: format!("{:.6}", rep.utilization),
                mean_alloc_time_us: if with_timing {
                    format!("{:.3}", rep.mean_alloc_time * 1e6)
                } else {
                    String::new()
                },
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct LinkRow<'a> {
    lambda: f64,
    replication: u32,
    link: &'a str,
    utilization: String,
}

pub fn write_link_csv<W: Write>(report: &MetricsReport, topology: &Topology, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for rep in &report.replications {
        for (spec, u) in topology.links().iter().zip(&rep.link_utilization) {
            w.serialize(LinkRow {
                lambda: report.lambda,
                replication: rep.replication,
                link: &spec.id,
                utilization: format!("{u:.6}"),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Side-by-side table of both schedulers per arrival rate, with the speed
/// ratio and its maximum.
pub fn write_summary<W: Write>(rows: &[ComparisonRow], mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "{:>6}  {:>9} {:>9}  {:>9} {:>9}  {:>11} {:>11}  {:>7}",
        "lambda", "fail_rcd", "fail_base", "util_rcd", "util_base", "t_rcd_us", "t_base_us", "speedup"
    )?;
    for r in rows {
        writeln!(
            out,
            "{:>6}  {:>9.4} {:>9.4}  {:>9.4} {:>9.4}  {:>11.3} {:>11.3}  {:>7.2}",
            r.lambda,
            r.rcd.failure_rate,
            r.baseline.failure_rate,
            r.rcd.utilization,
            r.baseline.utilization,
            r.rcd.mean_allocation_time * 1e6,
            r.baseline.mean_allocation_time * 1e6,
            r.speed_ratio()
        )?;
    }
    let max = rows.iter().map(ComparisonRow::speed_ratio).fold(f64::NAN, f64::max);
    writeln!(out, "max speedup: {max:.2}")
}
