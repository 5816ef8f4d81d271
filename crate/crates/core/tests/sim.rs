use std::path::Path;

use rcd_core::sim::{compare_schedulers, run_network_simulation, run_replication, run_simulation, write_long_csv};
use rcd_core::workload::generate_workload;
use rcd_core::{SchedulerKind, SimError, SimulationConfig, Topology};

fn config(lambda: f64) -> SimulationConfig {
    SimulationConfig {
        lambda,
        ..SimulationConfig::default()
    }
}

#[test]
fn generated_streams_have_the_configured_moments() {
    let cfg = config(1.0);
    let reps = 20u32;
    let streams: Vec<_> = (0..reps).map(|r| generate_workload(&cfg, r)).collect();
    let n = cfg.slots as f64;
    let mean_count = streams.iter().map(|s| s.len() as f64).sum::<f64>() / f64::from(reps);
    // Poisson count per replication has sd sqrt(n).
    assert!((mean_count - n).abs() < 3.0 * n.sqrt() / f64::from(reps).sqrt(), "{mean_count}");

    let all: Vec<_> = streams.iter().flatten().collect();
    let k = all.len() as f64;
    let vol = all.iter().map(|r| r.volume).sum::<f64>() / k;
    assert!((vol - cfg.mean_demand).abs() < 4.0 * cfg.mean_demand / k.sqrt(), "{vol}");
    let off = all.iter().map(|r| (r.deadline - r.arrival) as f64).sum::<f64>() / k;
    assert!((off - cfg.mean_deadline_offset).abs() < 0.4, "{off}");
    assert!(all.iter().all(|r| r.deadline > r.arrival && r.volume > 0.0));
    assert!(streams[0].windows(2).all(|w| w[0].arrival <= w[1].arrival && w[0].id.0 + 1 == w[1].id.0));
}

#[test]
fn light_load_rejects_only_what_cannot_fit_alone() {
    let cfg = SimulationConfig {
        lambda: 0.05,
        slots: 5000,
        replications: 4,
        ..SimulationConfig::default()
    };
    for kind in [SchedulerKind::Rcd, SchedulerKind::Baseline] {
        let cfg = SimulationConfig { scheduler: kind, ..cfg.clone() };
        for rep in 0..cfg.replications {
            let m = run_replication(&cfg, rep).unwrap();
            let stream = generate_workload(&cfg, rep);
            // A long exponential tail makes some requests too big for their
            // own window even on an empty link.
            let alone = stream
                .iter()
                .filter(|r| r.volume > cfg.capacity * (r.deadline - r.arrival) as f64 + 1e-9)
                .count() as u64;
            assert_eq!(m.rejected, alone, "{kind}");
            let fits = |r: &&rcd_core::Request| r.volume <= cfg.capacity * (r.deadline - r.arrival) as f64;
            let total: f64 = stream.iter().filter(fits).map(|r| r.volume).sum();
            let tail: f64 = stream.iter().filter(|r| r.deadline >= cfg.slots).map(|r| r.volume).sum();
            assert!(m.sent <= total + 1e-9 && m.sent >= total - tail - 1e-9, "{kind}: {} of {total}", m.sent);
        }
        let report = run_simulation(&cfg).unwrap();
        let offered = cfg.lambda * cfg.mean_demand;
        assert!((report.utilization - offered).abs() < 0.15 * offered, "{kind}: {}", report.utilization);
    }
}

#[test]
fn both_schedulers_see_the_same_requests() {
    let cfg = SimulationConfig {
        slots: 150,
        replications: 2,
        ..config(3.0)
    };
    let rows = compare_schedulers(&cfg, &[2.0, 5.0]).unwrap();
    for row in &rows {
        assert_eq!(row.rcd.scheduler, SchedulerKind::Rcd);
        assert_eq!(row.baseline.scheduler, SchedulerKind::Baseline);
        for (a, b) in row.rcd.replications.iter().zip(&row.baseline.replications) {
            assert_eq!(a.requests, b.requests);
        }
    }
}

#[test]
fn highpri_share_equals_a_smaller_link() {
    let shared = SimulationConfig {
        highpri_fraction: 0.5,
        slots: 200,
        replications: 2,
        ..config(2.0)
    };
    let small = SimulationConfig {
        capacity: 0.5,
        highpri_fraction: 0.0,
        ..shared.clone()
    };
    for rep in 0..2 {
        let a = run_replication(&shared, rep).unwrap();
        let b = run_replication(&small, rep).unwrap();
        assert_eq!((a.accepted, a.sent, a.utilization), (b.accepted, b.sent, b.utilization));
    }
}

#[test]
fn short_explicit_horizon_is_an_error() {
    let cfg = SimulationConfig {
        horizon: Some(2),
        slots: 100,
        ..config(1.0)
    };
    assert!(matches!(run_replication(&cfg, 0), Err(SimError::Horizon { horizon: 2, .. })));
}

#[test]
fn network_runs_reject_the_baseline_and_report_per_link() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/gscale.json");
    let topo = Topology::from_json(&std::fs::read_to_string(path).unwrap()).unwrap();
    let mut cfg = SimulationConfig {
        slots: 60,
        replications: 1,
        ..config(2.0)
    };
    let report = run_network_simulation(&cfg, &topo).unwrap();
    let links = report.link_utilization();
    assert_eq!(links.len(), 19);
    assert!(links.iter().all(|u| (0.0..=1.0 + 1e-9).contains(u)));
    assert!(report.utilization > 0.0);

    cfg.scheduler = SchedulerKind::Baseline;
    assert!(matches!(run_network_simulation(&cfg, &topo), Err(SimError::NetworkBaseline)));
}

#[test]
fn long_csv_layout() {
    let cfg = SimulationConfig {
        slots: 50,
        replications: 2,
        ..config(1.0)
    };
    let report = run_simulation(&cfg).unwrap();
    let mut out = Vec::new();
    write_long_csv(&[&report], &mut out, false).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "lambda,scheduler,replication,failure_rate,utilization,mean_alloc_time_us");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("1.0,rcd,0,") && lines[1].ends_with(','));
}
