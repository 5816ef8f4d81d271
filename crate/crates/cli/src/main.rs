use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{debug, info};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use rcd_core::model::parse_requests;
use rcd_core::sim::{
    compare_schedulers, run_network_simulation, run_simulation, run_stream, write_link_csv, write_long_csv,
    write_summary, MetricsReport,
};
use rcd_core::{
    Decision, LinkScheduler, ModelError, Request, RequestId, SchedulerKind, SimError, SimulationConfig, SubmitError,
    Topology,
};

/// Deadline-aware bandwidth scheduling simulator
#[derive(Parser, Debug)]
#[command(name = "rcd", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one configuration and write per-replication metrics
    Simulate(SimulateArgs),
    /// Run both schedulers over a range of arrival rates
    Sweep(SweepArgs),
    /// Run both schedulers at one arrival rate and print a summary
    Compare(SweepArgs),
    /// Allocate requests against a saved scheduler state
    Solve(SolveArgs),
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
struct ConfigArgs {
    /// TOML file with simulation parameters; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    slots: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replications: Option<u32>,
    #[arg(long)]
    scheduler: Option<SchedulerKind>,
    #[arg(long)]
    capacity: Option<f64>,
    #[arg(long)]
    highpri_fraction: Option<f64>,
    #[arg(long)]
    horizon: Option<u64>,
    /// Route over the links of the k shortest paths only (0 = all links)
    #[arg(long)]
    k_paths: Option<usize>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Simulate over a topology instead of a single link
    #[arg(long)]
    network: bool,
    /// Topology JSON for network runs
    #[arg(long)]
    topology: Option<PathBuf>,
    /// JSON array of requests to replay instead of generating arrivals
    #[arg(long)]
    workload: Option<PathBuf>,
    /// Output file (default stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-link utilisation CSV for network runs
    #[arg(long)]
    link_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
    /// Leave the timing column empty so output is byte-stable
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Arrival rates to run (sweep default 1..8, compare default the configured lambda)
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    /// Long-format results (default stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Summary table file (default stderr)
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// JSON array of requests to submit, in order
    #[arg(long)]
    workload: PathBuf,
    /// Saved state; a fresh scheduler is built when absent
    #[arg(long)]
    state: Option<PathBuf>,
    /// Where to write the state after the submissions
    #[arg(long)]
    save_state: Option<PathBuf>,
    /// Topology JSON; selects network scheduling for a fresh state
    #[arg(long)]
    topology: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    capacity: f64,
    #[arg(long, default_value_t = 288)]
    horizon: u64,
    #[arg(long, default_value_t = 0)]
    k_paths: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Horizon(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Other(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Other(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Horizon(_) => 3,
            CliError::Io { .. } => 4,
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Horizon { .. } => CliError::Horizon(e.to_string()),
            SimError::Config(_) | SimError::Model(_) | SimError::NetworkBaseline => CliError::Parse(e.to_string()),
            SimError::Submit(_) => CliError::Other(e.to_string()),
        }
    }
}

impl From<SubmitError> for CliError {
    fn from(e: SubmitError) -> Self {
        CliError::Parse(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn io_err(path: Option<&Path>) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_owned),
        source,
    }
}

/// Runs `f` against the file at `path`, or stdout.
fn with_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), CliError> {
    let res = match path {
        Some(p) => fs::File::create(p).and_then(|file| {
            let mut w = io::BufWriter::new(file);
            f(&mut w)?;
            w.flush()
        }),
        None => f(&mut io::stdout().lock()),
    };
    res.map_err(io_err(path))
}

fn csv_io(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

fn load_topology(path: &Path) -> Result<Topology, CliError> {
    Topology::from_json(&read(path)?).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn load_requests(path: &Path) -> Result<Vec<Request>, CliError> {
    parse_requests(&read(path)?).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

impl ConfigArgs {
    fn resolve(&self) -> Result<SimulationConfig, CliError> {
        let mut c = match &self.config {
            Some(p) => toml::from_str(&read(p)?).map_err(|e| CliError::Parse(format!("{}: {e}", p.display())))?,
            None => SimulationConfig::default(),
        };
        macro_rules! apply {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { c.$f = v; })* };
        }
        apply!(lambda, slots, seed, replications, scheduler, capacity, highpri_fraction, k_paths);
        if self.horizon.is_some() {
            c.horizon = self.horizon;
        }
        c.validate().map_err(CliError::Parse)?;
        debug!("resolved config: {c:?}");
        Ok(c)
    }
}

fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let config = args.config.resolve()?;
    let topology = match (&args.topology, args.network) {
        (Some(p), _) => Some(load_topology(p)?),
        (None, true) => return Err(CliError::Parse("--network needs --topology".into())),
        (None, false) => None,
    };
    let report = match (&topology, &args.workload) {
        (Some(_), Some(_)) => {
            return Err(CliError::Parse("--workload replay is single-link only".into()));
        }
        (Some(t), None) => run_network_simulation(&config, t)?,
        (None, Some(w)) => {
            let mut stream = load_requests(w)?;
            stream.sort_by_key(|r| (r.arrival, r.id));
            let rep = run_stream(&config, stream, 0)?;
            MetricsReport {
                lambda: config.lambda,
                scheduler: config.scheduler,
                failure_rate: rep.failure_rate,
                utilization: rep.utilization,
                mean_allocation_time: rep.mean_alloc_time,
                replications: vec![rep],
            }
        }
        (None, None) => run_simulation(&config)?,
    };
    info!(
        "lambda {} {}: failure {:.4}, utilization {:.4}",
        report.lambda, report.scheduler, report.failure_rate, report.utilization
    );
    with_output(args.out.as_deref(), |w| match args.format {
        Format::Csv => write_long_csv(&[&report], w, !args.no_timing).map_err(csv_io),
        Format::Json => {
            let mut r = report.clone();
            if args.no_timing {
                r.mean_allocation_time = 0.0;
                r.replications.iter_mut().for_each(|x| x.mean_alloc_time = 0.0);
            }
            serde_json::to_writer_pretty(&mut *w, &r)?;
            writeln!(w)
        }
    })?;
    if let (Some(path), Some(t)) = (&args.link_out, &topology) {
        with_output(Some(path), |w| write_link_csv(&report, t, w).map_err(csv_io))?;
    }
    Ok(())
}

fn sweep(args: SweepArgs, default_lambdas: Vec<f64>) -> Result<(), CliError> {
    let config = args.config.resolve()?;
    let lambdas = args.lambdas.clone().unwrap_or(default_lambdas);
    if lambdas.is_empty() {
        return Err(CliError::Parse("no arrival rates given".into()));
    }
    let mut rows = Vec::with_capacity(lambdas.len());
    for &lambda in &lambdas {
        info!("running lambda {lambda}");
        rows.extend(compare_schedulers(&config, &[lambda])?);
    }
    with_output(args.out.as_deref(), |w| match args.format {
        Format::Csv => {
            let reports: Vec<&MetricsReport> = rows.iter().flat_map(|r| [&r.rcd, &r.baseline]).collect();
            write_long_csv(&reports, w, !args.no_timing).map_err(csv_io)
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut *w, &rows)?;
            writeln!(w)
        }
    })?;
    match &args.table {
        Some(p) => with_output(Some(p), |w| write_summary(&rows, w)),
        None => write_summary(&rows, io::stderr().lock()).map_err(io_err(None)),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SavedState {
    Link(LinkScheduler),
    Network(rcd_core::NetScheduler),
}

#[derive(Serialize)]
struct SolveOutput {
    #[serde(skip_serializing_if = "Option::is_none")]
    variables: Option<u64>,
    decisions: Vec<SolveEntry>,
}

#[derive(Serialize)]
struct SolveEntry {
    id: RequestId,
    #[serde(flatten)]
    decision: serde_json::Value,
}

fn solve(args: SolveArgs) -> Result<(), CliError> {
    let requests = load_requests(&args.workload)?;
    let mut state = match (&args.state, &args.topology) {
        (Some(p), _) => serde_json::from_str(&read(p)?)
            .map_err(|e| CliError::Parse(format!("{}: {e}", p.display())))?,
        (None, Some(t)) => SavedState::Network(
            rcd_core::NetScheduler::new(load_topology(t)?, args.horizon, args.k_paths)
                .map_err(|e: ModelError| CliError::Parse(e.to_string()))?,
        ),
        (None, None) => SavedState::Link(
            LinkScheduler::new(args.capacity, args.horizon).map_err(|e| CliError::Parse(e.to_string()))?,
        ),
    };
    let mut out = SolveOutput {
        variables: None,
        decisions: Vec::with_capacity(requests.len()),
    };
    for r in requests {
        let id = r.id;
        let decision = match &mut state {
            SavedState::Link(s) => to_value(&s.submit(r)?),
            SavedState::Network(s) => {
                let vars = s.variable_count(r.deadline);
                info!("request {id}: {vars} variables");
                out.variables = Some(out.variables.unwrap_or(0).max(vars));
                to_value(&s.submit(r)?)
            }
        };
        out.decisions.push(SolveEntry { id, decision });
    }
    if let Some(p) = &args.save_state {
        with_output(Some(p), |w| {
            serde_json::to_writer(&mut *w, &state)?;
            writeln!(w)
        })?;
    }
    with_output(args.out.as_deref(), |w| {
        serde_json::to_writer_pretty(&mut *w, &out)?;
        writeln!(w)
    })
}

fn to_value<K: Ord + Serialize>(d: &Decision<K>) -> serde_json::Value {
    serde_json::to_value(d).expect("decisions serialize")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let res = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a, (1..=8).map(f64::from).collect()),
        Command::Compare(a) => {
            let lambda = a.config.resolve().map(|c| c.lambda);
            match lambda {
                Ok(l) => sweep(a, vec![l]),
                Err(e) => Err(e),
            }
        }
        Command::Solve(a) => solve(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
