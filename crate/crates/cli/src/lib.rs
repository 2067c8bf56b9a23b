//! Command-line front end for the shuttle routing solver.

pub mod bench;
pub mod output;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};
use swroute_core::altmin::{self, optimality_gap};
use swroute_core::dynamic::{replay, ReplayDoc, ReplayMode, ReplayResult};
use swroute_core::model::{validate_scenario, MILE};
use swroute_core::oracle::{solve_exact, OracleLimits};
use swroute_core::synth::{random_replay, random_scenario, SynthSpec};
use swroute_core::{Scenario, SwError};

#[derive(Debug, Parser)]
#[command(name = "swroute", version, about = "Shuttle routing with walking passengers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one scenario with alternating minimization.
    Solve(SolveArgs),
    /// Compare the heuristic against the exhaustive baseline on a suite of shapes.
    Bench(BenchArgs),
    /// Insert request batches into a running plan at their arrival times.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Overrides the mega-iteration limit.
    #[arg(long)]
    pub hmax: Option<usize>,
    /// Omit wall-clock fields so that reruns are byte-identical.
    #[arg(long)]
    pub stable: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[arg(long, required_unless_present = "random", conflicts_with = "random")]
    pub scenario: Option<PathBuf>,
    /// Synthetic instance, e.g. "n=6 N=12 r=0.3 g2=1 a3=0.1 mps=6".
    #[arg(long)]
    pub random: Option<Shape>,
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub geojson: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Also run the exhaustive baseline and report the gap.
    #[arg(long)]
    pub oracle: bool,
    /// Baseline time limit in seconds; ignored with --stable.
    #[arg(long, default_value_t = 3600.0)]
    pub time_cap: f64,
    /// Baseline limit on evaluated visit orders.
    #[arg(long)]
    pub budget: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Suite file, or "all" for every built-in shape. Defaults to the built-in shapes with n <= 6.
    #[arg(long)]
    pub suite: Option<String>,
    /// Comma-separated instance names to keep.
    #[arg(long, value_delimiter = ',')]
    pub instances: Vec<String>,
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 3600.0)]
    pub time_cap: f64,
    #[arg(long)]
    pub budget: Option<u64>,
    /// Worker threads; all cores when omitted.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    #[arg(long, required_unless_present = "random", conflicts_with = "random")]
    pub scenario: Option<PathBuf>,
    /// Synthetic replay, e.g. "n=6 batches=2 gap=900".
    #[arg(long)]
    pub random: Option<Shape>,
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub geojson: Option<PathBuf>,
    /// Also run the wait-for-completion policy for comparison.
    #[arg(long)]
    pub sequential: bool,
}

/// Synthetic instance shape parsed from `key=value` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Shape {
    pub n: usize,
    pub clusters: usize,
    pub radius_mi: f64,
    pub gamma2: f64,
    pub alpha3: f64,
    pub mps: usize,
    pub batches: usize,
    pub gap: f64,
}

impl Default for Shape {
    fn default() -> Self {
        Shape { n: 3, clusters: 6, radius_mi: 0.3, gamma2: 1.0, alpha3: 0.1, mps: 6, batches: 2, gap: 900.0 }
    }
}

impl FromStr for Shape {
    type Err = String;

    fn from_str(text: &str) -> Result<Self, String> {
        let mut sh = Shape::default();
        let mut clusters = None;
        for kv in text.split([' ', ',']).filter(|t| !t.is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(|| format!("expected key=value, got {kv:?}"))?;
            let bad = |e: &dyn std::fmt::Display| format!("{k}: {e}");
            match k {
                "n" => sh.n = v.parse().map_err(|e| bad(&e))?,
                "N" => clusters = Some(v.parse().map_err(|e| bad(&e))?),
                "r" => sh.radius_mi = v.parse().map_err(|e| bad(&e))?,
                "g2" => sh.gamma2 = v.parse().map_err(|e| bad(&e))?,
                "a3" => sh.alpha3 = v.parse().map_err(|e| bad(&e))?,
                "mps" => sh.mps = v.parse().map_err(|e| bad(&e))?,
                "batches" => sh.batches = v.parse().map_err(|e| bad(&e))?,
                "gap" => sh.gap = v.parse().map_err(|e| bad(&e))?,
                _ => return Err(format!("unknown key {k:?}")),
            }
        }
        sh.clusters = clusters.unwrap_or(2 * sh.n);
        Ok(sh)
    }
}

impl Shape {
    pub fn spec(&self, seed: u64) -> SynthSpec {
        let mut spec = SynthSpec { n: self.n, clusters: self.clusters, seed, radius: self.radius_mi * MILE, ..Default::default() };
        spec.config.gamma2 = self.gamma2;
        spec.config.alpha3_pickup = self.alpha3;
        spec.config.alpha3_dropoff = self.alpha3;
        spec.config.mps_pickup = self.mps;
        spec.config.mps_dropoff = self.mps;
        spec
    }
}

/// Failure of a command, mapped to a process exit code.
#[derive(Debug)]
pub enum CliError {
    Invalid(Vec<SwError>),
    Solver(SwError),
    Other(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(es) if es.contains(&SwError::InfeasiblePattern) => 3,
            CliError::Invalid(_) => 2,
            CliError::Solver(SwError::InfeasiblePattern) => 3,
            CliError::Solver(e) if e.is_validation() => 2,
            _ => 1,
        }
    }

    pub fn messages(&self) -> Vec<String> {
        match self {
            CliError::Invalid(es) => es.iter().map(|e| e.to_string()).collect(),
            CliError::Solver(e) => vec![e.to_string()],
            CliError::Other(e) => vec![format!("{e:#}")],
        }
    }
}

impl From<SwError> for CliError {
    fn from(e: SwError) -> Self {
        if e.is_validation() {
            CliError::Invalid(vec![e])
        } else {
            CliError::Solver(e)
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Other(e)
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(a) => cmd_solve(&a),
        Command::Bench(a) => bench::cmd_bench(&a),
        Command::Replay(a) => cmd_replay(&a),
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    validate_scenario(&text).map_err(CliError::Invalid)
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

pub(crate) fn to_json<T: Serialize>(v: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| anyhow!(e))?;
    s.push('\n');
    Ok(s)
}

pub(crate) fn oracle_limits(time_cap: f64, budget: Option<u64>, stable: bool) -> OracleLimits {
    OracleLimits {
        time_cap: (!stable).then(|| Duration::from_secs_f64(time_cap.max(0.0))),
        max_sequences: budget,
    }
}

pub fn cmd_solve(a: &SolveArgs) -> Result<(), CliError> {
    let mut s = match (&a.scenario, &a.random) {
        (Some(p), _) => load_scenario(p)?,
        (None, Some(sh)) => random_scenario(&sh.spec(a.common.seed))?,
        (None, None) => return Err(anyhow!("either --scenario or --random is required").into()),
    };
    if let Some(h) = a.common.hmax {
        s.config.h_max = h;
    }
    let t0 = Instant::now();
    let res = altmin::solve(&s)?;
    let altmin_s = t0.elapsed().as_secs_f64();
    let mut doc = output::route_doc(&s, &res);
    if !a.common.stable {
        doc.cpu_s = Some(altmin_s);
    }
    if a.oracle {
        let t1 = Instant::now();
        let ex = solve_exact(&s, oracle_limits(a.time_cap, a.budget, a.common.stable))?;
        let oracle_s = t1.elapsed().as_secs_f64();
        doc.oracle = Some(output::OracleDoc {
            cost: ex.cost,
            proven: ex.proven,
            sequences: ex.sequences,
            sequence: output::one_based(&ex.sequence),
            gap: optimality_gap(res.cost, ex.cost),
            cpu_s: (!a.common.stable).then_some(oracle_s),
        });
    }
    write_out(a.common.out.as_deref(), &to_json(&doc)?)?;
    if let Some(p) = &a.geojson {
        write_out(Some(p), &to_json(&output::geojson(&s, &res.route))?)?;
    }
    if let Some(p) = &a.svg {
        write_out(Some(p), &output::svg(&s, &res.route))?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct ReplayReport {
    pub dynamic: ReplayResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sequential: Option<ReplayResult>,
}

pub fn cmd_replay(a: &ReplayArgs) -> Result<(), CliError> {
    let mut doc: ReplayDoc = match (&a.scenario, &a.random) {
        (Some(p), _) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Invalid(vec![SwError::InvalidInput(format!("malformed replay: {e}"))]))?
        }
        (None, Some(sh)) => random_replay(&sh.spec(a.common.seed), sh.batches, sh.gap),
        (None, None) => return Err(anyhow!("either --scenario or --random is required").into()),
    };
    if let Some(h) = a.common.hmax {
        doc.config.h_max = h;
    }
    let dynamic = replay(&doc, ReplayMode::Dynamic)?;
    let sequential = if a.sequential { Some(replay(&doc, ReplayMode::Sequential)?) } else { None };
    if let Some(p) = &a.geojson {
        let (depot, ..) = doc.to_si()?;
        write_out(Some(p), &to_json(&output::plan_geojson(depot, &dynamic.plan))?)?;
    }
    write_out(a.common.out.as_deref(), &to_json(&ReplayReport { dynamic, sequential })?)
}
