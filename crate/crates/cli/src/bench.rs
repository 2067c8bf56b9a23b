//! Heuristic versus exhaustive baseline over a suite of synthetic shapes.

use crate::{oracle_limits, BenchArgs, CliError, Shape};
use anyhow::{anyhow, Context};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::time::Instant;
use swroute_core::altmin::{self, optimality_gap};
use swroute_core::oracle::solve_exact;
use swroute_core::synth::random_scenario;

/// Instance shape of a suite file. `alpha3` is ignored when `gamma2` is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeDoc {
    pub name: String,
    pub n: usize,
    #[serde(rename = "N")]
    pub clusters: usize,
    pub gamma2: f64,
    #[serde(default)]
    pub alpha3: f64,
    pub radius_mi: f64,
    pub mps: usize,
}

impl ShapeDoc {
    fn shape(&self) -> Shape {
        Shape {
            n: self.n,
            clusters: self.clusters,
            radius_mi: self.radius_mi,
            gamma2: self.gamma2,
            alpha3: if self.gamma2 == 0.0 { 0.0 } else { self.alpha3 },
            mps: self.mps,
            ..Default::default()
        }
    }
}

/// (name, n, N, gamma2, alpha3, r in miles, MPS)
const SHAPES: [(&str, usize, usize, f64, f64, f64, usize); 26] = [
    ("p06-c12-1", 6, 12, 0.0, 0.0, 0.3, 6),
    ("p06-c06-1", 6, 6, 0.0, 0.0, 0.3, 6),
    ("p06-c12-2", 6, 12, 1.0, 0.1, 0.3, 6),
    ("p06-c07-1", 6, 7, 1.0, 0.1, 0.3, 6),
    ("p06-c12-3", 6, 12, 1.0, 0.1, 0.3, 2),
    ("p06-c07-2", 6, 7, 1.0, 0.1, 0.3, 2),
    ("p06-c12-4", 6, 12, 0.0, 0.0, 0.15, 6),
    ("p06-c08-1", 6, 8, 0.0, 0.0, 0.15, 6),
    ("p08-c16-1", 8, 16, 0.0, 0.0, 0.3, 6),
    ("p08-c08-1", 8, 8, 0.0, 0.0, 0.3, 6),
    ("p08-c16-2", 8, 16, 1.0, 0.1, 0.3, 6),
    ("p08-c09-1", 8, 9, 1.0, 0.1, 0.3, 6),
    ("p08-c16-3", 8, 16, 1.0, 0.1, 0.3, 2),
    ("p08-c11-1", 8, 11, 1.0, 0.1, 0.3, 2),
    ("p08-c16-4", 8, 16, 0.0, 0.0, 0.15, 6),
    ("p08-c09-2", 8, 9, 0.0, 0.0, 0.15, 6),
    ("p10-c20-1", 10, 20, 1.0, 0.0, 0.3, 6),
    ("p10-c20-2", 10, 20, 0.0, 0.0, 0.3, 6),
    ("p10-c12-1", 10, 12, 0.0, 0.0, 0.3, 6),
    ("p10-c20-3", 10, 20, 1.0, 0.1, 0.3, 6),
    ("p10-c11-1", 10, 11, 1.0, 0.1, 0.3, 6),
    ("p10-c20-4", 10, 20, 1.0, 1.0, 0.3, 6),
    ("p10-c20-5", 10, 20, 1.0, 0.1, 0.3, 2),
    ("p10-c13-1", 10, 13, 1.0, 0.1, 0.3, 2),
    ("p10-c20-6", 10, 20, 0.0, 0.0, 0.15, 6),
    ("p10-c16-1", 10, 16, 0.0, 0.0, 0.15, 6),
];

pub fn builtin_shapes() -> Vec<ShapeDoc> {
    SHAPES
        .iter()
        .map(|&(name, n, clusters, gamma2, alpha3, radius_mi, mps)| ShapeDoc {
            name: name.to_string(),
            n,
            clusters,
            gamma2,
            alpha3,
            radius_mi,
            mps,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchRow {
    pub instance: String,
    pub n: usize,
    pub clusters: usize,
    pub altmin_cost: Option<f64>,
    pub hbar: Option<usize>,
    pub altmin_s: Option<f64>,
    pub oracle_cost: Option<f64>,
    pub proven: Option<bool>,
    pub oracle_s: Option<f64>,
    pub gap: Option<f64>,
    pub error: Option<String>,
}

impl BenchRow {
    /// Diamond when the heuristic beat the baseline on cost and time, asterisk on a zero gap.
    pub fn marker(&self, stable: bool) -> &'static str {
        match (self.gap, self.altmin_s, self.oracle_s) {
            (Some(g), a, o) if g < 0.0 && (stable || a < o) => "◇",
            (Some(g), ..) if g.abs() <= 1e-9 => "*",
            _ => "",
        }
    }
}

pub fn run_instance(doc: &ShapeDoc, seed: u64, a: &BenchArgs) -> BenchRow {
    let mut row = BenchRow { instance: doc.name.clone(), n: doc.n, clusters: doc.clusters, ..Default::default() };
    let mut s = match random_scenario(&doc.shape().spec(seed)) {
        Ok(s) => s,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    if let Some(h) = a.common.hmax {
        s.config.h_max = h;
    }
    let t0 = Instant::now();
    let res = match altmin::solve(&s) {
        Ok(r) => r,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    row.altmin_s = Some(t0.elapsed().as_secs_f64());
    row.altmin_cost = Some(res.cost);
    row.hbar = Some(res.hbar);
    let t1 = Instant::now();
    match solve_exact(&s, oracle_limits(a.time_cap, a.budget, a.common.stable)) {
        Ok(ex) => {
            row.oracle_s = Some(t1.elapsed().as_secs_f64());
            row.oracle_cost = Some(ex.cost);
            row.proven = Some(ex.proven);
            row.gap = Some(optimality_gap(res.cost, ex.cost));
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    if a.common.stable {
        row.altmin_s = None;
        row.oracle_s = None;
    }
    row
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn csv_table(rows: &[BenchRow], stable: bool) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Other(anyhow!(e));
    w.write_record([
        "instance", "n", "N", "altmin_cost", "hbar", "altmin_cpu_s", "oracle_cost", "proven", "oracle_cpu_s", "gap",
    ])
    .map_err(io)?;
    for r in rows {
        w.write_record([
            format!("{}{}", r.marker(stable), r.instance),
            r.n.to_string(),
            r.clusters.to_string(),
            opt(r.altmin_cost),
            opt(r.hbar),
            opt(r.altmin_s),
            opt(r.oracle_cost),
            opt(r.proven),
            opt(r.oracle_s),
            opt(r.gap),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Other(anyhow!(e.to_string())))?;
    Ok(String::from_utf8(bytes).map_err(|e| anyhow!(e))?)
}

pub fn pretty_table(rows: &[BenchRow], stable: bool) -> String {
    let f = |v: Option<f64>, p: usize| v.map(|x| format!("{x:.p$}")).unwrap_or_else(|| "-".into());
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:>3} {:>3} {:>12} {:>4} {:>9} {:>12} {:>6} {:>9} {:>8}",
        "instance", "n", "N", "altmin", "hbar", "time_s", "oracle", "proven", "time_s", "gap_%"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<12} {:>3} {:>3} {:>12} {:>4} {:>9} {:>12} {:>6} {:>9} {:>8}",
            format!("{}{}", r.marker(stable), r.instance),
            r.n,
            r.clusters,
            f(r.altmin_cost, 3),
            r.hbar.map_or("-".into(), |h| h.to_string()),
            f(r.altmin_s, 3),
            f(r.oracle_cost, 3),
            r.proven.map_or("-".into(), |p| if p { "yes".into() } else { "no".to_string() }),
            f(r.oracle_s, 3),
            f(r.gap.map(|g| 100.0 * g), 2),
        );
        if let Some(e) = &r.error {
            let _ = writeln!(out, "  {}: {e}", r.instance);
        }
    }
    out
}

fn load_suite(a: &BenchArgs) -> Result<Vec<ShapeDoc>, CliError> {
    let suite = match a.suite.as_deref() {
        None => builtin_shapes().into_iter().filter(|d| d.n <= 6).collect(),
        Some("all") => builtin_shapes(),
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
            serde_json::from_str(&text).map_err(|e| {
                CliError::Invalid(vec![swroute_core::SwError::InvalidInput(format!("malformed suite: {e}"))])
            })?
        }
    };
    Ok(suite)
}

/// Runs the suite; rows come back in suite order whatever the thread count.
pub fn run_suite(a: &BenchArgs) -> Result<Vec<BenchRow>, CliError> {
    let suite = load_suite(a)?;
    let jobs: Vec<(u64, ShapeDoc)> = suite
        .into_iter()
        .enumerate()
        .filter(|(_, d)| a.instances.is_empty() || a.instances.contains(&d.name))
        .map(|(i, d)| (a.common.seed.wrapping_add(i as u64), d))
        .collect();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = a.threads {
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| anyhow!(e))?;
    Ok(pool.install(|| jobs.par_iter().map(|(seed, d)| run_instance(d, *seed, a)).collect()))
}

pub fn cmd_bench(a: &BenchArgs) -> Result<(), CliError> {
    let rows = run_suite(a)?;
    for r in &rows {
        if let Some(e) = &r.error {
            log::warn!("{}: {e}", r.instance);
        }
    }
    let csv = csv_table(&rows, a.common.stable)?;
    let pretty = pretty_table(&rows, a.common.stable);
    match &a.common.out {
        Some(p) => {
            std::fs::write(p, csv).with_context(|| format!("writing {}", p.display()))?;
            print!("{pretty}");
        }
        None => {
            print!("{csv}");
            eprint!("{pretty}");
        }
    }
    Ok(())
}
