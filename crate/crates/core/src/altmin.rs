//! Alternating minimization: sequence for fixed points, then points for a fixed sequence.

use crate::constraints::check_departures;
use crate::error::{Result, SwError};
use crate::geometry::{area_centroid, Point};
use crate::model::{evaluate_cost, Route, Scenario};
use crate::phase1::solve_sequence;
use crate::phase2::{build_placement, solve_placement};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// The sequencer returned an order seen in an earlier iteration.
    Recurrence,
    IterationLimit,
}

/// One mega iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Iteration {
    pub h: usize,
    pub sequence: Vec<usize>,
    /// Placement cost, or `None` when the sequence recurred or placement failed.
    pub cost: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub cost: f64,
    pub sequence: Vec<usize>,
    pub points: Vec<Point>,
    pub route: Route,
    pub history: Vec<Iteration>,
    pub hbar: usize,
    pub termination: Termination,
}

impl SolveResult {
    /// Placement costs of the iterations that produced one, in order.
    pub fn cost_history(&self) -> Vec<f64> {
        self.history.iter().filter_map(|i| i.cost).collect()
    }
}

pub fn solve(s: &Scenario) -> Result<SolveResult> {
    let h_max = s.config.h_max;
    let mut points: Vec<Point> = s.areas.iter().map(area_centroid).collect();
    let mut history: Vec<Iteration> = Vec::new();
    let mut best: Option<(f64, Route)> = None;
    let mut hbar = h_max;
    let mut termination = Termination::IterationLimit;
    for h in 1..=h_max {
        let seq = solve_sequence(&points, s)?.sequence;
        if history.iter().any(|it| it.sequence == seq) {
            log::debug!("sequence recurred at h={h}");
            history.push(Iteration { h, sequence: seq, cost: None, error: None });
            hbar = h;
            termination = Termination::Recurrence;
            break;
        }
        match solve_placement(&build_placement(&seq, s)) {
            Ok(pl) => {
                log::debug!("h={h} cost {:.6}", pl.cost);
                if best.as_ref().is_none_or(|b| pl.cost < b.0) {
                    best = Some((pl.cost, pl.route));
                }
                points = pl.points;
                history.push(Iteration { h, sequence: seq, cost: Some(pl.cost), error: None });
            }
            Err(e) => {
                log::warn!("placement failed at h={h}: {e}");
                history.push(Iteration { h, sequence: seq, cost: None, error: Some(e.to_string()) });
            }
        }
    }
    let Some((_, route)) = best else {
        return Err(SwError::NonConvergence(s.config.max_iterations));
    };
    let worst = check_departures(&route, s).iter().map(|d| d.required_wait).fold(0.0, f64::max);
    debug_assert!(worst <= 1e-6, "departure slack {worst}");
    let cost = evaluate_cost(&route, s)?.total;
    Ok(SolveResult {
        cost,
        sequence: route.sequence.clone(),
        points: route.points.clone(),
        route,
        history,
        hbar,
        termination,
    })
}

/// Relative excess of the heuristic cost over the reference; negative when the heuristic wins.
pub fn optimality_gap(altmin_cost: f64, oracle_cost: f64) -> f64 {
    (altmin_cost - oracle_cost) / oracle_cost
}
