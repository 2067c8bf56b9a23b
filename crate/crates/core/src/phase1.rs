//! Optimal visit order for fixed routing points by a backward subset DP.

use crate::constraints::{feasible_next_states, SystemState};
use crate::error::{Result, SwError};
use crate::geometry::Point;
use crate::model::Scenario;
use std::collections::HashMap;

/// Cost multiplier of the next segment: shuttle weight plus waiting and riding passengers.
pub fn segment_multiplier(st: &SystemState, s: &Scenario) -> f64 {
    let c = &s.config;
    let mut waiting = 0usize;
    let mut riding = s.carry.onboard.len() as i64;
    for (i, info) in s.info.iter().enumerate() {
        if st.visited & (1 << i) == 0 {
            waiting += info.loads.pickups;
        } else {
            riding += info.loads.net();
        }
    }
    c.gamma1 + c.gamma2 * (c.alpha1 * waiting as f64 + c.alpha2 * riding as f64)
}

/// Value and memorized successor of every reachable feasible state.
#[derive(Debug, Clone, Default)]
pub struct ValueTable {
    pub entries: HashMap<SystemState, (f64, Option<usize>)>,
}

impl ValueTable {
    pub fn value(&self, st: &SystemState) -> Option<f64> {
        self.entries.get(st).map(|e| e.0)
    }
}

#[derive(Debug, Clone)]
pub struct SequenceSolution {
    pub sequence: Vec<usize>,
    /// DP value plus the order-independent cost terms.
    pub cost: f64,
    pub table: ValueTable,
}

/// Travel time plus stop overhead from the current position to cluster `to`.
fn leg(st: &SystemState, to: usize, points: &[Point], s: &Scenario) -> f64 {
    let from = st.current.map_or(s.depot, |l| points[l]);
    from.dist(points[to]) / s.vehicle.shuttle_speed + s.stop_overhead()
}

pub fn solve_sequence(points: &[Point], s: &Scenario) -> Result<SequenceSolution> {
    let n = s.num_clusters();
    assert_eq!(points.len(), n);
    let mut levels: Vec<Vec<SystemState>> = vec![vec![SystemState::INITIAL]];
    for _ in 0..n {
        let mut next: Vec<SystemState> = levels
            .last()
            .expect("level")
            .iter()
            .flat_map(|st| feasible_next_states(st, s))
            .collect();
        next.sort_unstable();
        next.dedup();
        levels.push(next);
    }

    let mut table = ValueTable::default();
    for st in &levels[n] {
        table.entries.insert(*st, (0.0, None));
    }
    for level in levels[..n].iter().rev() {
        for st in level {
            let m = segment_multiplier(st, s);
            let mut best = (f64::INFINITY, None);
            for nx in feasible_next_states(st, s) {
                let l = nx.current.expect("successor has a cluster");
                let Some(&(v, _)) = table.entries.get(&nx) else { continue };
                let c = leg(st, l, points, s) * m + v;
                if c < best.0 {
                    best = (c, Some(l));
                }
            }
            table.entries.insert(*st, best);
        }
    }

    let (v0, _) = table.entries[&SystemState::INITIAL];
    if !v0.is_finite() {
        return Err(SwError::InfeasiblePattern);
    }
    let mut sequence = Vec::with_capacity(n);
    let mut st = SystemState::INITIAL;
    while let Some((_, Some(l))) = table.entries.get(&st).copied() {
        sequence.push(l);
        st = SystemState { current: Some(l), visited: st.visited | (1 << l) };
    }
    debug_assert_eq!(sequence.len(), n);
    Ok(SequenceSolution { sequence, cost: v0 + s.order_free_cost(points), table })
}
