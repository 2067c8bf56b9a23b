//! Legitimacy, capacity, position-shift and departure screens.

use crate::model::{EventKind, Route, Scenario};
use serde::Serialize;

/// Phase-1 system state: current cluster (`None` at the start point) and visited set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SystemState {
    pub current: Option<usize>,
    pub visited: u64,
}

impl SystemState {
    pub const INITIAL: SystemState = SystemState { current: None, visited: 0 };

    pub fn entropy(&self) -> u32 {
        self.visited.count_ones()
    }

    pub fn is_terminal(&self, n_clusters: usize) -> bool {
        self.entropy() as usize == n_clusters
    }

    pub fn is_consistent(&self) -> bool {
        match self.current {
            None => self.visited == 0,
            Some(l) => self.visited & (1 << l) != 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Violation {
    Legitimacy(u32),
    CapacityExceeded(usize),
    MpsViolation(u32, EventKind),
}

/// Running totals over a set of visited clusters.
#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    pickups: usize,
    dropoffs: usize,
    load: i64,
}

fn tally(s: &Scenario, mask: u64) -> Tally {
    let mut t = Tally {
        pickups: s.carry.pickups_done,
        dropoffs: s.carry.dropoffs_done,
        load: s.carry.onboard.len() as i64,
    };
    let mut m = mask;
    while m != 0 {
        let i = m.trailing_zeros() as usize;
        m &= m - 1;
        let l = s.info[i].loads;
        t.pickups += l.pickups;
        t.dropoffs += l.dropoffs;
        t.load += l.net();
    }
    t
}

fn shift_ok(position: usize, k: u32, bound: usize) -> bool {
    (position as i64 - k as i64).unsigned_abs() as usize <= bound
}

/// Position-shift check for every event of cluster `l`, given totals before it.
fn mps_violations(s: &Scenario, l: usize, before: &Tally, out: &mut Vec<Violation>) {
    let info = &s.info[l];
    for &k in &info.pickups {
        if !shift_ok(before.pickups + 1, k, s.config.mps_pickup) {
            out.push(Violation::MpsViolation(k, EventKind::Pickup));
        }
    }
    for &k in &info.dropoffs {
        if !shift_ok(before.dropoffs + 1, k, s.config.mps_dropoff) {
            out.push(Violation::MpsViolation(k, EventKind::Dropoff));
        }
    }
}

/// All primary-constraint violations of a visit order (0-based cluster indices).
pub fn check_sequence(seq: &[usize], s: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut visited = 0u64;
    let mut t = tally(s, 0);
    for (j, &l) in seq.iter().enumerate() {
        let info = &s.info[l];
        for &k in &info.dropoffs {
            let picked = s.carry.onboard.contains_key(&k)
                || s.pattern
                    .cluster_of(crate::model::Event::pickup(k))
                    .is_some_and(|c| visited & (1 << c) != 0);
            if !picked {
                out.push(Violation::Legitimacy(k));
            }
        }
        mps_violations(s, l, &t, &mut out);
        visited |= 1 << l;
        t.pickups += info.loads.pickups;
        t.dropoffs += info.loads.dropoffs;
        t.load += info.loads.net();
        if t.load > s.config.capacity as i64 || t.load < 0 {
            out.push(Violation::CapacityExceeded(j + 1));
        }
    }
    out
}

/// Capacity and position-shift screens for a Phase-1 state.
pub fn state_feasible(st: &SystemState, s: &Scenario) -> bool {
    let Some(l) = st.current else {
        return st.visited == 0;
    };
    let t = tally(s, st.visited);
    if t.load > s.config.capacity as i64 || t.load < 0 {
        return false;
    }
    let before = tally(s, st.visited & !(1 << l));
    let mut v = Vec::new();
    mps_violations(s, l, &before, &mut v);
    v.is_empty()
}

/// Unvisited clusters whose drop-offs are all legitimate and whose successor state passes the screens.
pub fn feasible_next_states(st: &SystemState, s: &Scenario) -> Vec<SystemState> {
    (0..s.num_clusters())
        .filter(|&l| st.visited & (1 << l) == 0 && s.info[l].prereq & !st.visited == 0)
        .map(|l| SystemState { current: Some(l), visited: st.visited | (1 << l) })
        .filter(|next| state_feasible(next, s))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DepartureSlack {
    /// 1-based position in the visit order.
    pub position: usize,
    /// Latest boarding-ready time of the passengers picked up here (0 when none).
    pub ready: f64,
    pub slack: f64,
    pub required_wait: f64,
}

/// Compares each departure with the arrival of the passengers who walk to that stop.
pub fn check_departures(route: &Route, s: &Scenario) -> Vec<DepartureSlack> {
    let vp = s.vehicle.walk_speed;
    route
        .timeline
        .iter()
        .enumerate()
        .map(|(j, stop)| {
            let ready = s.info[stop.cluster]
                .pickups
                .iter()
                .map(|&k| {
                    let r = s.request(k);
                    r.t_request + stop.point.dist(r.pickup) / vp
                })
                .fold(0.0, f64::max);
            let slack = stop.departure - ready;
            DepartureSlack { position: j + 1, ready, slack, required_wait: (-slack).max(0.0) }
        })
        .collect()
}
