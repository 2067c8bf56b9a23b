//! Exact baseline: every feasible visit order, each with optimal placement.

use crate::constraints::{feasible_next_states, SystemState};
use crate::error::{Result, SwError};
use crate::geometry::Point;
use crate::model::{realize_route, Route, Scenario, Timing};
use crate::phase2::{build_placement, solve_placement};
use std::time::{Duration, Instant};

/// Depth-first walk over feasible visit orders in lexicographic order.
pub struct FeasibleSequences<'a> {
    s: &'a Scenario,
    prefix: Vec<usize>,
    /// Untried successors of each prefix length, smallest last.
    stack: Vec<Vec<usize>>,
    state: Vec<SystemState>,
}

impl<'a> FeasibleSequences<'a> {
    fn successors(st: &SystemState, s: &Scenario) -> Vec<usize> {
        let mut next: Vec<usize> = feasible_next_states(st, s).iter().filter_map(|x| x.current).collect();
        next.sort_unstable_by(|a, b| b.cmp(a));
        next
    }
}

impl Iterator for FeasibleSequences<'_> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let n = self.s.num_clusters();
        loop {
            let top = self.stack.last_mut()?;
            match top.pop() {
                Some(c) => {
                    let st = *self.state.last().expect("state");
                    let nx = SystemState { current: Some(c), visited: st.visited | (1 << c) };
                    self.prefix.push(c);
                    if self.prefix.len() == n {
                        let out = self.prefix.clone();
                        self.prefix.pop();
                        return Some(out);
                    }
                    self.stack.push(Self::successors(&nx, self.s));
                    self.state.push(nx);
                }
                None => {
                    self.stack.pop();
                    self.state.pop();
                    self.prefix.pop();
                }
            }
        }
    }
}

pub fn enumerate_feasible_sequences(s: &Scenario) -> FeasibleSequences<'_> {
    let st = SystemState::INITIAL;
    FeasibleSequences {
        s,
        prefix: Vec::new(),
        stack: if s.num_clusters() == 0 { Vec::new() } else { vec![FeasibleSequences::successors(&st, s)] },
        state: vec![st],
    }
}

pub fn count_feasible_sequences(s: &Scenario) -> u64 {
    enumerate_feasible_sequences(s).count() as u64
}

/// Stopping rules for the exhaustive search. Without either limit the search runs to completion.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OracleLimits {
    pub time_cap: Option<Duration>,
    /// Deterministic alternative to the time cap.
    pub max_sequences: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    pub cost: f64,
    pub sequence: Vec<usize>,
    pub points: Vec<Point>,
    pub route: Route,
    /// True when every feasible order was evaluated.
    pub proven: bool,
    pub sequences: u64,
}

pub fn solve_exact(s: &Scenario, limits: OracleLimits) -> Result<ExactResult> {
    let start = Instant::now();
    let mut best: Option<(f64, Route)> = None;
    let mut count = 0u64;
    let mut proven = true;
    let mut failures = 0usize;
    for seq in enumerate_feasible_sequences(s) {
        let over_time = limits.time_cap.is_some_and(|c| start.elapsed() >= c);
        let over_budget = limits.max_sequences.is_some_and(|m| count >= m);
        if (over_time || over_budget) && best.is_some() {
            proven = false;
            break;
        }
        count += 1;
        match solve_placement(&build_placement(&seq, s)) {
            Ok(pl) => {
                if best.as_ref().is_none_or(|b| pl.cost < b.0) {
                    best = Some((pl.cost, pl.route));
                }
            }
            Err(e) => {
                log::warn!("oracle placement failed for {seq:?}: {e}");
                failures += 1;
            }
        }
    }
    if failures > 0 {
        proven = false;
    }
    let (cost, route) = match best {
        Some(b) => b,
        None if count == 0 => return Err(SwError::InfeasiblePattern),
        None => return Err(SwError::NonConvergence(s.config.max_iterations)),
    };
    Ok(ExactResult { cost, sequence: route.sequence.clone(), points: route.points.clone(), route, proven, sequences: count })
}

/// Best visit order for fixed routing points, costed without departure waits.
pub fn best_sequence_fixed_points(points: &[Point], s: &Scenario) -> Result<(Vec<usize>, f64)> {
    let mut best: Option<(Vec<usize>, f64)> = None;
    for seq in enumerate_feasible_sequences(s) {
        let c = realize_route(&seq, points, s, Timing::Travel).cost.total;
        if best.as_ref().is_none_or(|b| c < b.1) {
            best = Some((seq, c));
        }
    }
    best.ok_or(SwError::InfeasiblePattern)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::altmin;
    use crate::constraints::check_sequence;
    use crate::geometry::area_centroid;
    use crate::model::*;
    use crate::phase1::solve_sequence;
    use crate::phase2::brute_place;
    use crate::synth::{random_scenario, SynthSpec};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn naive_count(s: &Scenario) -> u64 {
        let n = s.num_clusters();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut count = 0;
        heap_permutations(&mut perm, n, &mut |p| {
            if check_sequence(p, s).is_empty() {
                count += 1;
            }
        });
        count
    }

    fn heap_permutations(v: &mut [usize], k: usize, f: &mut dyn FnMut(&[usize])) {
        if k <= 1 {
            f(v);
            return;
        }
        for i in 0..k - 1 {
            heap_permutations(v, k - 1, f);
            if k.is_multiple_of(2) { v.swap(i, k - 1) } else { v.swap(0, k - 1) }
        }
        heap_permutations(v, k - 1, f);
    }

    fn collinear(capacity: usize, mps: usize) -> Scenario {
        let req = |id: u32, p: f64, d: f64| RideRequest {
            id,
            pickup: Point::new(p, 0.0),
            dropoff: Point::new(d, 0.0),
            r_pickup: 0.0,
            r_dropoff: 0.0,
            t_request: 0.0,
        };
        Scenario::new(
            Point::default(),
            0.0,
            vec![req(1, 1.0, 2.0), req(2, 3.0, 4.0)],
            None,
            VehicleParams { shuttle_speed: 2.0, walk_speed: 1.0, service_time: 5.0, acceleration: f64::INFINITY },
            SolverConfig { gamma2: 0.0, capacity, mps_pickup: mps, mps_dropoff: mps, ..Default::default() },
            CarryOver::default(),
        )
        .unwrap()
    }

    #[test]
    fn small_counts() {
        let one = random_scenario(&SynthSpec { n: 1, clusters: 2, seed: 1, ..Default::default() }).unwrap();
        assert_eq!(count_feasible_sequences(&one), 1);
        assert_eq!(count_feasible_sequences(&collinear(2, 2)), 6);
        assert_eq!(count_feasible_sequences(&collinear(1, 2)), 2);
    }

    #[test]
    fn enumeration_is_lexicographic_and_unique() {
        let s = random_scenario(&SynthSpec { n: 3, clusters: 6, seed: 4, ..Default::default() }).unwrap();
        let all: Vec<_> = enumerate_feasible_sequences(&s).collect();
        assert_eq!(all.len(), 90);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn collinear_exact_cost() {
        let s = collinear(2, 2);
        let r = solve_exact(&s, OracleLimits::default()).unwrap();
        assert!(r.proven);
        assert_eq!(r.sequences, 6);
        assert_relative_eq!(r.cost, 4.0 / 2.0 + 4.0 * 5.0, max_relative = 1e-12);
    }

    #[test]
    fn single_request_matches_placer() {
        let s = random_scenario(&SynthSpec { n: 1, clusters: 2, seed: 9, ..Default::default() }).unwrap();
        let r = solve_exact(&s, OracleLimits::default()).unwrap();
        let pl = solve_placement(&build_placement(&[0, 1], &s)).unwrap();
        assert_eq!(r.cost, pl.cost);
        assert_eq!(r.sequence, vec![0, 1]);
    }

    #[test]
    fn budget_stops_early() {
        let s = random_scenario(&SynthSpec { n: 3, clusters: 6, seed: 4, ..Default::default() }).unwrap();
        let r = solve_exact(&s, OracleLimits { max_sequences: Some(5), ..Default::default() }).unwrap();
        assert!(!r.proven);
        assert_eq!(r.sequences, 5);
    }

    #[test]
    fn exact_beats_sampled_grid_placements() {
        let s = random_scenario(&SynthSpec { n: 1, clusters: 2, seed: 5, ..Default::default() }).unwrap();
        let r = solve_exact(&s, OracleLimits::default()).unwrap();
        for seq in enumerate_feasible_sequences(&s) {
            let (_, c) = brute_place(&build_placement(&seq, &s), 1e-2 * s.requests[0].r_pickup).unwrap();
            assert!(r.cost <= c + 1e-9 * c);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn enumeration_matches_naive_filter(seed in 0u64..10_000, n in 1usize..=3, cap in 1usize..=3, mps in 1usize..=3) {
            let cfg = SolverConfig { capacity: cap, mps_pickup: mps, mps_dropoff: mps, ..Default::default() };
            let s = random_scenario(&SynthSpec { n, clusters: 2 * n, seed, config: cfg, ..Default::default() });
            if let Ok(s) = s {
                for seq in enumerate_feasible_sequences(&s) {
                    prop_assert!(check_sequence(&seq, &s).is_empty());
                }
                prop_assert_eq!(count_feasible_sequences(&s), naive_count(&s));
            }
        }

        #[test]
        fn fixed_point_search_matches_sequencer(seed in 0u64..10_000, n in 1usize..=4) {
            let s = random_scenario(&SynthSpec { n, clusters: 2 * n, seed, ..Default::default() }).unwrap();
            let pts: Vec<Point> = s.areas.iter().map(area_centroid).collect();
            let (_, brute) = best_sequence_fixed_points(&pts, &s).unwrap();
            let dp = solve_sequence(&pts, &s).unwrap().cost;
            prop_assert!((brute - dp).abs() <= 1e-9 * brute);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        #[test]
        fn exact_never_worse_than_altmin(seed in 0u64..10_000) {
            let s = random_scenario(&SynthSpec { n: 3, clusters: 5, seed, ..Default::default() }).unwrap();
            let e = solve_exact(&s, OracleLimits::default()).unwrap();
            let a = altmin::solve(&s).unwrap();
            prop_assert!(e.proven);
            prop_assert!(e.cost <= a.cost + 1e-7 * a.cost);
        }
    }
}
