//! Replanning an in-flight route when new requests arrive.
//!
//! Executed stops are kept, passengers already on board only need a drop-off,
//! and every assigned but not yet picked up passenger keeps the pickup point
//! agreed earlier.

use crate::altmin::{self, SolveResult};
use crate::error::{Result, SwError};
use crate::geometry::Point;
use crate::model::{
    Boarded, CarryOver, Cluster, ClusteringPattern, CostBreakdown, Event, EventKind, RideRequest, Route, Scenario,
    SolverConfig, Units, VehicleDoc, VehicleParams,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// A stop of an executed or planned schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanStop {
    pub point: Point,
    pub arrival: f64,
    pub departure: f64,
    pub pickups: Vec<u32>,
    pub dropoffs: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetSnapshot {
    pub t_now: f64,
    pub position: Point,
    /// Earliest time the shuttle can leave `position` under a new plan.
    pub free_at: f64,
    /// True when the shuttle was caught between two stops.
    pub mid_segment: bool,
    pub onboard: BTreeMap<u32, Boarded>,
    /// Passengers assigned a pickup point that has not been served yet.
    pub assigned: BTreeMap<u32, Point>,
    pub served: Vec<u32>,
    pub executed: Vec<PlanStop>,
    /// Clusters of the route's scenario that are still to be visited.
    pub remaining: Vec<usize>,
    pub pickups_done: usize,
    pub dropoffs_done: usize,
    pub last_id: u32,
}

fn plan_stop(s: &Scenario, cluster: usize, point: Point, arrival: f64, departure: f64) -> PlanStop {
    let ev = &s.pattern.clusters[cluster].events;
    let of = |k: EventKind| ev.iter().filter(|e| e.kind == k).map(|e| e.passenger).collect();
    PlanStop { point, arrival, departure, pickups: of(EventKind::Pickup), dropoffs: of(EventKind::Dropoff) }
}

/// State of the shuttle and its passengers at `t_now` while following `route`.
///
/// A stop counts as executed once the shuttle has arrived there.
pub fn snapshot_at(route: &Route, s: &Scenario, t_now: f64) -> FleetSnapshot {
    let mut executed = Vec::new();
    let (mut prev_p, mut prev_dep) = (route.start, route.start_time);
    for stop in route.timeline.iter().take_while(|st| st.arrival <= t_now) {
        executed.push(plan_stop(s, stop.cluster, stop.point, stop.arrival, stop.departure));
        prev_p = stop.point;
        prev_dep = stop.departure;
    }
    let k = executed.len();
    let (position, free_at, mid_segment) = if t_now <= prev_dep || k == route.timeline.len() {
        (prev_p, prev_dep.max(t_now), false)
    } else {
        let next = route.timeline[k].point;
        let d = prev_p.dist(next);
        let frac = if d > 0.0 { ((t_now - prev_dep) * s.vehicle.shuttle_speed / d).clamp(0.0, 1.0) } else { 1.0 };
        (prev_p + (next - prev_p) * frac, t_now, true)
    };

    let done: Vec<bool> = {
        let mut v = vec![false; s.num_clusters()];
        for st in &route.timeline[..k] {
            v[st.cluster] = true;
        }
        v
    };
    let dep_of = |c: usize| route.timeline.iter().find(|st| st.cluster == c).expect("visited");
    let mut onboard = BTreeMap::new();
    let mut assigned = BTreeMap::new();
    let mut served = Vec::new();
    for r in &s.requests {
        let cd = s.pattern.cluster_of(Event::dropoff(r.id)).expect("dropoff");
        if done[cd] {
            served.push(r.id);
            continue;
        }
        match s.carry.onboard.get(&r.id) {
            Some(b) => {
                onboard.insert(r.id, *b);
            }
            None => {
                let cp = s.pattern.cluster_of(Event::pickup(r.id)).expect("pickup");
                let stop = dep_of(cp);
                if done[cp] {
                    onboard.insert(r.id, Boarded { pickup_time: stop.departure, pickup_point: stop.point });
                } else {
                    let p = s.carry.frozen.get(&r.id).copied().unwrap_or(stop.point);
                    assigned.insert(r.id, p);
                }
            }
        }
    }
    let picked: usize = executed.iter().map(|e| e.pickups.len()).sum();
    let dropped: usize = executed.iter().map(|e| e.dropoffs.len()).sum();
    FleetSnapshot {
        t_now,
        position,
        free_at,
        mid_segment,
        onboard,
        assigned,
        served,
        executed,
        remaining: route.timeline[k..].iter().map(|st| st.cluster).collect(),
        pickups_done: s.carry.pickups_done + picked,
        dropoffs_done: s.carry.dropoffs_done + dropped,
        last_id: s.requests.last().map_or(s.carry.pickups_done as u32, |r| r.id),
    }
}

/// Unvisited clusters of the current plan followed by `fragment` (or one cluster per
/// event when no fragment is given) for the new requests.
pub fn retained_pattern(
    snap: &FleetSnapshot,
    s: &Scenario,
    new_requests: &[RideRequest],
    fragment: Option<&ClusteringPattern>,
) -> ClusteringPattern {
    let mut remaining = snap.remaining.clone();
    remaining.sort_unstable();
    let mut clusters: Vec<Cluster> = remaining.iter().map(|&c| s.pattern.clusters[c].clone()).collect();
    match fragment {
        Some(f) => clusters.extend(f.clusters.iter().cloned()),
        None => {
            let ids: Vec<u32> = new_requests.iter().map(|r| r.id).collect();
            clusters.extend(ClusteringPattern::trivial(&ids, &BTreeMap::new()).clusters);
        }
    }
    ClusteringPattern::new(clusters)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replan {
    /// Static scenario solved at the replan, `None` when nothing was left to serve.
    pub scenario: Option<Scenario>,
    pub solution: Option<SolveResult>,
    /// Executed stops, the diversion point if any, then the new plan.
    pub plan: Vec<PlanStop>,
}

pub fn replan(
    snap: &FleetSnapshot,
    new_requests: &[RideRequest],
    pattern_update: Option<ClusteringPattern>,
    s: &Scenario,
) -> Result<Replan> {
    let mut last = snap.last_id;
    for r in new_requests {
        if r.id <= last {
            return Err(SwError::InvalidInput(format!("request id {} does not continue the numbering", r.id)));
        }
        last = r.id;
    }
    let mut plan = snap.executed.clone();
    if snap.mid_segment {
        plan.push(PlanStop { point: snap.position, arrival: snap.t_now, departure: snap.t_now, pickups: vec![], dropoffs: vec![] });
    }
    let requests: Vec<RideRequest> = s
        .requests
        .iter()
        .filter(|r| !snap.served.contains(&r.id))
        .chain(new_requests)
        .cloned()
        .collect();
    if requests.is_empty() {
        return Ok(Replan { scenario: None, solution: None, plan });
    }
    let pattern = pattern_update.unwrap_or_else(|| retained_pattern(snap, s, new_requests, None));
    let carry = CarryOver {
        onboard: snap.onboard.clone(),
        frozen: snap.assigned.clone(),
        pickups_done: snap.pickups_done,
        dropoffs_done: snap.dropoffs_done,
    };
    let derived = Scenario::new(snap.position, snap.free_at, requests, Some(pattern), s.vehicle, s.config, carry)
        .map_err(|mut e| e.remove(0))?;
    let sol = altmin::solve(&derived)?;
    for (k, p) in &snap.assigned {
        let c = derived.pattern.cluster_of(Event::pickup(*k)).expect("pickup");
        debug_assert_eq!(sol.points[c], *p, "pickup point of {k} moved");
    }
    for st in &sol.route.timeline {
        plan.push(plan_stop(&derived, st.cluster, st.point, st.arrival, st.departure));
    }
    Ok(Replan { scenario: Some(derived), solution: Some(sol), plan })
}

/// Realized times of one passenger over a whole replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassengerRecord {
    pub id: u32,
    pub t_request: f64,
    pub pickup_point: Point,
    pub pickup_time: f64,
    pub dropoff_point: Point,
    pub dropoff_time: f64,
    pub walk_pickup: f64,
    pub walk_dropoff: f64,
}

/// Per-passenger records and system cost of a complete schedule.
pub fn schedule_cost(
    plan: &[PlanStop],
    requests: &[RideRequest],
    start_time: f64,
    vehicle: &VehicleParams,
    c: &SolverConfig,
) -> (Vec<PassengerRecord>, CostBreakdown) {
    let by_id: BTreeMap<u32, &RideRequest> = requests.iter().map(|r| (r.id, r)).collect();
    let mut pick: BTreeMap<u32, (Point, f64)> = BTreeMap::new();
    let mut recs = Vec::new();
    for st in plan {
        for &k in &st.pickups {
            pick.insert(k, (st.point, st.departure));
        }
        for &k in &st.dropoffs {
            let r = by_id[&k];
            let (pp, pt) = pick[&k];
            recs.push(PassengerRecord {
                id: k,
                t_request: r.t_request,
                pickup_point: pp,
                pickup_time: pt,
                dropoff_point: st.point,
                dropoff_time: st.departure,
                walk_pickup: pp.dist(r.pickup) / vehicle.walk_speed,
                walk_dropoff: st.point.dist(r.dropoff) / vehicle.walk_speed,
            });
        }
    }
    recs.sort_by_key(|r| r.id);
    let mut b = CostBreakdown { shuttle: plan.last().map_or(0.0, |st| st.departure - start_time), ..Default::default() };
    for r in &recs {
        b.wait += r.pickup_time - r.t_request;
        b.ride += r.dropoff_time - r.pickup_time;
        b.walk_pickup += r.walk_pickup;
        b.walk_dropoff += r.walk_dropoff;
    }
    b.total = c.gamma1 * b.shuttle
        + c.gamma2 * (c.alpha1 * b.wait + c.alpha2 * b.ride + c.alpha3_pickup * b.walk_pickup + c.alpha3_dropoff * b.walk_dropoff);
    (recs, b)
}

/// A batch of requests revealed at `time`, with an optional grouping of their events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Batch {
    pub time: f64,
    pub requests: Vec<RideRequest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clusters: Option<Vec<Vec<Event>>>,
}

/// Replay file: shuttle setup plus the batches in arrival order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayDoc {
    #[serde(default)]
    pub units: Option<Units>,
    pub depot: Point,
    #[serde(default)]
    pub start_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vehicle: Option<VehicleDoc>,
    #[serde(default)]
    pub config: SolverConfig,
    pub batches: Vec<Batch>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchOutcome {
    pub time: f64,
    /// Remaining plan before the batch was inserted.
    pub before: Vec<PlanStop>,
    /// Remaining plan after replanning.
    pub after: Vec<PlanStop>,
    pub position: Point,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayResult {
    pub batches: Vec<BatchOutcome>,
    pub plan: Vec<PlanStop>,
    pub passengers: Vec<PassengerRecord>,
    pub cost: CostBreakdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplayMode {
    /// Insert each batch into the running plan when it arrives.
    Dynamic,
    /// Hold each batch until the current plan is finished.
    Sequential,
}

impl ReplayDoc {
    /// Converts every batch to SI units.
    pub fn to_si(&self) -> Result<(Point, f64, VehicleParams, Vec<Batch>)> {
        let units = self.units.clone().unwrap_or_default();
        let len = Units::factor("length", &units.length)?;
        let tim = Units::factor("time", &units.time)?;
        let vehicle = units.vehicle(self.vehicle.as_ref())?;
        let batches = self
            .batches
            .iter()
            .map(|b| {
                Ok(Batch {
                    time: b.time * tim,
                    requests: b.requests.iter().map(|r| units.request(r)).collect::<Result<_>>()?,
                    clusters: b.clusters.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((self.depot * len, self.start_time * tim, vehicle, batches))
    }
}

pub fn replay(doc: &ReplayDoc, mode: ReplayMode) -> Result<ReplayResult> {
    let (depot, start_time, vehicle, batches) = doc.to_si()?;
    let config = doc.config;
    let Some(first) = batches.first() else {
        return Ok(ReplayResult { batches: vec![], plan: vec![], passengers: vec![], cost: CostBreakdown::default() });
    };
    let pattern_of = |b: &Batch| {
        b.clusters
            .as_ref()
            .map(|cs| ClusteringPattern::new(cs.iter().map(|e| Cluster { events: e.clone() }).collect()))
    };
    let t0 = start_time.max(first.time);
    let mut scenario = Scenario::new(depot, t0, first.requests.clone(), pattern_of(first), vehicle, config, CarryOver::default())
        .map_err(|mut e| e.remove(0))?;
    let sol = altmin::solve(&scenario)?;
    let mut route = sol.route.clone();
    let mut log: Vec<PlanStop> = Vec::new();
    let to_plan = |s: &Scenario, r: &Route| -> Vec<PlanStop> {
        r.timeline.iter().map(|st| plan_stop(s, st.cluster, st.point, st.arrival, st.departure)).collect()
    };
    let mut outcomes = vec![BatchOutcome {
        time: first.time,
        before: vec![],
        after: to_plan(&scenario, &route),
        position: depot,
        iterations: sol.hbar,
    }];
    let mut all_requests = first.requests.clone();
    let mut finished = false;
    for b in &batches[1..] {
        let end = route.timeline.last().map_or(route.start_time, |st| st.departure);
        let t_now = match mode {
            ReplayMode::Dynamic => b.time,
            ReplayMode::Sequential => b.time.max(end),
        };
        let snap = if finished {
            idle_snapshot(&route, &scenario, t_now)
        } else {
            snapshot_at(&route, &scenario, t_now)
        };
        let before = to_plan(&scenario, &route)[snap.executed.len()..].to_vec();
        let pattern = retained_pattern(&snap, &scenario, &b.requests, pattern_of(b).as_ref());
        let rp = replan(&snap, &b.requests, Some(pattern), &scenario)?;
        log.extend(snap.executed.iter().cloned());
        if snap.mid_segment {
            log.push(rp.plan[snap.executed.len()].clone());
        }
        all_requests.extend(b.requests.iter().cloned());
        match (rp.scenario, rp.solution) {
            (Some(s), Some(sol)) => {
                outcomes.push(BatchOutcome {
                    time: b.time,
                    before,
                    after: to_plan(&s, &sol.route),
                    position: snap.position,
                    iterations: sol.hbar,
                });
                scenario = s;
                route = sol.route;
                finished = false;
            }
            _ => {
                outcomes.push(BatchOutcome { time: b.time, before, after: vec![], position: snap.position, iterations: 0 });
                finished = true;
            }
        }
    }
    if !finished {
        log.extend(to_plan(&scenario, &route));
    }
    let (passengers, cost) = schedule_cost(&log, &all_requests, t0, &vehicle, &config);
    Ok(ReplayResult { batches: outcomes, plan: log, passengers, cost })
}

/// Snapshot of a shuttle whose plan has nothing left, parked where it last stopped.
fn idle_snapshot(route: &Route, s: &Scenario, t_now: f64) -> FleetSnapshot {
    let mut snap = snapshot_at(route, s, f64::INFINITY);
    snap.executed.clear();
    snap.t_now = t_now;
    snap.free_at = t_now.max(route.timeline.last().map_or(route.start_time, |st| st.departure));
    snap
}
