//! Domain types, unit handling, scenario ingestion and route costing.

use crate::error::{Result, SwError};
use crate::geometry::{area_nonempty, Area, Point, SpaceWindow, EPS_GEOM};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

pub const MPH: f64 = 0.44704;
pub const MILE: f64 = 1609.344;
/// Largest cluster count accepted by the subset DP.
pub const MAX_CLUSTERS: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RideRequest {
    pub id: u32,
    pub pickup: Point,
    pub dropoff: Point,
    pub r_pickup: f64,
    pub r_dropoff: f64,
    pub t_request: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Pickup,
    Dropoff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Event {
    pub kind: EventKind,
    pub passenger: u32,
}

impl Event {
    pub fn pickup(k: u32) -> Self {
        Event { kind: EventKind::Pickup, passenger: k }
    }

    pub fn dropoff(k: u32) -> Self {
        Event { kind: EventKind::Dropoff, passenger: k }
    }

    /// Parses references such as `p3` or `d1`.
    pub fn parse(s: &str) -> Option<Event> {
        let s = s.trim();
        let (kind, rest) = match s.chars().next()? {
            'p' | 'P' => (EventKind::Pickup, &s[1..]),
            'd' | 'D' => (EventKind::Dropoff, &s[1..]),
            _ => return None,
        };
        let passenger = rest.parse().ok()?;
        Some(Event { kind, passenger })
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            EventKind::Pickup => write!(f, "p{}", self.passenger),
            EventKind::Dropoff => write!(f, "d{}", self.passenger),
        }
    }
}

impl Serialize for Event {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Event {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Event::parse(&s).ok_or_else(|| serde::de::Error::custom(format!("bad event reference {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub events: Vec<Event>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ClusterLoads {
    pub pickups: usize,
    pub dropoffs: usize,
}

impl ClusterLoads {
    pub fn net(&self) -> i64 {
        self.pickups as i64 - self.dropoffs as i64
    }
}

/// Partition of the outstanding events into clusters, indexed from 0.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClusteringPattern {
    pub clusters: Vec<Cluster>,
    pub event_index: BTreeMap<Event, usize>,
}

impl ClusteringPattern {
    pub fn new(clusters: Vec<Cluster>) -> Self {
        let mut event_index = BTreeMap::new();
        for (i, c) in clusters.iter().enumerate() {
            for e in &c.events {
                event_index.entry(*e).or_insert(i);
            }
        }
        ClusteringPattern { clusters, event_index }
    }

    /// One cluster per event: pickups of all passengers first, then drop-offs.
    pub fn trivial(ids: &[u32], onboard: &BTreeMap<u32, Boarded>) -> Self {
        let mut clusters = Vec::new();
        for &k in ids {
            if !onboard.contains_key(&k) {
                clusters.push(Cluster { events: vec![Event::pickup(k)] });
            }
        }
        for &k in ids {
            clusters.push(Cluster { events: vec![Event::dropoff(k)] });
        }
        ClusteringPattern::new(clusters)
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn cluster_of(&self, e: Event) -> Option<usize> {
        self.event_index.get(&e).copied()
    }
}

pub fn cluster_loads(pattern: &ClusteringPattern) -> Vec<ClusterLoads> {
    pattern
        .clusters
        .iter()
        .map(|c| {
            let pickups = c.events.iter().filter(|e| e.kind == EventKind::Pickup).count();
            ClusterLoads { pickups, dropoffs: c.events.len() - pickups }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    pub shuttle_speed: f64,
    pub walk_speed: f64,
    pub service_time: f64,
    pub acceleration: f64,
}

impl VehicleParams {
    /// Per-stop overhead: service time plus the acceleration correction.
    pub fn stop_overhead(&self) -> f64 {
        self.service_time + self.shuttle_speed / (2.0 * self.acceleration)
    }
}

impl Default for VehicleParams {
    fn default() -> Self {
        VehicleParams {
            shuttle_speed: 30.0 * MPH,
            walk_speed: 3.1 * MPH,
            service_time: 60.0,
            acceleration: 2.25 * MPH,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub gamma1: f64,
    pub gamma2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3_pickup: f64,
    pub alpha3_dropoff: f64,
    pub capacity: usize,
    pub mps_pickup: usize,
    pub mps_dropoff: usize,
    pub h_max: usize,
    pub eps_place: f64,
    pub eps_geom: f64,
    pub max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            gamma1: 1.0,
            gamma2: 1.0,
            alpha1: 2.0,
            alpha2: 1.0,
            alpha3_pickup: 0.1,
            alpha3_dropoff: 0.1,
            capacity: 6,
            mps_pickup: 6,
            mps_dropoff: 6,
            h_max: 50,
            eps_place: 1e-4,
            eps_geom: EPS_GEOM,
            max_iterations: 50_000,
        }
    }
}

/// A passenger already on the shuttle when the scenario starts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Boarded {
    pub pickup_time: f64,
    pub pickup_point: Point,
}

/// State inherited from an earlier plan; empty for a static scenario.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CarryOver {
    pub onboard: BTreeMap<u32, Boarded>,
    pub frozen: BTreeMap<u32, Point>,
    pub pickups_done: usize,
    pub dropoffs_done: usize,
}

impl CarryOver {
    pub fn is_empty(&self) -> bool {
        self.onboard.is_empty() && self.frozen.is_empty() && self.pickups_done == 0 && self.dropoffs_done == 0
    }
}

/// Per-cluster data the sequencing screens need repeatedly.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterInfo {
    pub loads: ClusterLoads,
    pub pickups: Vec<u32>,
    pub dropoffs: Vec<u32>,
    /// Clusters that must be visited first (pickups of the drop-offs held here).
    pub prereq: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub depot: Point,
    pub start_time: f64,
    pub requests: Vec<RideRequest>,
    pub pattern: ClusteringPattern,
    pub vehicle: VehicleParams,
    pub config: SolverConfig,
    pub carry: CarryOver,
    pub areas: Vec<Area>,
    pub info: Vec<ClusterInfo>,
}

impl Scenario {
    /// Validates the parts and assembles a scenario; all problems are reported together.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn new(
        depot: Point,
        start_time: f64,
        requests: Vec<RideRequest>,
        pattern: Option<ClusteringPattern>,
        vehicle: VehicleParams,
        config: SolverConfig,
        carry: CarryOver,
    ) -> std::result::Result<Scenario, Vec<SwError>> {
        let mut errs = Vec::new();
        for (name, v) in [
            ("shuttle_speed", vehicle.shuttle_speed),
            ("walk_speed", vehicle.walk_speed),
            ("acceleration", vehicle.acceleration),
        ] {
            if !(v > 0.0) {
                errs.push(SwError::NonPositiveSpeed(name));
            }
        }
        if !(vehicle.service_time >= 0.0) {
            errs.push(SwError::InvalidInput("service_time must be nonnegative".into()));
        }
        let weights = [
            config.gamma1,
            config.gamma2,
            config.alpha1,
            config.alpha2,
            config.alpha3_pickup,
            config.alpha3_dropoff,
        ];
        if weights.iter().any(|w| !(*w >= 0.0)) {
            errs.push(SwError::InvalidInput("cost weights must be nonnegative".into()));
        }
        if config.capacity == 0 {
            errs.push(SwError::InvalidInput("capacity must be at least 1".into()));
        }
        if config.mps_pickup == 0 || config.mps_dropoff == 0 || config.h_max == 0 {
            errs.push(SwError::InvalidInput("position-shift bounds and h_max must be positive".into()));
        }
        if config.capacity > 15 {
            log::warn!("capacity {} exceeds 15; the subset DP may grow large", config.capacity);
        }

        for r in &requests {
            if r.r_pickup < 0.0 || r.r_dropoff < 0.0 {
                errs.push(SwError::NegativeRadius(r.id));
            }
        }
        for w in requests.windows(2) {
            if w[1].id <= w[0].id || w[1].t_request < w[0].t_request {
                errs.push(SwError::InvalidInput(format!(
                    "requests must be ordered by request time with increasing ids (at id {})",
                    w[1].id
                )));
            }
        }
        if requests.iter().any(|r| r.id == 0) {
            errs.push(SwError::InvalidInput("request ids start at 1".into()));
        }
        if carry.is_empty() {
            for (i, r) in requests.iter().enumerate() {
                if r.id as usize != i + 1 {
                    errs.push(SwError::InvalidInput(format!("request ids must be 1..n; found {} at position {}", r.id, i + 1)));
                    break;
                }
            }
        }
        for r in &requests {
            let boarded = carry.onboard.contains_key(&r.id);
            if !boarded && r.pickup.dist(r.dropoff) <= r.r_pickup + r.r_dropoff {
                errs.push(SwError::InvalidInput(format!(
                    "request {}: pickup and drop-off windows overlap, walking dominates",
                    r.id
                )));
            }
        }
        let ids: Vec<u32> = requests.iter().map(|r| r.id).collect();
        for k in carry.onboard.keys().chain(carry.frozen.keys()) {
            if !ids.contains(k) {
                errs.push(SwError::InvalidInput(format!("carried-over passenger {k} has no request")));
            }
        }
        for (k, p) in &carry.frozen {
            if carry.onboard.contains_key(k) {
                errs.push(SwError::InvalidInput(format!("passenger {k} is both onboard and awaiting pickup")));
            }
            if let Some(r) = requests.iter().find(|r| r.id == *k) {
                if p.dist(r.pickup) > r.r_pickup + EPS_GEOM {
                    errs.push(SwError::InvalidInput(format!("frozen pickup of {k} lies outside its window")));
                }
            }
        }
        if carry.onboard.len() > config.capacity {
            errs.push(SwError::InvalidInput("more passengers onboard than seats".into()));
        }
        if !errs.is_empty() {
            return Err(errs);
        }

        let pattern = pattern.unwrap_or_else(|| ClusteringPattern::trivial(&ids, &carry.onboard));
        let mut seen = BTreeMap::new();
        for (ci, c) in pattern.clusters.iter().enumerate() {
            if c.events.is_empty() {
                errs.push(SwError::InvalidInput(format!("cluster {} is empty", ci + 1)));
            }
            for e in &c.events {
                if seen.insert(*e, ci).is_some() {
                    errs.push(SwError::DuplicateEvent(e.to_string()));
                }
                let known = ids.contains(&e.passenger);
                let expected = known && !(e.kind == EventKind::Pickup && carry.onboard.contains_key(&e.passenger));
                if !expected {
                    errs.push(SwError::InvalidInput(format!("event {e} does not belong to this scenario")));
                }
            }
            for e in &c.events {
                if e.kind == EventKind::Pickup && c.events.contains(&Event::dropoff(e.passenger)) {
                    errs.push(SwError::SameClusterPickupDropoff { cluster: ci + 1, request: e.passenger });
                }
            }
        }
        for &k in &ids {
            if !carry.onboard.contains_key(&k) && !seen.contains_key(&Event::pickup(k)) {
                errs.push(SwError::MissingEvent(Event::pickup(k).to_string()));
            }
            if !seen.contains_key(&Event::dropoff(k)) {
                errs.push(SwError::MissingEvent(Event::dropoff(k).to_string()));
            }
        }
        if pattern.len() > MAX_CLUSTERS {
            errs.push(SwError::InvalidInput(format!(
                "{} clusters exceed the supported maximum of {MAX_CLUSTERS}",
                pattern.len()
            )));
        }
        if !errs.is_empty() {
            return Err(errs);
        }

        let by_id: BTreeMap<u32, &RideRequest> = requests.iter().map(|r| (r.id, r)).collect();
        let mut areas = Vec::with_capacity(pattern.len());
        for (ci, c) in pattern.clusters.iter().enumerate() {
            let disks: Vec<SpaceWindow> = c
                .events
                .iter()
                .map(|e| {
                    let r = by_id[&e.passenger];
                    match e.kind {
                        EventKind::Pickup => match carry.frozen.get(&e.passenger) {
                            Some(p) => SpaceWindow::new(*p, 0.0),
                            None => SpaceWindow::new(r.pickup, r.r_pickup),
                        },
                        EventKind::Dropoff => SpaceWindow::new(r.dropoff, r.r_dropoff),
                    }
                })
                .collect();
            if !area_nonempty(&disks) {
                let frozen = c
                    .events
                    .iter()
                    .find(|e| e.kind == EventKind::Pickup && carry.frozen.contains_key(&e.passenger));
                match frozen {
                    Some(e) => errs.push(SwError::FrozenPointConflict { request: e.passenger, cluster: ci + 1 }),
                    None => errs.push(SwError::EmptyArea(ci + 1)),
                }
            }
            areas.push(Area::new(disks));
        }
        if !errs.is_empty() {
            return Err(errs);
        }

        let loads = cluster_loads(&pattern);
        let info = pattern
            .clusters
            .iter()
            .zip(loads)
            .map(|(c, loads)| {
                let mut pickups: Vec<u32> = c.events.iter().filter(|e| e.kind == EventKind::Pickup).map(|e| e.passenger).collect();
                let mut dropoffs: Vec<u32> = c.events.iter().filter(|e| e.kind == EventKind::Dropoff).map(|e| e.passenger).collect();
                pickups.sort_unstable();
                dropoffs.sort_unstable();
                let prereq = dropoffs
                    .iter()
                    .filter_map(|k| pattern.cluster_of(Event::pickup(*k)))
                    .fold(0u64, |m, i| m | (1u64 << i));
                ClusterInfo { loads, pickups, dropoffs, prereq }
            })
            .collect();

        Ok(Scenario { depot, start_time, requests, pattern, vehicle, config, carry, areas, info })
    }

    pub fn n(&self) -> usize {
        self.requests.len()
    }

    pub fn num_clusters(&self) -> usize {
        self.pattern.len()
    }

    pub fn stop_overhead(&self) -> f64 {
        self.vehicle.stop_overhead()
    }

    pub fn request(&self, id: u32) -> &RideRequest {
        let i = self.requests.binary_search_by_key(&id, |r| r.id).expect("known request id");
        &self.requests[i]
    }

    pub fn request_index(&self, id: u32) -> usize {
        self.requests.binary_search_by_key(&id, |r| r.id).expect("known request id")
    }

    /// Passengers still waiting for pickup at the start.
    pub fn waiting_count(&self) -> usize {
        self.n() - self.carry.onboard.len()
    }

    /// Per-position weights `γ1 + γ2(α1 g1 + α2 g2)` for a visit order.
    pub fn position_weights(&self, seq: &[usize]) -> Vec<f64> {
        let c = &self.config;
        let mut waiting = self.waiting_count() as f64;
        let mut riding = self.carry.onboard.len() as f64;
        seq.iter()
            .map(|&i| {
                let w = c.gamma1 + c.gamma2 * (c.alpha1 * waiting + c.alpha2 * riding);
                let l = self.info[i].loads;
                waiting -= l.pickups as f64;
                riding += l.net() as f64;
                w
            })
            .collect()
    }

    /// Cost terms that do not depend on the visit order, given routing points.
    pub fn order_free_cost(&self, points: &[Point]) -> f64 {
        let c = &self.config;
        let vp = self.vehicle.walk_speed;
        let mut total = 0.0;
        for r in &self.requests {
            let walk_d = points[self.pattern.cluster_of(Event::dropoff(r.id)).expect("dropoff")].dist(r.dropoff) / vp;
            total += c.alpha3_dropoff * walk_d;
            match self.carry.onboard.get(&r.id) {
                Some(b) => {
                    total += c.alpha1 * (b.pickup_time - r.t_request)
                        + c.alpha2 * (self.start_time - b.pickup_time)
                        + c.alpha3_pickup * b.pickup_point.dist(r.pickup) / vp;
                }
                None => {
                    let walk_p = points[self.pattern.cluster_of(Event::pickup(r.id)).expect("pickup")].dist(r.pickup) / vp;
                    total += c.alpha1 * (self.start_time - r.t_request) + c.alpha3_pickup * walk_p;
                }
            }
        }
        c.gamma2 * total
    }
}

/// Which timeline to build for a sequence and routing points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timing {
    /// Depart each stop as soon as the service overhead elapses.
    Travel,
    /// Insert the cheapest waits that let every walking passenger board.
    Departure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stop {
    pub cluster: usize,
    pub point: Point,
    pub travel: f64,
    pub arrival: f64,
    pub wait: f64,
    pub departure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassengerTimes {
    pub id: u32,
    pub wait: f64,
    pub ride: f64,
    pub walk_pickup: f64,
    pub walk_dropoff: f64,
    pub pickup_position: usize,
    pub dropoff_position: usize,
    pub pickup_time: f64,
    pub dropoff_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub shuttle: f64,
    pub wait: f64,
    pub ride: f64,
    pub walk_pickup: f64,
    pub walk_dropoff: f64,
    pub total: f64,
}

/// A timed route. `sequence` and `Stop::cluster` use 0-based cluster indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub start: Point,
    pub start_time: f64,
    pub sequence: Vec<usize>,
    pub points: Vec<Point>,
    pub timeline: Vec<Stop>,
    pub passengers: Vec<PassengerTimes>,
    pub cost: CostBreakdown,
}

impl Route {
    /// Position of each cluster in the visit order (the inverse permutation).
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.sequence.len()];
        for (j, &c) in self.sequence.iter().enumerate() {
            pos[c] = j;
        }
        pos
    }
}

/// Earliest-service travel times and passenger-ready times per position.
fn legs(seq: &[usize], points: &[Point], s: &Scenario) -> (Vec<f64>, Vec<f64>) {
    let vs = s.vehicle.shuttle_speed;
    let vp = s.vehicle.walk_speed;
    let mut prev = s.depot;
    let mut travel = Vec::with_capacity(seq.len());
    let mut ready = Vec::with_capacity(seq.len());
    for &c in seq {
        let p = points[c];
        travel.push(prev.dist(p) / vs);
        prev = p;
        let r = s.info[c]
            .pickups
            .iter()
            .map(|&k| {
                let q = s.request(k);
                q.t_request + p.dist(q.pickup) / vp
            })
            .fold(f64::NEG_INFINITY, f64::max);
        ready.push(r);
    }
    (travel, ready)
}

/// Optimal waits for fixed travel legs: each deficit is covered at the cheapest
/// position seen so far (latest among equals).
pub fn optimal_waits(weights: &[f64], travel: &[f64], ready: &[f64], start_time: f64, overhead: f64) -> Vec<f64> {
    let mut waits = vec![0.0; weights.len()];
    let mut clock = start_time;
    let mut covered = 0.0;
    let mut cheapest = 0usize;
    for i in 0..weights.len() {
        if weights[i] <= weights[cheapest] {
            cheapest = i;
        }
        clock += travel[i] + overhead;
        let need = ready[i] - clock;
        if need > covered {
            waits[cheapest] += need - covered;
            covered = need;
        }
    }
    waits
}

/// Builds the timeline for a sequence and routing points and costs it.
pub fn realize_route(seq: &[usize], points: &[Point], s: &Scenario, timing: Timing) -> Route {
    let ta = s.stop_overhead();
    let (travel, ready) = legs(seq, points, s);
    let waits = match timing {
        Timing::Travel => vec![0.0; seq.len()],
        Timing::Departure => optimal_waits(&s.position_weights(seq), &travel, &ready, s.start_time, ta),
    };
    let mut t = s.start_time;
    let timeline: Vec<Stop> = seq
        .iter()
        .enumerate()
        .map(|(j, &c)| {
            let arrival = t + travel[j];
            t = arrival + ta + waits[j];
            Stop { cluster: c, point: points[c], travel: travel[j], arrival, wait: waits[j], departure: t }
        })
        .collect();
    let mut route = Route {
        start: s.depot,
        start_time: s.start_time,
        sequence: seq.to_vec(),
        points: points.to_vec(),
        timeline,
        passengers: Vec::new(),
        cost: CostBreakdown::default(),
    };
    let (passengers, cost) = cost_of(&route, s).expect("self-built timeline is consistent");
    route.passengers = passengers;
    route.cost = cost;
    route
}

fn cost_of(route: &Route, s: &Scenario) -> Result<(Vec<PassengerTimes>, CostBreakdown)> {
    let n_c = s.num_clusters();
    if route.sequence.len() != n_c || route.timeline.len() != n_c || route.points.len() != n_c {
        return Err(SwError::InconsistentTimings("route does not cover every cluster once".into()));
    }
    let mut seen = vec![false; n_c];
    for &c in &route.sequence {
        if c >= n_c || std::mem::replace(&mut seen[c], true) {
            return Err(SwError::InconsistentTimings("sequence is not a permutation".into()));
        }
    }
    let vs = s.vehicle.shuttle_speed;
    let vp = s.vehicle.walk_speed;
    let ta = s.stop_overhead();
    let mut prev_t = route.start_time;
    let mut prev_p = route.start;
    for (j, (stop, &c)) in route.timeline.iter().zip(&route.sequence).enumerate() {
        let earliest = prev_t + prev_p.dist(route.points[c]) / vs + ta;
        let tol = 1e-9 * (1.0 + earliest.abs());
        if stop.cluster != c || stop.departure < earliest - tol {
            return Err(SwError::InconsistentTimings(format!(
                "departure at position {} precedes arrival plus service",
                j + 1
            )));
        }
        prev_t = stop.departure;
        prev_p = route.points[c];
    }
    let pos = route.positions();
    let dep = |c: usize| route.timeline[pos[c]].departure;
    let cfg = &s.config;
    let mut b = CostBreakdown { shuttle: prev_t - route.start_time, ..Default::default() };
    let mut out = Vec::with_capacity(s.n());
    for r in &s.requests {
        let cd = s.pattern.cluster_of(Event::dropoff(r.id)).expect("dropoff event");
        let (pick_time, pick_point, pick_pos) = match s.carry.onboard.get(&r.id) {
            Some(bd) => (bd.pickup_time, bd.pickup_point, 0),
            None => {
                let cp = s.pattern.cluster_of(Event::pickup(r.id)).expect("pickup event");
                (dep(cp), route.points[cp], pos[cp] + 1)
            }
        };
        let drop_time = dep(cd);
        let p = PassengerTimes {
            id: r.id,
            wait: pick_time - r.t_request,
            ride: drop_time - pick_time,
            walk_pickup: pick_point.dist(r.pickup) / vp,
            walk_dropoff: route.points[cd].dist(r.dropoff) / vp,
            pickup_position: pick_pos,
            dropoff_position: pos[cd] + 1,
            pickup_time: pick_time,
            dropoff_time: drop_time,
        };
        b.wait += p.wait;
        b.ride += p.ride;
        b.walk_pickup += p.walk_pickup;
        b.walk_dropoff += p.walk_dropoff;
        out.push(p);
    }
    b.total = cfg.gamma1 * b.shuttle
        + cfg.gamma2
            * (cfg.alpha1 * b.wait + cfg.alpha2 * b.ride + cfg.alpha3_pickup * b.walk_pickup + cfg.alpha3_dropoff * b.walk_dropoff);
    Ok((out, b))
}

/// Recomputes the cost of a timed route from its points and departure times.
pub fn evaluate_cost(route: &Route, s: &Scenario) -> Result<CostBreakdown> {
    cost_of(route, s).map(|(_, c)| c)
}

/// Per-passenger breakdown for a timed route.
pub fn passenger_times(route: &Route, s: &Scenario) -> Result<Vec<PassengerTimes>> {
    cost_of(route, s).map(|(p, _)| p)
}

/// Length, speed, time and acceleration units of a scenario document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Units {
    pub length: String,
    pub speed: String,
    pub time: String,
    pub acceleration: String,
}

impl Default for Units {
    fn default() -> Self {
        Units { length: "m".into(), speed: "m/s".into(), time: "s".into(), acceleration: "m/s2".into() }
    }
}

impl Units {
    pub fn factor(kind: &str, unit: &str) -> Result<f64> {
        let f = match (kind, unit) {
            ("length", "m") => 1.0,
            ("length", "km") => 1000.0,
            ("length", "mi" | "mile") => MILE,
            ("length", "ft") => 0.3048,
            ("speed", "m/s") => 1.0,
            ("speed", "km/h") => 1000.0 / 3600.0,
            ("speed", "mph") => MPH,
            ("time", "s") => 1.0,
            ("time", "min") => 60.0,
            ("time", "h") => 3600.0,
            ("acceleration", "m/s2" | "m/s^2") => 1.0,
            ("acceleration", "mph/s") => MPH,
            ("acceleration", "km/h/s") => 1000.0 / 3600.0,
            _ => return Err(SwError::InvalidInput(format!("unknown {kind} unit {unit:?}"))),
        };
        Ok(f)
    }

    /// A request with lengths and times converted to meters and seconds.
    pub fn request(&self, r: &RideRequest) -> Result<RideRequest> {
        let len = Units::factor("length", &self.length)?;
        let tim = Units::factor("time", &self.time)?;
        Ok(RideRequest {
            id: r.id,
            pickup: r.pickup * len,
            dropoff: r.dropoff * len,
            r_pickup: r.r_pickup * len,
            r_dropoff: r.r_dropoff * len,
            t_request: r.t_request * tim,
        })
    }

    /// Vehicle parameters in SI, with fleet defaults for missing fields.
    pub fn vehicle(&self, doc: Option<&VehicleDoc>) -> Result<VehicleParams> {
        let vd = doc.cloned().unwrap_or_default();
        let dv = VehicleParams::default();
        let spd = Units::factor("speed", &self.speed)?;
        let tim = Units::factor("time", &self.time)?;
        let acc = Units::factor("acceleration", &self.acceleration)?;
        Ok(VehicleParams {
            shuttle_speed: vd.shuttle_speed.map_or(dv.shuttle_speed, |v| v * spd),
            walk_speed: vd.walk_speed.map_or(dv.walk_speed, |v| v * spd),
            service_time: vd.service_time.map_or(dv.service_time, |v| v * tim),
            acceleration: vd.acceleration.map_or(dv.acceleration, |v| v * acc),
        })
    }
}

/// Vehicle block of a scenario document; missing fields take the fleet defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shuttle_speed: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub walk_speed: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub service_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acceleration: Option<f64>,
}

/// Raw scenario as read from JSON, before unit conversion and validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDoc {
    #[serde(default)]
    pub units: Option<Units>,
    pub depot: Point,
    #[serde(default)]
    pub start_time: f64,
    pub requests: Vec<RideRequest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clusters: Option<Vec<Vec<Event>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vehicle: Option<VehicleDoc>,
    #[serde(default)]
    pub config: SolverConfig,
    #[serde(default, skip_serializing_if = "CarryOver::is_empty")]
    pub state: CarryOver,
}

impl ScenarioDoc {
    /// Converts to SI and validates.
    pub fn into_scenario(self) -> std::result::Result<Scenario, Vec<SwError>> {
        let units = self.units.clone().unwrap_or_default();
        let conv = |kind: &str, u: &str| Units::factor(kind, u).map_err(|e| vec![e]);
        let len = conv("length", &units.length)?;
        let tim = conv("time", &units.time)?;
        let vehicle = units.vehicle(self.vehicle.as_ref()).map_err(|e| vec![e])?;
        let requests = self.requests.iter().map(|r| units.request(r)).collect::<Result<Vec<_>>>().map_err(|e| vec![e])?;
        let pattern = self
            .clusters
            .map(|cs| ClusteringPattern::new(cs.into_iter().map(|events| Cluster { events }).collect()));
        let carry = CarryOver {
            onboard: self
                .state
                .onboard
                .into_iter()
                .map(|(k, b)| (k, Boarded { pickup_time: b.pickup_time * tim, pickup_point: b.pickup_point * len }))
                .collect(),
            frozen: self.state.frozen.into_iter().map(|(k, p)| (k, p * len)).collect(),
            ..self.state
        };
        Scenario::new(self.depot * len, self.start_time * tim, requests, pattern, vehicle, self.config, carry)
    }

    /// SI document describing an already validated scenario.
    pub fn from_scenario(s: &Scenario) -> ScenarioDoc {
        ScenarioDoc {
            units: Some(Units::default()),
            depot: s.depot,
            start_time: s.start_time,
            requests: s.requests.clone(),
            clusters: Some(s.pattern.clusters.iter().map(|c| c.events.clone()).collect()),
            vehicle: Some(VehicleDoc {
                shuttle_speed: Some(s.vehicle.shuttle_speed),
                walk_speed: Some(s.vehicle.walk_speed),
                service_time: Some(s.vehicle.service_time),
                acceleration: Some(s.vehicle.acceleration),
            }),
            config: s.config,
            state: s.carry.clone(),
        }
    }
}

/// Parses and validates a scenario document.
pub fn validate_scenario(json: &str) -> std::result::Result<Scenario, Vec<SwError>> {
    let doc: ScenarioDoc =
        serde_json::from_str(json).map_err(|e| vec![SwError::InvalidInput(format!("malformed scenario: {e}"))])?;
    doc.into_scenario()
}
