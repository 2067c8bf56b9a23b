//! Route documents, GeoJSON and SVG renderings.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use swroute_core::altmin::{SolveResult, Termination};
use swroute_core::dynamic::PlanStop;
use swroute_core::model::{
    evaluate_cost, CostBreakdown, EventKind, PassengerTimes, ScenarioDoc, Stop,
};
use swroute_core::{Point, Route, Scenario, SwError};

/// One stop of a solved route. Positions and cluster numbers are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopDoc {
    pub position: usize,
    pub cluster: usize,
    pub point: Point,
    pub travel: f64,
    pub arrival: f64,
    pub wait: f64,
    pub departure: f64,
    pub pickups: Vec<u32>,
    pub dropoffs: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationDoc {
    pub h: usize,
    pub sequence: Vec<usize>,
    pub cost: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleDoc {
    pub cost: f64,
    pub proven: bool,
    pub sequences: u64,
    pub sequence: Vec<usize>,
    pub gap: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cpu_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteDoc {
    pub scenario: ScenarioDoc,
    pub cost: CostBreakdown,
    pub hbar: usize,
    pub termination: Termination,
    pub sequence: Vec<usize>,
    pub stops: Vec<StopDoc>,
    pub passengers: Vec<PassengerTimes>,
    pub history: Vec<IterationDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cpu_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleDoc>,
}

fn events_of(s: &Scenario, cluster: usize, kind: EventKind) -> Vec<u32> {
    s.pattern.clusters[cluster].events.iter().filter(|e| e.kind == kind).map(|e| e.passenger).collect()
}

pub fn one_based(seq: &[usize]) -> Vec<usize> {
    seq.iter().map(|c| c + 1).collect()
}

pub fn route_doc(s: &Scenario, r: &SolveResult) -> RouteDoc {
    let stops = r
        .route
        .timeline
        .iter()
        .enumerate()
        .map(|(j, st)| StopDoc {
            position: j + 1,
            cluster: st.cluster + 1,
            point: st.point,
            travel: st.travel,
            arrival: st.arrival,
            wait: st.wait,
            departure: st.departure,
            pickups: events_of(s, st.cluster, EventKind::Pickup),
            dropoffs: events_of(s, st.cluster, EventKind::Dropoff),
        })
        .collect();
    RouteDoc {
        scenario: ScenarioDoc::from_scenario(s),
        cost: r.route.cost,
        hbar: r.hbar,
        termination: r.termination,
        sequence: one_based(&r.sequence),
        stops,
        passengers: r.route.passengers.clone(),
        history: r
            .history
            .iter()
            .map(|it| IterationDoc { h: it.h, sequence: one_based(&it.sequence), cost: it.cost, error: it.error.clone() })
            .collect(),
        cpu_s: None,
        oracle: None,
    }
}

/// Rebuilds the scenario and timed route described by a route document.
pub fn route_from_doc(doc: &RouteDoc) -> Result<(Scenario, Route), Vec<SwError>> {
    let s = doc.scenario.clone().into_scenario()?;
    let bad = |m: &str| vec![SwError::InvalidInput(m.to_string())];
    if doc.stops.len() != s.num_clusters() {
        return Err(bad("stop count does not match the cluster count"));
    }
    let mut points = vec![Point::default(); s.num_clusters()];
    let mut sequence = Vec::with_capacity(doc.stops.len());
    let mut timeline = Vec::with_capacity(doc.stops.len());
    for st in &doc.stops {
        if st.cluster == 0 || st.cluster > s.num_clusters() {
            return Err(bad("stop refers to an unknown cluster"));
        }
        let c = st.cluster - 1;
        points[c] = st.point;
        sequence.push(c);
        timeline.push(Stop {
            cluster: c,
            point: st.point,
            travel: st.travel,
            arrival: st.arrival,
            wait: st.wait,
            departure: st.departure,
        });
    }
    let mut route = Route {
        start: s.depot,
        start_time: s.start_time,
        sequence,
        points,
        timeline,
        passengers: doc.passengers.clone(),
        cost: CostBreakdown::default(),
    };
    route.cost = evaluate_cost(&route, &s).map_err(|e| vec![e])?;
    Ok((s, route))
}

fn lin(points: &[Point]) -> Value {
    Value::Array(points.iter().map(|p| json!([p.x, p.y])).collect())
}

/// Route polyline, stops, and one walking segment per passenger event.
pub fn geojson(s: &Scenario, route: &Route) -> Value {
    let mut features = Vec::new();
    let mut path = vec![s.depot];
    path.extend(route.timeline.iter().map(|st| st.point));
    features.push(json!({
        "type": "Feature",
        "geometry": {"type": "LineString", "coordinates": lin(&path)},
        "properties": {"kind": "route"}
    }));
    features.push(json!({
        "type": "Feature",
        "geometry": {"type": "Point", "coordinates": [s.depot.x, s.depot.y]},
        "properties": {"kind": "start"}
    }));
    for (j, st) in route.timeline.iter().enumerate() {
        features.push(json!({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [st.point.x, st.point.y]},
            "properties": {
                "kind": "stop",
                "position": j + 1,
                "cluster": st.cluster + 1,
                "arrival": st.arrival,
                "departure": st.departure,
                "pickups": events_of(s, st.cluster, EventKind::Pickup),
                "dropoffs": events_of(s, st.cluster, EventKind::Dropoff),
            }
        }));
    }
    for r in &s.requests {
        let drop = route.points[s.pattern.cluster_of(swroute_core::model::Event::dropoff(r.id)).expect("dropoff")];
        let pick = match s.carry.onboard.get(&r.id) {
            Some(b) => b.pickup_point,
            None => route.points[s.pattern.cluster_of(swroute_core::model::Event::pickup(r.id)).expect("pickup")],
        };
        for (kind, a, b) in [("walk_pickup", r.pickup, pick), ("walk_dropoff", drop, r.dropoff)] {
            features.push(json!({
                "type": "Feature",
                "geometry": {"type": "LineString", "coordinates": lin(&[a, b])},
                "properties": {"kind": kind, "passenger": r.id}
            }));
        }
    }
    json!({"type": "FeatureCollection", "features": features})
}

/// Same content as the GeoJSON rendering, plus the walking disks.
pub fn svg(s: &Scenario, route: &Route) -> String {
    let mut pts: Vec<Point> = vec![s.depot];
    let mut disks = Vec::new();
    for r in &s.requests {
        pts.push(r.pickup);
        pts.push(r.dropoff);
        disks.push((r.pickup, r.r_pickup, "#2b8cbe"));
        disks.push((r.dropoff, r.r_dropoff, "#e34a33"));
    }
    pts.extend(route.points.iter().copied());
    let pad = disks.iter().map(|d| d.1).fold(0.0, f64::max) + 1.0;
    let minx = pts.iter().map(|p| p.x).fold(f64::INFINITY, f64::min) - pad;
    let maxx = pts.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max) + pad;
    let miny = pts.iter().map(|p| p.y).fold(f64::INFINITY, f64::min) - pad;
    let maxy = pts.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max) + pad;
    let size = 800.0;
    let scale = size / (maxx - minx).max(maxy - miny);
    let tx = |p: Point| ((p.x - minx) * scale, (maxy - p.y) * scale);
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.2} {h:.2}\">\n",
        w = (maxx - minx) * scale,
        h = (maxy - miny) * scale
    ));
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    for (c, r, color) in &disks {
        let (x, y) = tx(*c);
        out.push_str(&format!(
            "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"{:.2}\" fill=\"{color}\" fill-opacity=\"0.08\" stroke=\"{color}\" stroke-opacity=\"0.4\"/>\n",
            r * scale
        ));
    }
    if let Value::Array(features) = &geojson(s, route)["features"] {
        for f in features {
            let kind = f["properties"]["kind"].as_str().unwrap_or("");
            if !kind.starts_with("walk") {
                continue;
            }
            let c = &f["geometry"]["coordinates"];
            let a = tx(Point::new(c[0][0].as_f64().unwrap_or(0.0), c[0][1].as_f64().unwrap_or(0.0)));
            let b = tx(Point::new(c[1][0].as_f64().unwrap_or(0.0), c[1][1].as_f64().unwrap_or(0.0)));
            out.push_str(&format!(
                "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n",
                a.0, a.1, b.0, b.1
            ));
        }
    }
    let mut path = vec![s.depot];
    path.extend(route.timeline.iter().map(|st| st.point));
    let poly: Vec<String> = path.iter().map(|p| tx(*p)).map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    out.push_str(&format!("<polyline points=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>\n", poly.join(" ")));
    let (dx, dy) = tx(s.depot);
    out.push_str(&format!("<rect x=\"{:.2}\" y=\"{:.2}\" width=\"10\" height=\"10\" fill=\"black\"/>\n", dx - 5.0, dy - 5.0));
    for (j, st) in route.timeline.iter().enumerate() {
        let (x, y) = tx(st.point);
        out.push_str(&format!("<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"5\" fill=\"black\"/>\n"));
        out.push_str(&format!("<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"14\">{}</text>\n", x + 7.0, y - 7.0, j + 1));
    }
    out.push_str("</svg>\n");
    out
}

/// GeoJSON of a replayed schedule: executed and planned stops in order.
pub fn plan_geojson(start: Point, plan: &[PlanStop]) -> Value {
    let mut path = vec![start];
    path.extend(plan.iter().map(|st| st.point));
    let mut features = vec![json!({
        "type": "Feature",
        "geometry": {"type": "LineString", "coordinates": lin(&path)},
        "properties": {"kind": "route"}
    })];
    for (j, st) in plan.iter().enumerate() {
        features.push(json!({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [st.point.x, st.point.y]},
            "properties": {
                "kind": if st.pickups.is_empty() && st.dropoffs.is_empty() { "waypoint" } else { "stop" },
                "position": j + 1,
                "arrival": st.arrival,
                "departure": st.departure,
                "pickups": st.pickups,
                "dropoffs": st.dropoffs,
            }
        }));
    }
    json!({"type": "FeatureCollection", "features": features})
}
