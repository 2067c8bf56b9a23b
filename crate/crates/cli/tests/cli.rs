use serde_json::{json, Value};
use std::path::Path;
use std::process::{Command, Output};
use swroute_cli::output::{route_from_doc, RouteDoc};

fn swroute(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swroute")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, v: &Value) -> String {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
    p.to_string_lossy().into_owned()
}

fn one_request(r: f64) -> Value {
    json!({
        "units": {"length": "mi", "speed": "mph", "time": "s", "acceleration": "mph/s"},
        "depot": [0.0, 0.0],
        "requests": [{"id": 1, "pickup": [0.5, 0.0], "dropoff": [1.5, 0.2], "r_pickup": r, "r_dropoff": 0.3, "t_request": 0.0}],
        "vehicle": {"shuttle_speed": 30.0, "walk_speed": 3.1, "service_time": 60.0, "acceleration": 2.25}
    })
}

#[test]
fn single_request_gives_two_stops() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(dir.path(), "s.json", &one_request(0.3));
    let out = swroute(&["solve", "--scenario", &sc]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: RouteDoc = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc.sequence, vec![1, 2]);
    assert_eq!(doc.stops.len(), 2);
    assert_eq!(doc.stops[0].pickups, vec![1]);
    assert_eq!(doc.stops[1].dropoffs, vec![1]);
}

#[test]
fn negative_radius_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(dir.path(), "s.json", &one_request(-0.1));
    let out = swroute(&["solve", "--scenario", &sc]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("NegativeRadius"));
}

#[test]
fn every_violation_is_listed() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = one_request(-0.1);
    v["vehicle"]["walk_speed"] = json!(0.0);
    let sc = write(dir.path(), "s.json", &v);
    let out = swroute(&["solve", "--scenario", &sc]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("NegativeRadius") && err.contains("NonPositiveSpeed"), "{err}");
}

#[test]
fn crossed_pattern_exits_as_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let v = json!({
        "depot": [0.0, 0.0],
        "requests": [
            {"id": 1, "pickup": [100.0, 0.0], "dropoff": [900.0, 0.0], "r_pickup": 50.0, "r_dropoff": 50.0, "t_request": 0.0},
            {"id": 2, "pickup": [900.0, 0.0], "dropoff": [100.0, 0.0], "r_pickup": 50.0, "r_dropoff": 50.0, "t_request": 0.0}
        ],
        "clusters": [["p1", "d2"], ["p2", "d1"]]
    });
    let sc = write(dir.path(), "s.json", &v);
    let out = swroute(&["solve", "--scenario", &sc]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("InfeasiblePattern"));
}

#[test]
fn route_json_recosts_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let st = swroute(&["solve", "--random", "n=4 N=7", "--seed", "3", "--out", out.to_str().unwrap()]);
    assert!(st.status.success());
    let doc: RouteDoc = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let (_, route) = route_from_doc(&doc).unwrap();
    let rel = (route.cost.total - doc.cost.total).abs() / doc.cost.total;
    assert!(rel <= 1e-9, "{} vs {}", route.cost.total, doc.cost.total);
}

#[test]
fn geojson_and_svg_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("r.geojson");
    let s = dir.path().join("r.svg");
    let st = swroute(&[
        "solve", "--random", "n=3 N=6", "--geojson", g.to_str().unwrap(), "--svg", s.to_str().unwrap(), "--out",
        dir.path().join("r.json").to_str().unwrap(),
    ]);
    assert!(st.status.success());
    let gj: Value = serde_json::from_str(&std::fs::read_to_string(&g).unwrap()).unwrap();
    let feats = gj["features"].as_array().unwrap();
    assert_eq!(feats[0]["geometry"]["type"], "LineString");
    assert_eq!(feats[0]["geometry"]["coordinates"].as_array().unwrap().len(), 7);
    assert_eq!(feats.iter().filter(|f| f["properties"]["kind"] == "stop").count(), 6);
    assert_eq!(feats.iter().filter(|f| f["properties"]["kind"].as_str().unwrap().starts_with("walk")).count(), 6);
    assert!(std::fs::read_to_string(&s).unwrap().starts_with("<svg"));
}

#[test]
fn solve_with_oracle_reports_gap() {
    let out = swroute(&["solve", "--random", "n=3 N=5", "--seed", "1", "--oracle", "--stable"]);
    assert!(out.status.success());
    let doc: RouteDoc = serde_json::from_slice(&out.stdout).unwrap();
    let o = doc.oracle.unwrap();
    assert!(o.proven);
    assert!(o.cpu_s.is_none() && doc.cpu_s.is_none());
    assert!(((doc.cost.total - o.cost) / o.cost - o.gap).abs() < 1e-12);
    assert!(o.gap >= -1e-9);
}

#[test]
fn bench_rows_follow_suite_order() {
    let dir = tempfile::tempdir().unwrap();
    let suite = write(
        dir.path(),
        "suite.json",
        &json!([
            {"name": "b", "n": 3, "N": 6, "gamma2": 0.0, "radius_mi": 0.3, "mps": 6},
            {"name": "a", "n": 2, "N": 3, "gamma2": 1.0, "alpha3": 0.1, "radius_mi": 0.15, "mps": 2}
        ]),
    );
    let csv = dir.path().join("t.csv");
    let out = swroute(&["bench", "--suite", &suite, "--stable", "--threads", "2", "--out", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "instance,n,N,altmin_cost,hbar,altmin_cpu_s,oracle_cost,proven,oracle_cpu_s,gap");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].trim_start_matches(['*', '◇']).starts_with("b,3,6,"));
    assert!(lines[2].trim_start_matches(['*', '◇']).starts_with("a,2,3,"));
    assert!(String::from_utf8_lossy(&out.stdout).contains("gap_%"));
}

#[test]
fn unproven_baseline_that_loses_gets_diamond() {
    // A one-order budget stops the baseline at the first order, which loses here.
    let out = swroute(&["bench", "--suite", "all", "--instances", "p06-c12-2", "--budget", "1", "--stable", "--seed", "4"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let row = text.lines().nth(1).unwrap();
    let gap: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
    assert!(row.contains(",false,"));
    assert!(gap < 0.0 && row.starts_with('◇'), "{row}");
}

#[test]
fn replay_single_batch_matches_solve() {
    let dir = tempfile::tempdir().unwrap();
    let s = one_request(0.3);
    let replay = json!({
        "units": s["units"], "depot": s["depot"], "vehicle": s["vehicle"],
        "batches": [{"time": 0.0, "requests": s["requests"]}]
    });
    let rp = write(dir.path(), "r.json", &replay);
    let sc = write(dir.path(), "s.json", &s);
    let a = swroute(&["replay", "--scenario", &rp]);
    let b = swroute(&["solve", "--scenario", &sc]);
    assert!(a.status.success() && b.status.success());
    let a: Value = serde_json::from_slice(&a.stdout).unwrap();
    let b: RouteDoc = serde_json::from_slice(&b.stdout).unwrap();
    let ta = a["dynamic"]["cost"]["total"].as_f64().unwrap();
    assert!((ta - b.cost.total).abs() <= 1e-9 * b.cost.total, "{ta} vs {}", b.cost.total);
}

#[test]
fn replay_reports_both_policies() {
    let out = swroute(&["replay", "--random", "n=3 batches=2 gap=600", "--seed", "5", "--sequential"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["dynamic"]["batches"].as_array().unwrap().len(), 2);
    assert_eq!(v["dynamic"]["passengers"].as_array().unwrap().len(), 6);
    assert!(v["sequential"]["cost"]["total"].is_number());
}

#[test]
fn reruns_are_byte_identical() {
    for args in [
        vec!["solve", "--random", "n=6 N=12", "--seed", "7", "--stable"],
        vec!["bench", "--suite", "all", "--instances", "p06-c07-1", "--budget", "200", "--stable", "--seed", "7"],
        vec!["replay", "--random", "n=3 batches=3 gap=400", "--seed", "7"],
    ] {
        let a = swroute(&args);
        let b = swroute(&args);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn unknown_random_key_is_rejected() {
    let out = swroute(&["solve", "--random", "n=3 q=1"]);
    assert!(!out.status.success());
}
