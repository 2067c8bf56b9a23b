//! Optimal routing points for a fixed visit order.
//!
//! The placement problem is a second-order-cone program in the stop points, the
//! segment times and the walking times. It is solved with a log-barrier Newton
//! method; the returned route is re-timed with the exact wait rule.

use crate::error::{Result, SwError};
use crate::geometry::{area_centroid, chebyshev_center, project_onto_area, Point, EPS_GEOM};
use crate::model::{optimal_waits, realize_route, Event, Route, Scenario, Timing};
use nalgebra::{DMatrix, DVector};

/// Placement data for one visit order.
#[derive(Debug, Clone)]
pub struct PlacementProblem<'a> {
    pub scenario: &'a Scenario,
    pub sequence: Vec<usize>,
    /// Position of each cluster in the visit order.
    pub positions: Vec<usize>,
    /// Passengers not yet picked up before each position.
    pub waiting: Vec<usize>,
    /// Passengers on board before each position.
    pub riding: Vec<usize>,
    pub weights: Vec<f64>,
}

pub fn build_placement<'a>(seq: &[usize], s: &'a Scenario) -> PlacementProblem<'a> {
    let mut positions = vec![0; seq.len()];
    for (j, &c) in seq.iter().enumerate() {
        positions[c] = j;
    }
    let mut waiting = Vec::with_capacity(seq.len());
    let mut riding = Vec::with_capacity(seq.len());
    let (mut w, mut r) = (s.waiting_count() as i64, s.carry.onboard.len() as i64);
    for &c in seq {
        waiting.push(w as usize);
        riding.push(r as usize);
        let l = s.info[c].loads;
        w -= l.pickups as i64;
        r += l.net();
    }
    PlacementProblem {
        scenario: s,
        sequence: seq.to_vec(),
        positions,
        waiting,
        riding,
        weights: s.position_weights(seq),
    }
}

#[derive(Debug, Clone)]
pub struct Placement {
    pub points: Vec<Point>,
    pub route: Route,
    pub cost: f64,
    pub newton_steps: usize,
}

/// Walking terms: cluster, requested point, cost weight per second of walking.
fn walk_terms(p: &PlacementProblem) -> Vec<(usize, Point, f64, Option<u32>)> {
    let s = p.scenario;
    let c = &s.config;
    let mut out = Vec::new();
    for r in &s.requests {
        if !s.carry.onboard.contains_key(&r.id) {
            let cl = s.pattern.cluster_of(Event::pickup(r.id)).expect("pickup");
            out.push((cl, r.pickup, c.gamma2 * c.alpha3_pickup, Some(r.id)));
        }
        let cl = s.pattern.cluster_of(Event::dropoff(r.id)).expect("dropoff");
        out.push((cl, r.dropoff, c.gamma2 * c.alpha3_dropoff, None));
    }
    out
}

/// Exact cost of routing points for the problem's visit order, with optimal waits.
pub fn placement_cost(p: &PlacementProblem, points: &[Point]) -> f64 {
    let s = p.scenario;
    let vs = s.vehicle.shuttle_speed;
    let vp = s.vehicle.walk_speed;
    let ta = s.stop_overhead();
    let n = p.sequence.len();
    let mut travel = Vec::with_capacity(n);
    let mut ready = vec![f64::NEG_INFINITY; n];
    let mut prev = s.depot;
    for &c in &p.sequence {
        travel.push(prev.dist(points[c]) / vs);
        prev = points[c];
    }
    let mut walks = 0.0;
    for (c, target, w, pickup) in walk_terms(p) {
        let t = points[c].dist(target) / vp;
        walks += w * t;
        if let Some(k) = pickup {
            let j = p.positions[c];
            ready[j] = ready[j].max(s.request(k).t_request + t);
        }
    }
    let waits = optimal_waits(&p.weights, &travel, &ready, s.start_time, ta);
    let mut total = walks + constant_terms(p);
    for j in 0..n {
        total += p.weights[j] * (travel[j] + ta + waits[j]);
    }
    total
}

/// Cost carried over from before the start clock (sunk waits and rides of earlier plans).
fn constant_terms(p: &PlacementProblem) -> f64 {
    let s = p.scenario;
    let c = &s.config;
    let vp = s.vehicle.walk_speed;
    let mut total = 0.0;
    for r in &s.requests {
        match s.carry.onboard.get(&r.id) {
            Some(b) => {
                total += c.alpha1 * (b.pickup_time - r.t_request)
                    + c.alpha2 * (s.start_time - b.pickup_time)
                    + c.alpha3_pickup * b.pickup_point.dist(r.pickup) / vp;
            }
            None => total += c.alpha1 * (s.start_time - r.t_request),
        }
    }
    c.gamma2 * total
}

/// Affine scalar `c + Σ a_i x_i`.
#[derive(Debug, Clone, Default)]
struct Lin {
    terms: Vec<(usize, f64)>,
    c: f64,
}

impl Lin {
    fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().fold(self.c, |acc, &(i, a)| acc + a * x[i])
    }
}

/// `z ≥ ‖(vx, vy)‖`.
#[derive(Debug, Clone)]
struct Cone {
    z: Lin,
    vx: Lin,
    vy: Lin,
}

/// `‖(x_i, x_{i+1}) - center‖ ≤ r`.
#[derive(Debug, Clone)]
struct Ball {
    i: usize,
    center: Point,
    r: f64,
}

struct Barrier {
    m: usize,
    cost: Vec<f64>,
    cones: Vec<Cone>,
    balls: Vec<Ball>,
}

impl Barrier {
    fn count(&self) -> usize {
        self.cones.len() + self.balls.len()
    }

    fn objective(&self, x: &[f64]) -> f64 {
        self.cost.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut v = 0.0;
        for k in &self.cones {
            let z = k.z.eval(x);
            let phi = z * z - k.vx.eval(x).powi(2) - k.vy.eval(x).powi(2);
            if z <= 0.0 || phi <= 0.0 {
                return f64::INFINITY;
            }
            v -= phi.ln();
        }
        for b in &self.balls {
            let d = Point::new(x[b.i], x[b.i + 1]) - b.center;
            let phi = b.r * b.r - d.dot(d);
            if phi <= 0.0 {
                return f64::INFINITY;
            }
            v -= phi.ln();
        }
        v
    }

    fn grad_hess(&self, x: &[f64], g: &mut DVector<f64>, h: &mut DMatrix<f64>) {
        g.fill(0.0);
        h.fill(0.0);
        let mut idx: Vec<usize> = Vec::new();
        let mut gp: Vec<f64> = Vec::new();
        for k in &self.cones {
            let (z, vx, vy) = (k.z.eval(x), k.vx.eval(x), k.vy.eval(x));
            let phi = z * z - vx * vx - vy * vy;
            idx.clear();
            gp.clear();
            let add = |i: usize, a: f64, idx: &mut Vec<usize>, gp: &mut Vec<f64>| match idx.iter().position(|&j| j == i) {
                Some(p) => gp[p] += a,
                None => {
                    idx.push(i);
                    gp.push(a);
                }
            };
            for &(i, a) in &k.z.terms {
                add(i, 2.0 * z * a, &mut idx, &mut gp);
            }
            for &(i, a) in &k.vx.terms {
                add(i, -2.0 * vx * a, &mut idx, &mut gp);
            }
            for &(i, a) in &k.vy.terms {
                add(i, -2.0 * vy * a, &mut idx, &mut gp);
            }
            let inv = 1.0 / phi;
            for (p, &i) in idx.iter().enumerate() {
                g[i] -= gp[p] * inv;
                for (q, &j) in idx.iter().enumerate() {
                    h[(i, j)] += gp[p] * gp[q] * inv * inv;
                }
            }
            for (lin, sign) in [(&k.z, 2.0), (&k.vx, -2.0), (&k.vy, -2.0)] {
                for &(i, a) in &lin.terms {
                    for &(j, b) in &lin.terms {
                        h[(i, j)] -= sign * a * b * inv;
                    }
                }
            }
        }
        for b in &self.balls {
            let d = Point::new(x[b.i], x[b.i + 1]) - b.center;
            let phi = b.r * b.r - d.dot(d);
            let inv = 1.0 / phi;
            let gp = [-2.0 * d.x, -2.0 * d.y];
            for p in 0..2 {
                g[b.i + p] -= gp[p] * inv;
                for q in 0..2 {
                    h[(b.i + p, b.i + q)] += gp[p] * gp[q] * inv * inv;
                }
                h[(b.i + p, b.i + p)] += 2.0 * inv;
            }
        }
    }
}

/// Stop point of each cluster: a variable offset or a fixed location.
#[derive(Debug, Clone, Copy)]
enum Slot {
    Free(usize),
    Fixed(Point),
}

fn point_lin(slot: Slot, scale: f64, shift: Point) -> (Lin, Lin) {
    match slot {
        Slot::Free(i) => (
            Lin { terms: vec![(i, scale)], c: -shift.x * scale },
            Lin { terms: vec![(i + 1, scale)], c: -shift.y * scale },
        ),
        Slot::Fixed(p) => (
            Lin { terms: vec![], c: (p.x - shift.x) * scale },
            Lin { terms: vec![], c: (p.y - shift.y) * scale },
        ),
    }
}

fn diff_lin(a: Slot, b: Slot, scale: f64) -> (Lin, Lin) {
    let (ax, ay) = point_lin(a, scale, Point::default());
    let (bx, by) = point_lin(b, -scale, Point::default());
    let join = |mut u: Lin, v: Lin| {
        u.terms.extend(v.terms);
        u.c += v.c;
        u
    };
    (join(ax, bx), join(ay, by))
}

const GAP_REL: f64 = 1e-9;
const INNER_CAP: usize = 100;

/// Minimizes the placement objective for the problem's visit order.
pub fn solve_placement(p: &PlacementProblem) -> Result<Placement> {
    let s = p.scenario;
    let n = p.sequence.len();
    let vs = s.vehicle.shuttle_speed;
    let vp = s.vehicle.walk_speed;
    let ta = s.stop_overhead();

    // Stop variables for clusters whose area has an interior; others are pinned.
    let mut slots = Vec::with_capacity(n);
    let mut start = Vec::new();
    for area in &s.areas {
        let c = area_centroid(area);
        if area.disks.iter().any(|d| d.radius == 0.0) {
            slots.push(Slot::Fixed(c));
            continue;
        }
        let (x0, margin) = if area.margin(c) > EPS_GEOM { (c, area.margin(c)) } else { chebyshev_center(area) };
        if margin > EPS_GEOM {
            slots.push(Slot::Free(start.len()));
            start.push(x0.x);
            start.push(x0.y);
        } else {
            slots.push(Slot::Fixed(x0));
        }
    }
    let t0 = start.len();
    let walks: Vec<_> = walk_terms(p)
        .into_iter()
        .filter(|w| w.2 > 0.0 && matches!(slots[w.0], Slot::Free(_)))
        .collect();
    let w0 = t0 + n;
    let m = w0 + walks.len();

    let wmax = p.weights.iter().copied().fold(0.0, f64::max);
    let walk_max = walks.iter().map(|w| w.2).fold(0.0, f64::max);
    let floor = 1e-9 * wmax.max(walk_max);
    if floor == 0.0 {
        let points = s.areas.iter().map(area_centroid).collect::<Vec<_>>();
        return Ok(finish(p, points, 0));
    }
    let mut cost = vec![0.0; m];
    for j in 0..n {
        cost[t0 + j] = p.weights[j].max(floor);
    }
    for (e, w) in walks.iter().enumerate() {
        cost[w0 + e] = w.2;
    }

    let mut cones = Vec::new();
    for j in 0..n {
        let here = slots[p.sequence[j]];
        let prev = if j == 0 { Slot::Fixed(s.depot) } else { slots[p.sequence[j - 1]] };
        let (vx, vy) = diff_lin(here, prev, 1.0 / vs);
        cones.push(Cone { z: Lin { terms: vec![(t0 + j, 1.0)], c: 0.0 }, vx, vy });
    }
    for (e, w) in walks.iter().enumerate() {
        let (vx, vy) = point_lin(slots[w.0], 1.0 / vp, w.1);
        cones.push(Cone { z: Lin { terms: vec![(w0 + e, 1.0)], c: 0.0 }, vx, vy });
    }
    for r in &s.requests {
        if s.carry.onboard.contains_key(&r.id) {
            continue;
        }
        let c = s.pattern.cluster_of(Event::pickup(r.id)).expect("pickup");
        let pos = p.positions[c];
        let z = Lin {
            terms: (0..=pos).map(|j| (t0 + j, 1.0)).collect(),
            c: s.start_time + (pos + 1) as f64 * ta - r.t_request,
        };
        let (vx, vy) = point_lin(slots[c], 1.0 / vp, r.pickup);
        cones.push(Cone { z, vx, vy });
    }
    let mut balls = Vec::new();
    for (c, area) in s.areas.iter().enumerate() {
        if let Slot::Free(i) = slots[c] {
            for d in &area.disks {
                balls.push(Ball { i, center: d.center, r: d.radius });
            }
        }
    }
    let bar = Barrier { m, cost, cones, balls };

    // Strictly feasible start: generous segment and walk times, then enough slack on
    // the first segment for every boarding constraint.
    let mut x = vec![0.0; m];
    x[..t0].copy_from_slice(&start);
    for (j, k) in bar.cones[..n].iter().enumerate() {
        let d = k.vx.eval(&x).hypot(k.vy.eval(&x));
        x[t0 + j] = 1.01 * d + 1.0;
    }
    for (e, k) in bar.cones[n..n + walks.len()].iter().enumerate() {
        let d = k.vx.eval(&x).hypot(k.vy.eval(&x));
        x[w0 + e] = 1.01 * d + 1.0;
    }
    if n > 0 {
        let deficit = bar.cones[n + walks.len()..]
            .iter()
            .map(|k| 1.01 * k.vx.eval(&x).hypot(k.vy.eval(&x)) + 1.0 - k.z.eval(&x))
            .fold(0.0, f64::max);
        x[t0] += deficit;
    }
    debug_assert!(bar.value(&x).is_finite());

    let x = newton_barrier(&bar, x, s.config.max_iterations)?;
    let steps = x.1;
    let points = slots
        .iter()
        .map(|sl| match *sl {
            Slot::Free(i) => Point::new(x.0[i], x.0[i + 1]),
            Slot::Fixed(q) => q,
        })
        .collect();
    Ok(finish(p, points, steps))
}

fn finish(p: &PlacementProblem, points: Vec<Point>, newton_steps: usize) -> Placement {
    let route = realize_route(&p.sequence, &points, p.scenario, Timing::Departure);
    let cost = route.cost.total;
    Placement { points, route, cost, newton_steps }
}

/// Path-following barrier method; returns the final iterate and the Newton step count.
fn newton_barrier(bar: &Barrier, mut x: Vec<f64>, cap: usize) -> Result<(Vec<f64>, usize)> {
    let m = bar.m;
    let nb = bar.count() as f64;
    let mut tau = 10.0 * nb / bar.objective(&x).abs().max(1.0);
    let mut g = DVector::zeros(m);
    let mut h = DMatrix::zeros(m, m);
    let mut steps = 0usize;
    loop {
        let mut fx = tau * bar.objective(&x) + bar.value(&x);
        for _ in 0..INNER_CAP {
            bar.grad_hess(&x, &mut g, &mut h);
            for i in 0..m {
                g[i] += tau * bar.cost[i];
            }
            let dx = solve_spd(&h, &g).ok_or(SwError::NonConvergence(steps))?;
            let lam2 = -g.dot(&dx);
            if !lam2.is_finite() {
                return Err(SwError::NonConvergence(steps));
            }
            if lam2 / 2.0 <= 1e-10 {
                break;
            }
            let mut step = 1.0;
            let mut accepted = None;
            while step > 1e-14 {
                let xn: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, d)| a + step * d).collect();
                let fnew = tau * bar.objective(&xn) + bar.value(&xn);
                if fnew.is_finite() && fnew <= fx - 0.25 * step * lam2 {
                    accepted = Some((xn, fnew));
                    break;
                }
                step *= 0.5;
            }
            steps += 1;
            if steps > cap {
                return Err(SwError::NonConvergence(steps));
            }
            match accepted {
                Some((xn, fnew)) => {
                    let stalled = fx - fnew <= 1e-15 * fx.abs().max(1.0);
                    x = xn;
                    fx = fnew;
                    if stalled {
                        break;
                    }
                }
                None => break,
            }
        }
        if nb / tau <= GAP_REL * bar.objective(&x).abs().max(1.0) {
            return Ok((x, steps));
        }
        tau *= 20.0;
    }
}

/// Solves `H d = -g` for a positive definite `H`, adding a small ridge if needed.
fn solve_spd(h: &DMatrix<f64>, g: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = (0..h.nrows()).map(|i| h[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    let mut ridge = 0.0;
    for _ in 0..12 {
        let mut hr = h.clone();
        for i in 0..h.nrows() {
            hr[(i, i)] += ridge;
        }
        if let Some(ch) = hr.cholesky() {
            return Some(-ch.solve(g));
        }
        ridge = if ridge == 0.0 { 1e-14 * scale } else { ridge * 100.0 };
    }
    None
}

const BRUTE_LIMIT: u128 = 50_000_000;

/// Exhaustive grid search over the product of per-area grids, refined around the
/// incumbent until the spacing reaches `resolution` (meters).
pub fn brute_place(p: &PlacementProblem, resolution: f64) -> Result<(Vec<Point>, f64)> {
    let s = p.scenario;
    let mut points: Vec<Point> = s.areas.iter().map(area_centroid).collect();
    let pinned = |c: usize| s.areas[c].disks.iter().any(|d| d.radius == 0.0);
    let free: Vec<usize> = (0..s.areas.len()).filter(|&c| !pinned(c)).collect();
    if free.is_empty() {
        let cost = placement_cost(p, &points);
        return Ok((points, cost));
    }
    let radius = |c: usize| s.areas[c].disks.iter().map(|d| d.radius).fold(f64::INFINITY, f64::min);
    let box_center = |c: usize| {
        s.areas[c]
            .disks
            .iter()
            .min_by(|a, b| a.radius.total_cmp(&b.radius))
            .expect("disk")
            .center
    };

    // Window points outside the area are replaced by their projections, which keeps
    // boundary optima reachable at every scale.
    let snap = |c: usize, q: Point| {
        if s.areas[c].disks.iter().all(|d| q.dist(d.center) <= d.radius) {
            q
        } else {
            project_onto_area(q, &s.areas[c])
        }
    };
    // Coarse level: full grids over each area.
    const COARSE: i64 = 10;
    const WIN: i64 = 2;
    const ROTATIONS: u32 = 3;
    let mut spacing: Vec<f64> = free.iter().map(|&c| 2.0 * radius(c) / COARSE as f64).collect();
    let mut grids: Vec<Vec<Point>> = free
        .iter()
        .zip(&spacing)
        .map(|(&c, &h)| {
            let o = box_center(c);
            let half = COARSE / 2;
            let mut g = vec![area_centroid(&s.areas[c])];
            for i in -half..=half {
                for j in -half..=half {
                    let q = o + Point::new(i as f64 * h, j as f64 * h);
                    if s.areas[c].contains(q) {
                        g.push(q);
                    }
                }
            }
            g
        })
        .collect();
    // Each rebuild turns the window by the golden angle so that a ridge missed by one
    // set of directions is caught by a later one.
    let window = |c: usize, o: Point, h: f64, turn: u32| {
        let (sin, cos) = (turn as f64 * 2.399_963_229_728_653).sin_cos();
        let mut g = vec![o];
        for i in -WIN..=WIN {
            for j in -WIN..=WIN {
                if (i, j) != (0, 0) {
                    let (u, v) = (i as f64 * h, j as f64 * h);
                    g.push(snap(c, o + Point::new(cos * u - sin * v, sin * u + cos * v)));
                }
            }
        }
        g
    };
    let mut best;
    let mut turn = 0u32;
    loop {
        let mut holds = 0;
        // Search the current windows, re-centering until the incumbent stops moving.
        loop {
            let total: u128 = grids.iter().map(|g| g.len() as u128).product();
            if total > BRUTE_LIMIT {
                return Err(SwError::GridTooLarge(total));
            }
            best = f64::INFINITY;
            let mut choice = vec![0usize; free.len()];
            let mut best_choice = choice.clone();
            'outer: loop {
                for (k, &c) in free.iter().enumerate() {
                    points[c] = grids[k][choice[k]];
                }
                let v = placement_cost(p, &points);
                if v < best {
                    best = v;
                    best_choice.clone_from(&choice);
                }
                for k in 0..free.len() {
                    choice[k] += 1;
                    if choice[k] < grids[k].len() {
                        continue 'outer;
                    }
                    choice[k] = 0;
                }
                break;
            }
            for (k, &c) in free.iter().enumerate() {
                points[c] = grids[k][best_choice[k]];
            }
            if best_choice.iter().all(|&i| i == 0) {
                holds += 1;
                if holds > ROTATIONS {
                    break;
                }
            } else {
                holds = 0;
            }
            turn += 1;
            for (k, &c) in free.iter().enumerate() {
                grids[k] = window(c, points[c], spacing[k], turn);
            }
        }
        if spacing.iter().all(|&h| h <= resolution) {
            break;
        }
        for (k, &c) in free.iter().enumerate() {
            spacing[k] = (spacing[k] / 2.0).max(resolution.min(spacing[k]));
            grids[k] = window(c, points[c], spacing[k], turn);
        }
    }
    Ok((points, best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::check_departures;
    use crate::geometry::{Area, SpaceWindow};
    use crate::model::*;
    use crate::synth::{random_scenario, SynthSpec};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn line_scenario(r: f64, cfg: SolverConfig) -> Scenario {
        Scenario::new(
            Point::default(),
            0.0,
            vec![RideRequest {
                id: 1,
                pickup: Point::new(10.0, 0.0),
                dropoff: Point::new(20.0, 0.0),
                r_pickup: r,
                r_dropoff: r,
                t_request: 0.0,
            }],
            None,
            VehicleParams { shuttle_speed: 1.0, walk_speed: 1.0, service_time: 0.0, acceleration: f64::INFINITY },
            cfg,
            CarryOver::default(),
        )
        .unwrap()
    }

    #[test]
    fn load_profiles() {
        let s = line_scenario(1.0, SolverConfig::default());
        let p = build_placement(&[0, 1], &s);
        assert_eq!(p.waiting, vec![1, 0]);
        assert_eq!(p.riding, vec![0, 1]);

        let req = |id: u32, x: f64| RideRequest {
            id,
            pickup: Point::new(x, 0.0),
            dropoff: Point::new(x, 50.0),
            r_pickup: 1.0,
            r_dropoff: 1.0,
            t_request: 0.0,
        };
        let s = Scenario::new(
            Point::default(),
            0.0,
            vec![req(1, 0.0), req(2, 10.0)],
            None,
            VehicleParams::default(),
            SolverConfig::default(),
            CarryOver::default(),
        )
        .unwrap();
        let p = build_placement(&[0, 1, 2, 3], &s);
        assert_eq!(p.waiting, vec![2, 1, 0, 0]);
        assert_eq!(p.riding, vec![0, 1, 2, 1]);
    }

    #[test]
    fn zero_radii_pin_every_point() {
        let s = line_scenario(0.0, SolverConfig::default());
        let p = build_placement(&[0, 1], &s);
        let sol = solve_placement(&p).unwrap();
        assert_eq!(sol.points, vec![Point::new(10.0, 0.0), Point::new(20.0, 0.0)]);
        let direct = realize_route(&[0, 1], &sol.points, &s, Timing::Departure).cost.total;
        assert_eq!(sol.cost, direct);
        let (bp, bc) = brute_place(&p, 1e-3).unwrap();
        assert_eq!(bp, sol.points);
        assert_eq!(bc, sol.cost);
    }

    #[test]
    fn shuttle_time_only_pulls_stops_toward_depot() {
        let s = line_scenario(1.0, SolverConfig { gamma2: 0.0, ..Default::default() });
        let p = build_placement(&[0, 1], &s);
        let sol = solve_placement(&p).unwrap();
        // Any pickup point on the segment from (9,0) to (11,0) is optimal.
        assert!(sol.points[0].y.abs() < 1e-4 && (9.0..=11.0).contains(&sol.points[0].x), "{:?}", sol.points);
        assert!(sol.points[1].dist(Point::new(19.0, 0.0)) < 1e-4, "{:?}", sol.points);
        assert_abs_diff_eq!(sol.cost, 19.0, epsilon = 1e-6);
        let (bp, bc) = brute_place(&p, 1e-3).unwrap();
        assert!(bp[1].dist(Point::new(19.0, 0.0)) < 2e-3);
        assert_abs_diff_eq!(bc, 19.0, epsilon = 1e-5);
    }

    #[test]
    fn heavy_walking_weight_moves_pickup_to_request() {
        let cfg = SolverConfig { alpha3_pickup: 1e4, ..Default::default() };
        let s = line_scenario(1.0, cfg);
        let sol = solve_placement(&build_placement(&[0, 1], &s)).unwrap();
        assert!(sol.points[0].dist(Point::new(10.0, 0.0)) < 1e-3);
    }

    #[test]
    fn fast_cost_matches_route_cost() {
        for seed in 0..10 {
            let s = random_scenario(&SynthSpec { n: 3, clusters: 6, seed, ..Default::default() }).unwrap();
            let seq = crate::phase1::solve_sequence(&s.areas.iter().map(area_centroid).collect::<Vec<_>>(), &s)
                .unwrap()
                .sequence;
            let p = build_placement(&seq, &s);
            let pts: Vec<Point> = s.areas.iter().map(|a| a.disks[0].center + Point::new(100.0, -50.0)).collect();
            let a = placement_cost(&p, &pts);
            let b = realize_route(&seq, &pts, &s, Timing::Departure).cost.total;
            assert_abs_diff_eq!(a, b, epsilon = 1e-9 * b);
        }
    }

    #[test]
    fn tangent_areas_are_pinned() {
        let mut s = line_scenario(1.0, SolverConfig::default());
        s.areas[0] = Area::new(vec![
            SpaceWindow::new(Point::new(9.0, 0.0), 1.0),
            SpaceWindow::new(Point::new(11.0, 0.0), 1.0),
        ]);
        let sol = solve_placement(&build_placement(&[0, 1], &s)).unwrap();
        assert!(sol.points[0].dist(Point::new(10.0, 0.0)) < 1e-6);
    }

    fn instance(seed: u64, n: usize, clusters: usize, g2: f64) -> Scenario {
        let cfg = SolverConfig { gamma2: g2, ..Default::default() };
        random_scenario(&SynthSpec { n, clusters, seed, config: cfg, ..Default::default() }).unwrap()
    }

    fn some_sequence(s: &Scenario) -> Vec<usize> {
        crate::phase1::solve_sequence(&s.areas.iter().map(area_centroid).collect::<Vec<_>>(), s)
            .unwrap()
            .sequence
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn placement_is_feasible_and_beats_centroids(seed in 0u64..5000, g2 in prop::sample::select(vec![0.0, 1.0])) {
            let s = instance(seed, 3, 6, g2);
            let seq = some_sequence(&s);
            let p = build_placement(&seq, &s);
            let sol = solve_placement(&p).unwrap();
            for (c, q) in sol.points.iter().enumerate() {
                prop_assert!(s.areas[c].contains(*q));
            }
            for d in check_departures(&sol.route, &s) {
                prop_assert!(d.required_wait <= 1e-6);
            }
            let cents: Vec<Point> = s.areas.iter().map(area_centroid).collect();
            prop_assert!(sol.cost <= placement_cost(&p, &cents) + 1e-9 * sol.cost);
            prop_assert!((sol.cost - placement_cost(&p, &sol.points)).abs() <= 1e-9 * sol.cost);
        }

        #[test]
        fn cost_is_convex_in_points(seed in 0u64..5000, u in 0.0..1.0f64, v in 0.0..1.0f64) {
            let s = instance(seed, 3, 6, 1.0);
            let seq = some_sequence(&s);
            let p = build_placement(&seq, &s);
            let pick = |f: f64| -> Vec<Point> {
                s.areas.iter().enumerate().map(|(c, a)| {
                    let d = a.disks[0];
                    let th = f * std::f64::consts::TAU + c as f64;
                    d.center + Point::new(th.cos(), th.sin()) * (d.radius * f)
                }).collect()
            };
            let (a, b) = (pick(u), pick(v));
            let mid: Vec<Point> = a.iter().zip(&b).map(|(x, y)| (*x + *y) * 0.5).collect();
            let (fa, fb, fm) = (placement_cost(&p, &a), placement_cost(&p, &b), placement_cost(&p, &mid));
            prop_assert!(fm <= 0.5 * (fa + fb) + 1e-9 * fa.max(fb));
        }

        #[test]
        fn shrinking_windows_never_helps(seed in 0u64..5000, f in 0.2..0.9f64) {
            let s = instance(seed, 2, 4, 1.0);
            let seq = some_sequence(&s);
            let wide = solve_placement(&build_placement(&seq, &s)).unwrap().cost;
            let mut t = s.clone();
            for a in &mut t.areas {
                for d in &mut a.disks {
                    d.radius *= f;
                }
            }
            let narrow = solve_placement(&build_placement(&seq, &t)).unwrap().cost;
            prop_assert!(narrow >= wide - 1e-7 * wide);
        }

        #[test]
        fn barrier_agrees_with_grid_search(seed in 0u64..5000, n in 1usize..=2) {
            let s = instance(seed, n, n + 1, 1.0);
            let seq = some_sequence(&s);
            let p = build_placement(&seq, &s);
            let sol = solve_placement(&p).unwrap();
            let r = s.requests[0].r_pickup;
            let h = 1e-3 * r;
            let (_, grid) = brute_place(&p, h).unwrap();
            let vs = s.vehicle.shuttle_speed;
            let vp = s.vehicle.walk_speed;
            let c = &s.config;
            let wsum: f64 = p.weights.iter().sum();
            let lip = 2.0 * wsum / vs + wsum * s.n() as f64 / vp + c.gamma2 * (c.alpha3_pickup + c.alpha3_dropoff) * s.n() as f64 / vp;
            let slack = lip * h * std::f64::consts::FRAC_1_SQRT_2;
            prop_assert!(sol.cost <= grid + 1e-7 * grid, "barrier {} grid {}", sol.cost, grid);
            prop_assert!(grid <= sol.cost + slack + 1e-7 * grid, "barrier {} grid {} slack {}", sol.cost, grid, slack);
        }
    }
}
