//! Planar points, disks and disk-intersection areas.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

/// Membership tolerance in meters.
pub const EPS_GEOM: f64 = 1e-6;

const DYKSTRA_MAX_SWEEPS: usize = 20_000;
const CENTROID_GRID: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn rotate90(self) -> Point {
        Point::new(-self.y, self.x)
    }
}

impl From<[f64; 2]> for Point {
    fn from(a: [f64; 2]) -> Self {
        Point::new(a[0], a[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

/// Closed disk of feasible walking destinations around a requested location.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceWindow {
    pub center: Point,
    pub radius: f64,
}

impl SpaceWindow {
    pub fn new(center: Point, radius: f64) -> Self {
        SpaceWindow { center, radius }
    }

    pub fn contains(&self, p: Point) -> bool {
        p.dist(self.center) <= self.radius + EPS_GEOM
    }

    /// Signed distance outside the disk (negative inside).
    pub fn violation(&self, p: Point) -> f64 {
        p.dist(self.center) - self.radius
    }

    pub fn project(&self, p: Point) -> Point {
        let d = p - self.center;
        let n = d.norm();
        if n <= self.radius {
            p
        } else {
            self.center + d * (self.radius / n)
        }
    }
}

/// Intersection of one or more space windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Area {
    pub disks: Vec<SpaceWindow>,
}

impl Area {
    pub fn new(disks: Vec<SpaceWindow>) -> Self {
        assert!(!disks.is_empty(), "an area needs at least one disk");
        Area { disks }
    }

    pub fn single(center: Point, radius: f64) -> Self {
        Area::new(vec![SpaceWindow::new(center, radius)])
    }

    pub fn is_degenerate(&self) -> bool {
        self.disks.iter().all(|d| d.radius == 0.0)
    }

    pub fn contains(&self, p: Point) -> bool {
        self.disks.iter().all(|d| d.contains(p))
    }

    pub fn max_violation(&self, p: Point) -> f64 {
        self.disks.iter().map(|d| d.violation(p)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest interior margin `min_i (r_i - |p - c_i|)`.
    pub fn margin(&self, p: Point) -> f64 {
        -self.max_violation(p)
    }

    fn tightest(&self) -> &SpaceWindow {
        self.disks
            .iter()
            .min_by(|a, b| a.radius.total_cmp(&b.radius))
            .expect("nonempty")
    }

    fn mean_center(&self) -> Point {
        let s = self.disks.iter().fold(Point::default(), |acc, d| acc + d.center);
        s * (1.0 / self.disks.len() as f64)
    }
}

/// Euclidean projection onto the intersection by cyclic Dykstra sweeps.
pub fn project_onto_area(x: Point, area: &Area) -> Point {
    if area.disks.len() == 1 {
        return area.disks[0].project(x);
    }
    if area.contains(x) && area.max_violation(x) <= 0.0 {
        return x;
    }
    let (y, _) = dykstra(x, &area.disks);
    polish(x, y, &area.disks).unwrap_or(y)
}

/// Exact projection for the active set suggested by an approximate one: the nearest
/// feasible point among single-disk projections and two-circle crossings of the
/// disks that are (nearly) binding at `y`.
fn polish(x: Point, y: Point, disks: &[SpaceWindow]) -> Option<Point> {
    let scale = disks.iter().map(|d| d.radius).fold(1.0, f64::max);
    let near = 1e-3 * scale;
    let active: Vec<&SpaceWindow> = disks.iter().filter(|d| d.violation(y) > -near).collect();
    let feasible = |p: Point| disks.iter().all(|d| d.violation(p) <= 1e-12 * scale);
    let mut best: Option<Point> = None;
    let mut offer = |p: Point| {
        if feasible(p) && best.is_none_or(|b| p.dist(x) < b.dist(x)) {
            best = Some(p);
        }
    };
    for d in &active {
        offer(d.project(x));
    }
    for (i, a) in active.iter().enumerate() {
        for b in &active[i + 1..] {
            for p in crossings(a, b, 1e-12 * scale) {
                offer(p);
            }
        }
    }
    best
}

/// Intersection points of two circles, treating near-tangency as tangency.
fn crossings(a: &SpaceWindow, b: &SpaceWindow, tol: f64) -> Vec<Point> {
    let d = b.center - a.center;
    let dn = d.norm();
    if dn == 0.0 {
        return vec![];
    }
    let along = (dn * dn + a.radius * a.radius - b.radius * b.radius) / (2.0 * dn);
    let h2 = a.radius * a.radius - along * along;
    if h2 < -tol * a.radius.max(1.0) {
        return vec![];
    }
    let u = d * (1.0 / dn);
    let base = a.center + u * along;
    let h = h2.max(0.0).sqrt();
    if h == 0.0 {
        return vec![base];
    }
    vec![base + u.rotate90() * h, base - u.rotate90() * h]
}

/// Returns the final iterate and whether the sweeps settled.
fn dykstra(x: Point, disks: &[SpaceWindow]) -> (Point, bool) {
    let mut y = x;
    let mut incr = vec![Point::default(); disks.len()];
    for _ in 0..DYKSTRA_MAX_SWEEPS {
        let start = y;
        let mut moved = 0.0f64;
        for (d, q) in disks.iter().zip(incr.iter_mut()) {
            let z = y + *q;
            let p = d.project(z);
            let nq = z - p;
            moved = moved.max(nq.dist(*q));
            *q = nq;
            y = p;
        }
        // The iterate can stall while the corrections are still changing.
        if y.dist(start) < EPS_GEOM * 1e-3 && moved < EPS_GEOM * 1e-3 {
            return (y, true);
        }
    }
    (y, false)
}

/// True iff the disks share a common point (up to the membership tolerance).
pub fn area_nonempty(disks: &[SpaceWindow]) -> bool {
    assert!(!disks.is_empty());
    if disks.len() == 1 {
        return disks[0].radius >= -EPS_GEOM;
    }
    let (y, _) = minmax_point(disks);
    disks.iter().map(|d| d.violation(y)).fold(f64::NEG_INFINITY, f64::max) <= EPS_GEOM
}

/// Approximate minimizer of `max_i (|x - c_i| - r_i)`, refined with Dykstra.
fn minmax_point(disks: &[SpaceWindow]) -> (Point, f64) {
    let worst = |p: Point| disks.iter().map(|d| d.violation(p)).fold(f64::NEG_INFINITY, f64::max);
    // Pairwise lens midpoints are exact minimizers whenever two disks are the binding pair.
    let mut best = disks[0].center;
    let mut best_v = worst(best);
    let mut consider = |p: Point| {
        let v = worst(p);
        if v < best_v {
            best_v = v;
            best = p;
        }
    };
    for (i, a) in disks.iter().enumerate() {
        consider(a.center);
        for b in &disks[i + 1..] {
            let d = b.center - a.center;
            let dn = d.norm();
            if dn > 0.0 {
                let s = ((dn + a.radius - b.radius) / 2.0).clamp(0.0, dn);
                consider(a.center + d * (s / dn));
            }
        }
    }
    if best_v <= 0.0 {
        return (best, best_v);
    }
    let (y, _) = dykstra(best, disks);
    let v = worst(y);
    if v < best_v {
        (y, v)
    } else {
        (best, best_v)
    }
}

/// Center of mass of the area, estimated on a fixed grid.
pub fn area_centroid(area: &Area) -> Point {
    let t = area.tightest();
    if t.radius == 0.0 {
        return t.center;
    }
    if area.disks.len() == 1 {
        return t.center;
    }
    let n = CENTROID_GRID;
    let h = 2.0 * t.radius / n as f64;
    let (mut sx, mut sy, mut count) = (0.0, 0.0, 0usize);
    for i in 0..n {
        let x = t.center.x - t.radius + (i as f64 + 0.5) * h;
        for j in 0..n {
            let y = t.center.y - t.radius + (j as f64 + 0.5) * h;
            let p = Point::new(x, y);
            if area.disks.iter().all(|d| p.dist(d.center) <= d.radius) {
                sx += x;
                sy += y;
                count += 1;
            }
        }
    }
    if count == 0 {
        log::info!("centroid grid found no interior samples; using projected mean of centers");
        return project_onto_area(area.mean_center(), area);
    }
    Point::new(sx / count as f64, sy / count as f64)
}

/// Point of maximal interior margin together with that margin.
pub fn chebyshev_center(area: &Area) -> (Point, f64) {
    if area.disks.len() == 1 {
        return (area.disks[0].center, area.disks[0].radius);
    }
    let rmin = area.tightest().radius;
    let shrunk = |s: f64| -> Vec<SpaceWindow> {
        area.disks
            .iter()
            .map(|d| SpaceWindow::new(d.center, d.radius - s))
            .collect()
    };
    let mut best = area_centroid(area);
    let mut best_m = area.margin(best);
    let (mut lo, mut hi) = (0.0, rmin);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let (p, v) = minmax_point(&shrunk(mid));
        if v <= 0.0 {
            lo = mid;
            let m = area.margin(p);
            if m > best_m {
                best_m = m;
                best = p;
            }
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-9 * (1.0 + rmin) {
            break;
        }
    }
    (best, best_m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn disk(x: f64, y: f64, r: f64) -> SpaceWindow {
        SpaceWindow::new(Point::new(x, y), r)
    }

    /// Exact nonemptiness: a nonempty intersection of disks contains either the
    /// leftmost point of some disk or an intersection point of two boundary circles.
    fn nonempty_by_candidates(disks: &[SpaceWindow], tol: f64) -> bool {
        let inside = |p: Point| disks.iter().all(|d| p.dist(d.center) <= d.radius + tol);
        for d in disks {
            if inside(d.center - Point::new(d.radius, 0.0)) {
                return true;
            }
        }
        for (i, a) in disks.iter().enumerate() {
            for b in &disks[i + 1..] {
                for p in circle_intersections(a, b) {
                    if inside(p) {
                        return true;
                    }
                }
            }
        }
        false
    }

    /// Nonemptiness after growing (`delta > 0`) or shrinking every radius.
    fn nonempty_with_margin(disks: &[SpaceWindow], delta: f64) -> bool {
        let d: Vec<SpaceWindow> = disks.iter().map(|d| SpaceWindow::new(d.center, d.radius + delta)).collect();
        nonempty_by_candidates(&d, 1e-12)
    }

    fn circle_intersections(a: &SpaceWindow, b: &SpaceWindow) -> Vec<Point> {
        let d = b.center - a.center;
        let dn = d.norm();
        if dn == 0.0 || dn > a.radius + b.radius || dn < (a.radius - b.radius).abs() {
            return vec![];
        }
        let l = (a.radius * a.radius - b.radius * b.radius + dn * dn) / (2.0 * dn);
        let h = (a.radius * a.radius - l * l).max(0.0).sqrt();
        let u = d * (1.0 / dn);
        let m = a.center + u * l;
        vec![m + u.rotate90() * h, m - u.rotate90() * h]
    }

    /// Exact projection by candidate enumeration: the nearest point is x itself,
    /// a single-disk projection, or a boundary intersection point.
    fn project_by_candidates(x: Point, disks: &[SpaceWindow]) -> Point {
        let inside = |p: Point| disks.iter().all(|d| p.dist(d.center) <= d.radius + 1e-9);
        let mut cands = vec![x];
        cands.extend(disks.iter().map(|d| d.project(x)));
        for (i, a) in disks.iter().enumerate() {
            for b in &disks[i + 1..] {
                cands.extend(circle_intersections(a, b));
            }
        }
        cands
            .into_iter()
            .filter(|p| inside(*p))
            .min_by(|p, q| p.dist(x).total_cmp(&q.dist(x)))
            .expect("nonempty area")
    }

    #[test]
    fn nonempty_examples() {
        assert!(area_nonempty(&[disk(0.0, 0.0, 1.0), disk(1.5, 0.0, 1.0)]));
        assert!(!area_nonempty(&[disk(0.0, 0.0, 1.0), disk(3.0, 0.0, 1.0)]));
        let s = 1.7;
        let tri = [
            disk(0.0, 0.0, 1.0),
            disk(s, 0.0, 1.0),
            disk(s / 2.0, s * 3f64.sqrt() / 2.0, 1.0),
        ];
        assert!(area_nonempty(&tri));
        assert!(1.7 / 3f64.sqrt() < 1.0);
    }

    #[test]
    fn tangent_disks_are_nonempty() {
        assert!(area_nonempty(&[disk(0.0, 0.0, 1.0), disk(2.0, 0.0, 1.0)]));
    }

    #[test]
    fn projection_examples() {
        let a = Area::single(Point::new(0.0, 0.0), 1.0);
        let p = project_onto_area(Point::new(5.0, 0.0), &a);
        assert_abs_diff_eq!(p.x, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, 0.0, epsilon = 1e-12);

        let lens = Area::new(vec![disk(0.0, 0.0, 1.0), disk(1.0, 0.0, 1.0)]);
        let inside = Point::new(0.5, 0.2);
        assert_eq!(project_onto_area(inside, &lens), inside);
        let p = project_onto_area(Point::new(0.5, 5.0), &lens);
        assert_abs_diff_eq!(p.x, 0.5, epsilon = 1e-5);
        assert_abs_diff_eq!(p.y, 0.86603, epsilon = 1e-5);
    }

    #[test]
    fn lens_projection_matches_grid_search() {
        let lens = Area::new(vec![disk(0.0, 0.0, 1.0), disk(1.0, 0.0, 1.0)]);
        let x = Point::new(0.5, 5.0);
        let step = 1e-3;
        let mut best = (f64::INFINITY, Point::default());
        for i in 0..=1000 {
            for j in 0..=2000 {
                let p = Point::new(i as f64 * step, -1.0 + j as f64 * step);
                if lens.disks.iter().all(|d| p.dist(d.center) <= d.radius) && p.dist(x) < best.0 {
                    best = (p.dist(x), p);
                }
            }
        }
        let p = project_onto_area(x, &lens);
        assert!(p.dist(best.1) <= 2.0 * step);
        assert!(p.dist(x) <= best.0 + 1e-9);
    }

    #[test]
    fn centroid_examples() {
        let c = area_centroid(&Area::single(Point::new(3.0, 4.0), 2.0));
        assert_eq!(c, Point::new(3.0, 4.0));
        let c = area_centroid(&Area::new(vec![disk(0.0, 0.0, 1.0), disk(1.0, 0.0, 1.0)]));
        assert_abs_diff_eq!(c.x, 0.5, epsilon = 1e-3);
        assert_abs_diff_eq!(c.y, 0.0, epsilon = 1e-3);
        let c = area_centroid(&Area::single(Point::new(7.0, 7.0), 0.0));
        assert_eq!(c, Point::new(7.0, 7.0));
    }

    #[test]
    fn sliver_centroid_falls_back_inside() {
        let a = Area::new(vec![disk(0.0, 0.0, 1.0), disk(2.0 - 1e-4, 0.0, 1.0)]);
        let c = area_centroid(&a);
        assert!(a.contains(c));
    }

    #[test]
    fn chebyshev_center_of_lens() {
        let a = Area::new(vec![disk(0.0, 0.0, 1.0), disk(1.0, 0.0, 1.0)]);
        let (p, m) = chebyshev_center(&a);
        assert_abs_diff_eq!(m, 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(p.x, 0.5, epsilon = 1e-5);
    }

    fn disks_strategy() -> impl Strategy<Value = Vec<SpaceWindow>> {
        prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64, 0.2..3.0f64), 1..5)
            .prop_map(|v| v.into_iter().map(|(x, y, r)| disk(x, y, r)).collect())
    }

    proptest! {
        #![proptest_config(ProptestConfig { max_global_rejects: 65536, ..ProptestConfig::default() })]
        #[test]
        fn nonempty_agrees_with_candidates(disks in disks_strategy()) {
            // Skip near-tangent configurations where the two answers may differ by tolerance.
            let loose = nonempty_with_margin(&disks, 1e-4);
            let tight = nonempty_with_margin(&disks, -1e-4);
            prop_assume!(loose == tight);
            prop_assert_eq!(area_nonempty(&disks), tight);
        }

        #[test]
        fn projection_matches_candidates(disks in disks_strategy(), x in -6.0..6.0f64, y in -6.0..6.0f64) {
            prop_assume!(nonempty_with_margin(&disks, -1e-3));
            let area = Area::new(disks.clone());
            let q = Point::new(x, y);
            let p = project_onto_area(q, &area);
            let exact = project_by_candidates(q, &disks);
            prop_assert!(area.max_violation(p) <= EPS_GEOM);
            prop_assert!((p.dist(q) - exact.dist(q)).abs() <= 1e-5);
        }

        #[test]
        fn projection_is_idempotent_and_nonexpansive(
            disks in disks_strategy(),
            a in (-6.0..6.0f64, -6.0..6.0f64),
            b in (-6.0..6.0f64, -6.0..6.0f64),
        ) {
            prop_assume!(nonempty_with_margin(&disks, -1e-3));
            let area = Area::new(disks);
            let (pa, pb) = (Point::new(a.0, a.1), Point::new(b.0, b.1));
            let qa = project_onto_area(pa, &area);
            let qb = project_onto_area(pb, &area);
            prop_assert!(project_onto_area(qa, &area).dist(qa) <= 1e-6);
            prop_assert!(qa.dist(qb) <= pa.dist(pb) + 1e-6);
        }

        #[test]
        fn centroid_is_inside_and_rotation_covariant(disks in disks_strategy()) {
            prop_assume!(nonempty_with_margin(&disks, -1e-3));
            let area = Area::new(disks.clone());
            let c = area_centroid(&area);
            prop_assert!(area.max_violation(c) <= EPS_GEOM);
            let rotated = Area::new(disks.iter().map(|d| SpaceWindow::new(d.center.rotate90(), d.radius)).collect());
            let cr = area_centroid(&rotated);
            let scale = disks.iter().map(|d| d.radius).fold(f64::INFINITY, f64::min);
            prop_assert!(cr.dist(c.rotate90()) <= 2e-2 * scale);
        }
    }
}
