//! Low-dimensional convex geometry: points, balls, cubes and finite point
//! hulls, together with the conservative ball-classification predicate the
//! measure engine is built on.
//!
//! Every certified answer (`Inside`/`Outside`) carries the slack
//! [`Scalar::geo_slack`] in the conservative direction; anything closer than
//! that to a boundary is reported as `Straddle`.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A point of `R^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point<T> {
    coords: Vec<T>,
}

impl<T: Scalar> Point<T> {
    /// Panics if a coordinate is not finite.
    pub fn new(coords: Vec<T>) -> Self {
        assert!(
            coords.iter().all(|c| c.is_finite()),
            "point coordinates must be finite"
        );
        Self { coords }
    }

    pub fn try_new(coords: Vec<T>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Domain("point with no coordinates".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("non-finite coordinate".into()));
        }
        Ok(Self { coords })
    }

    pub fn origin(dim: usize) -> Self {
        Self {
            coords: vec![T::zero(); dim],
        }
    }

    /// `(x, 0, ..., 0)` in dimension `dim`.
    pub fn on_first_axis(x: T, dim: usize) -> Self {
        let mut p = Self::origin(dim);
        p.coords[0] = x;
        p
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    #[inline]
    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn dist2(&self, other: &Self) -> T {
        debug_assert_eq!(self.dim(), other.dim());
        self.coords
            .iter()
            .zip(&other.coords)
            .fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b))
    }

    pub fn dist(&self, other: &Self) -> T {
        self.dist2(other).sqrt()
    }

    pub fn norm(&self) -> T {
        self.coords
            .iter()
            .fold(T::zero(), |acc, &a| acc + a * a)
            .sqrt()
    }

    pub fn dot(&self, other: &Self) -> T {
        self.coords
            .iter()
            .zip(&other.coords)
            .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }

    pub fn scale(&self, k: T) -> Self {
        Self {
            coords: self.coords.iter().map(|&a| a * k).collect(),
        }
    }

    /// `ratio * self + shift`.
    pub fn affine(&self, ratio: T, shift: &Self) -> Self {
        Self {
            coords: self
                .coords
                .iter()
                .zip(&shift.coords)
                .map(|(&a, &b)| ratio * a + b)
                .collect(),
        }
    }

    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.coords.iter().zip(&other.coords) {
            match a.partial_cmp(b) {
                Some(Ordering::Equal) | None => continue,
                Some(o) => return o,
            }
        }
        self.dim().cmp(&other.dim())
    }
}

/// Closed ball `B(center, radius)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball<T> {
    pub center: Point<T>,
    pub radius: T,
}

impl<T: Scalar> Ball<T> {
    pub fn new(center: Point<T>, radius: T) -> Self {
        assert!(radius >= T::zero(), "ball radius must be nonnegative");
        Self { center, radius }
    }

    pub fn diameter(&self) -> T {
        self.radius * T::two()
    }

    pub fn volume(&self) -> T {
        unit_ball_volume::<T>(self.center.dim()) * self.radius.powi(self.center.dim() as i32)
    }
}

/// Cube `Q(center, half_width)`: the product of `[x_i - w, x_i + w]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisBox<T> {
    pub center: Point<T>,
    pub half_width: T,
}

impl<T: Scalar> AxisBox<T> {
    pub fn new(center: Point<T>, half_width: T) -> Self {
        assert!(half_width > T::zero(), "box half-width must be positive");
        Self { center, half_width }
    }

    pub fn diameter(&self) -> T {
        self.half_width * T::two() * T::of_usize(self.center.dim()).sqrt()
    }

    /// Euclidean distance from `p` to the box (zero inside).
    fn distance_to(&self, p: &Point<T>) -> T {
        self.center
            .coords()
            .iter()
            .zip(p.coords())
            .fold(T::zero(), |acc, (&c, &x)| {
                let excess = ((x - c).abs() - self.half_width).max(T::zero());
                acc + excess * excess
            })
            .sqrt()
    }
}

/// Supporting half-space `normal . x <= offset` of a hull.
#[derive(Clone, Debug, PartialEq)]
struct Facet<T> {
    normal: Point<T>,
    offset: T,
}

#[derive(Serialize, Deserialize)]
struct HullRepr<T> {
    vertices: Vec<Point<T>>,
}

/// Convex hull of a finite, nonempty set of points.
///
/// Facets are precomputed for `d <= 3`; in higher dimensions the hull never
/// certifies `Inside` and `Outside` relies on the distance iteration alone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    into = "HullRepr<T>",
    try_from = "HullRepr<T>",
    bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct PointHull<T> {
    vertices: Vec<Point<T>>,
    extreme: Vec<Point<T>>,
    facets: Vec<Facet<T>>,
    full_dim: bool,
    diameter: T,
}

impl<T: Scalar> From<PointHull<T>> for HullRepr<T> {
    fn from(h: PointHull<T>) -> Self {
        Self {
            vertices: h.vertices,
        }
    }
}

impl<T: Scalar> TryFrom<HullRepr<T>> for PointHull<T> {
    type Error = Error;
    fn try_from(r: HullRepr<T>) -> Result<Self> {
        PointHull::try_new(r.vertices)
    }
}

impl<T: Scalar> PointHull<T> {
    /// Panics on an empty vertex list or mixed dimensions.
    pub fn new(vertices: Vec<Point<T>>) -> Self {
        Self::try_new(vertices).expect("well-formed hull vertices")
    }

    pub fn try_new(vertices: Vec<Point<T>>) -> Result<Self> {
        let first = vertices
            .first()
            .ok_or_else(|| Error::Domain("hull needs at least one vertex".into()))?;
        let d = first.dim();
        if let Some(bad) = vertices.iter().find(|v| v.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: bad.dim(),
            });
        }
        let extreme = extreme_points(&vertices);
        let (facets, full_dim) = match d {
            1 => (Vec::new(), extreme.len() == 2),
            2 => polygon_facets(&extreme),
            3 => brute_force_facets(&extreme),
            _ => (Vec::new(), false),
        };
        let diameter = max_pairwise_distance(&extreme);
        Ok(Self {
            vertices,
            extreme,
            facets,
            full_dim,
            diameter,
        })
    }

    pub fn vertices(&self) -> &[Point<T>] {
        &self.vertices
    }

    /// Vertices that survive hull reduction (exact for `d <= 2`).
    pub fn extreme_vertices(&self) -> &[Point<T>] {
        &self.extreme
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].dim()
    }

    pub fn diameter(&self) -> T {
        self.diameter
    }

    pub fn centroid(&self) -> Point<T> {
        let n = T::of_usize(self.extreme.len());
        let mut acc = Point::origin(self.dim());
        for v in &self.extreme {
            acc = acc.add(v);
        }
        acc.scale(T::one() / n)
    }

    fn classify(&self, c: &Ball<T>) -> Relation {
        let slack = T::geo_slack();
        let rho = c.radius;
        let x = &c.center;
        if self.dim() == 1 {
            let (lo, hi) = (self.extreme[0].coords[0], self.extreme[self.extreme.len() - 1].coords[0]);
            let p = x.coords[0];
            if p + rho + slack < lo || p - rho - slack > hi {
                return Relation::Outside;
            }
            if lo + slack <= p - rho && p + rho + slack <= hi {
                return Relation::Inside;
            }
            return Relation::Straddle;
        }
        let mut inside = self.full_dim;
        let mut max_signed = T::neg_infinity();
        for f in &self.facets {
            let signed = f.normal.dot(x) - f.offset;
            if signed > rho + slack {
                return Relation::Outside;
            }
            if -signed < rho + slack {
                inside = false;
            }
            max_signed = max_signed.max(signed);
        }
        if inside {
            return Relation::Inside;
        }
        if self.full_dim && max_signed <= T::zero() {
            return Relation::Straddle;
        }
        let threshold = rho + slack;
        if self.dim() == 2 {
            return if polygon_distance(&self.extreme, x) > threshold {
                Relation::Outside
            } else {
                Relation::Straddle
            };
        }
        let (lower, _) = hull_distance_bounds(&self.extreme, x, threshold);
        if lower > threshold {
            Relation::Outside
        } else {
            Relation::Straddle
        }
    }
}

/// Compact convex test set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    rename_all = "snake_case",
    bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>")
)]
pub enum ConvexCandidate<T> {
    Ball(Ball<T>),
    AxisBox(AxisBox<T>),
    PointHull(PointHull<T>),
}

impl<T: Scalar> ConvexCandidate<T> {
    pub fn dim(&self) -> usize {
        match self {
            Self::Ball(b) => b.center.dim(),
            Self::AxisBox(b) => b.center.dim(),
            Self::PointHull(h) => h.dim(),
        }
    }

    /// Reference point used for deterministic tie-breaking.
    pub fn center(&self) -> Point<T> {
        match self {
            Self::Ball(b) => b.center.clone(),
            Self::AxisBox(b) => b.center.clone(),
            Self::PointHull(h) => h.centroid(),
        }
    }

    /// Image of the candidate under `x -> ratio * x + shift` (`ratio > 0`).
    pub fn mapped(&self, ratio: T, shift: &Point<T>) -> Self {
        match self {
            Self::Ball(b) => Self::Ball(Ball::new(b.center.affine(ratio, shift), b.radius * ratio)),
            Self::AxisBox(b) => Self::AxisBox(AxisBox::new(
                b.center.affine(ratio, shift),
                b.half_width * ratio,
            )),
            Self::PointHull(h) => Self::PointHull(PointHull::new(
                h.vertices.iter().map(|v| v.affine(ratio, shift)).collect(),
            )),
        }
    }
}

/// Diameter of a candidate; closed form for balls and cubes, max pairwise
/// vertex distance for hulls.
pub fn diameter<T: Scalar>(u: &ConvexCandidate<T>) -> T {
    match u {
        ConvexCandidate::Ball(b) => b.diameter(),
        ConvexCandidate::AxisBox(b) => b.diameter(),
        ConvexCandidate::PointHull(h) => h.diameter(),
    }
}

/// Certified position of a ball relative to a convex set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    Inside,
    Outside,
    Straddle,
}

/// Classifies the ball `c` against `u`. `Inside` and `Outside` are only
/// returned when the relation holds with margin [`Scalar::geo_slack`].
pub fn classify_ball<T: Scalar>(u: &ConvexCandidate<T>, c: &Ball<T>) -> Relation {
    debug_assert_eq!(u.dim(), c.center.dim());
    let slack = T::geo_slack();
    match u {
        ConvexCandidate::Ball(b) => {
            let d = b.center.dist(&c.center);
            if d + c.radius + slack <= b.radius {
                Relation::Inside
            } else if d - c.radius - slack > b.radius {
                Relation::Outside
            } else {
                Relation::Straddle
            }
        }
        ConvexCandidate::AxisBox(b) => {
            let inside = b
                .center
                .coords()
                .iter()
                .zip(c.center.coords())
                .all(|(&m, &x)| (x - m).abs() + c.radius + slack <= b.half_width);
            if inside {
                Relation::Inside
            } else if b.distance_to(&c.center) > c.radius + slack {
                Relation::Outside
            } else {
                Relation::Straddle
            }
        }
        ConvexCandidate::PointHull(h) => h.classify(c),
    }
}

/// Points of the lattice `Z^d / (2n)` in the closed ball `B(0, 1/2)`.
///
/// `(-1/2, 0, ..., 0)` comes first and `(1/2, 0, ..., 0)` second; the rest
/// follow in lexicographic order. Membership is decided in exact integer
/// arithmetic (`|k|^2 <= n^2` for `k` in `Z^d`).
pub fn lattice_points<T: Scalar>(d: usize, n: u64) -> Vec<Point<T>> {
    assert!(d >= 1 && n >= 1, "lattice needs d >= 1 and n >= 1");
    let n = n as i64;
    let mut ints: Vec<Vec<i64>> = Vec::new();
    let mut cur = Vec::with_capacity(d);
    enumerate_lattice(d, n, n * n, &mut cur, &mut ints);
    let mut b1 = vec![0i64; d];
    b1[0] = -n;
    let mut b2 = vec![0i64; d];
    b2[0] = n;
    let denom = T::lit((2 * n) as f64);
    let to_point = |k: &[i64]| Point::new(k.iter().map(|&x| T::lit(x as f64) / denom).collect());
    let mut out = Vec::with_capacity(ints.len());
    out.push(to_point(&b1));
    out.push(to_point(&b2));
    out.extend(ints.iter().filter(|k| **k != b1 && **k != b2).map(|k| to_point(k)));
    out
}

/// Number of points [`lattice_points`] would return, without materializing them.
pub fn lattice_count(d: usize, n: u64) -> u64 {
    fn count(d: usize, n: i64, budget: i64) -> u64 {
        if d == 0 {
            return 1;
        }
        let mut total = 0;
        for k in -n..=n {
            let rest = budget - k * k;
            if rest >= 0 {
                total += count(d - 1, n, rest);
            }
        }
        total
    }
    count(d, n as i64, (n * n) as i64)
}

fn enumerate_lattice(d: usize, n: i64, budget: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
    if cur.len() == d {
        out.push(cur.clone());
        return;
    }
    for k in -n..=n {
        let rest = budget - k * k;
        if rest < 0 {
            continue;
        }
        cur.push(k);
        enumerate_lattice(d, n, rest, cur, out);
        cur.pop();
    }
}

/// Lebesgue measure of the unit ball in `R^d`, `pi^{d/2} / Gamma(d/2 + 1)`.
pub fn unit_ball_volume<T: Scalar>(d: usize) -> T {
    // omega_0 = 1, omega_1 = 2, omega_d = omega_{d-2} * 2 pi / d
    let mut even = T::one();
    let mut odd = T::two();
    for k in 2..=d {
        let next = T::two() * T::pi() / T::of_usize(k);
        if k % 2 == 0 {
            even = even * next;
        } else {
            odd = odd * next;
        }
    }
    if d % 2 == 0 {
        even
    } else {
        odd
    }
}

/// Largest `d`-volume of a set with the given diameter: `omega_d 2^{-d} diam^d`.
pub fn isodiametric_bound<T: Scalar>(diam: T, d: usize) -> T {
    unit_ball_volume::<T>(d) * (diam / T::two()).powi(d as i32)
}

/// Points whose convex hull equals that of `points`: the two ends in `d = 1`,
/// the counter-clockwise hull polygon in `d = 2`, the deduplicated set above.
pub fn extreme_points<T: Scalar>(points: &[Point<T>]) -> Vec<Point<T>> {
    match points.first().map(Point::dim) {
        None => Vec::new(),
        Some(1) => interval_ends(points),
        Some(2) => monotone_chain(points),
        Some(_) => dedup_points(points),
    }
}

/// Max pairwise Euclidean distance among `points` (0 for fewer than two).
pub fn max_pairwise_distance<T: Scalar>(points: &[Point<T>]) -> T {
    if points.first().map_or(false, |p| p.dim() == 1) {
        let (lo, hi) = points.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), p| {
            (lo.min(p.coords[0]), hi.max(p.coords[0]))
        });
        return (hi - lo).max(T::zero());
    }
    let mut best = T::zero();
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.max(a.dist2(b));
        }
    }
    best.sqrt()
}

/// Lower and upper bounds on `dist(p, conv(vertices))` from a Frank-Wolfe
/// projection. Iteration stops as soon as the bounds decide `threshold`.
/// Distance from `p` to the polygon (or segment, or point) with vertices in
/// boundary order; `p` is assumed outside when the polygon is full.
fn polygon_distance<T: Scalar>(ring: &[Point<T>], p: &Point<T>) -> T {
    if ring.len() == 1 {
        return ring[0].dist(p);
    }
    let mut best = T::infinity();
    for i in 0..ring.len() {
        let a = &ring[i];
        let b = &ring[(i + 1) % ring.len()];
        let e = b.sub(a);
        let len2 = e.dot(&e);
        let t = if len2 > T::zero() {
            (p.sub(a).dot(&e) / len2).max(T::zero()).min(T::one())
        } else {
            T::zero()
        };
        best = best.min(a.add(&e.scale(t)).dist(p));
    }
    best
}

fn hull_distance_bounds<T: Scalar>(vertices: &[Point<T>], p: &Point<T>, threshold: T) -> (T, T) {
    const MAX_ITERS: usize = 256;
    let mut y = vertices
        .iter()
        .min_by(|a, b| a.dist2(p).partial_cmp(&b.dist2(p)).unwrap_or(Ordering::Equal))
        .expect("nonempty hull")
        .clone();
    let mut lower = T::zero();
    let mut upper = y.dist(p);
    for _ in 0..MAX_ITERS {
        let u = p.sub(&y);
        let un = u.norm();
        if un == T::zero() {
            return (T::zero(), T::zero());
        }
        upper = upper.min(un);
        let (v, support) = vertices
            .iter()
            .map(|v| (v, u.dot(v)))
            .fold((None, T::neg_infinity()), |(bv, bs), (v, s)| {
                if s > bs {
                    (Some(v), s)
                } else {
                    (bv, bs)
                }
            });
        let v = v.expect("nonempty hull");
        lower = lower.max((u.dot(p) - support) / un);
        if lower > threshold || upper <= threshold {
            break;
        }
        let step = v.sub(&y);
        let len2 = step.dot(&step);
        if len2 == T::zero() {
            break;
        }
        let t = (u.dot(&step) / len2).max(T::zero()).min(T::one());
        if t == T::zero() {
            break;
        }
        y = y.add(&step.scale(t));
    }
    (lower.max(T::zero()), upper)
}

fn interval_ends<T: Scalar>(points: &[Point<T>]) -> Vec<Point<T>> {
    let lo = points
        .iter()
        .min_by(|a, b| a.coords[0].partial_cmp(&b.coords[0]).unwrap_or(Ordering::Equal))
        .unwrap();
    let hi = points
        .iter()
        .max_by(|a, b| a.coords[0].partial_cmp(&b.coords[0]).unwrap_or(Ordering::Equal))
        .unwrap();
    if lo == hi {
        vec![lo.clone()]
    } else {
        vec![lo.clone(), hi.clone()]
    }
}

fn dedup_points<T: Scalar>(points: &[Point<T>]) -> Vec<Point<T>> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.lex_cmp(b));
    pts.dedup();
    pts
}

fn cross2<T: Scalar>(o: &Point<T>, a: &Point<T>, b: &Point<T>) -> T {
    (a.coords[0] - o.coords[0]) * (b.coords[1] - o.coords[1])
        - (a.coords[1] - o.coords[1]) * (b.coords[0] - o.coords[0])
}

/// Andrew's monotone chain; counter-clockwise, collinear points dropped.
fn monotone_chain<T: Scalar>(points: &[Point<T>]) -> Vec<Point<T>> {
    let pts = dedup_points(points);
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Point<T>> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross2(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= T::zero() {
            lower.pop();
        }
        lower.push(p.clone());
    }
    let mut upper: Vec<Point<T>> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross2(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= T::zero() {
            upper.pop();
        }
        upper.push(p.clone());
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn polygon_facets<T: Scalar>(hull: &[Point<T>]) -> (Vec<Facet<T>>, bool) {
    if hull.len() < 3 {
        return (Vec::new(), false);
    }
    let mut facets = Vec::with_capacity(hull.len());
    for i in 0..hull.len() {
        let a = &hull[i];
        let b = &hull[(i + 1) % hull.len()];
        let e = b.sub(a);
        // outward normal of a counter-clockwise edge
        let n = Point::new(vec![e.coords[1], -e.coords[0]]);
        let len = n.norm();
        if len == T::zero() {
            continue;
        }
        let n = n.scale(T::one() / len);
        let offset = hull
            .iter()
            .map(|v| n.dot(v))
            .fold(T::neg_infinity(), |m, x| m.max(x));
        facets.push(Facet { normal: n, offset });
    }
    (facets, true)
}

fn brute_force_facets<T: Scalar>(pts: &[Point<T>]) -> (Vec<Facet<T>>, bool) {
    let m = pts.len();
    if m < 4 {
        return (Vec::new(), false);
    }
    let scale = max_pairwise_distance(pts);
    let tol = T::geo_slack() * scale.max(T::one());
    let mut facets: Vec<Facet<T>> = Vec::new();
    let mut full_dim = false;
    for i in 0..m {
        for j in i + 1..m {
            for k in j + 1..m {
                let u = pts[j].sub(&pts[i]);
                let v = pts[k].sub(&pts[i]);
                let (u, v) = (u.coords(), v.coords());
                let n = Point::new(vec![
                    u[1] * v[2] - u[2] * v[1],
                    u[2] * v[0] - u[0] * v[2],
                    u[0] * v[1] - u[1] * v[0],
                ]);
                let len = n.norm();
                if len <= tol * scale.max(T::one()) {
                    continue;
                }
                let n = n.scale(T::one() / len);
                let base = n.dot(&pts[i]);
                let (lo, hi) = pts.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), p| {
                    let s = n.dot(p);
                    (lo.min(s), hi.max(s))
                });
                if hi - lo > tol {
                    full_dim = true;
                }
                for (normal, offset, ok) in [
                    (n.clone(), hi, hi - base <= tol),
                    (n.scale(-T::one()), -lo, base - lo <= tol),
                ] {
                    if ok
                        && !facets.iter().any(|f| {
                            f.normal.dist(&normal) <= tol && (f.offset - offset).abs() <= tol
                        })
                    {
                        facets.push(Facet { normal, offset });
                    }
                }
            }
        }
    }
    (facets, full_dim)
}
