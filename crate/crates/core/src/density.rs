//! Bounds on `H^s(K)` through the convex density formula
//! `H^s(K)^{-1} = max { mu(U) / |U|^s : U convex, |U| >= Delta }`.
//!
//! Every candidate with a certified `mu(U) >= lo` yields the upper bound
//! `|U|^s / lo`. Lower bounds are rigorous on the line (cylinder fattening),
//! analytic for the `t = 0` member of the construction, and heuristic
//! otherwise.

use std::cmp::Ordering;
use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::budget::Budget;
use crate::construction::{ratio_bound_max, ConstructionParams};
use crate::error::{Error, Result};
use crate::geometry::{diameter, AxisBox, Ball, ConvexCandidate, Point, PointHull};
use crate::ifs::{check_ssc, Cylinder};
use crate::interval::Interval;
use crate::measure::{measure_of, MeasureInterval, NaturalMeasure};
use crate::scalar::Scalar;

/// A candidate set with its certified measure and density ratio.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct DensityRecord<T> {
    pub candidate: ConvexCandidate<T>,
    pub mu: MeasureInterval<T>,
    pub diam: T,
    pub ratio: Interval<T>,
}

impl<T: Scalar> DensityRecord<T> {
    /// `diam^s / mu.lo`, or infinity when nothing is certified.
    pub fn upper_bound(&self, s: T) -> T {
        if self.mu.lo > T::zero() {
            self.diam.powf(s) / self.mu.lo
        } else {
            T::infinity()
        }
    }
}

/// Enclosure of `H^s(K)` with the provenance of each end.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct HausdorffEstimate<T> {
    pub lower: T,
    pub upper: T,
    pub lower_rigorous: bool,
    pub upper_rigorous: bool,
    pub witness: DensityRecord<T>,
}

impl<T: Scalar> HausdorffEstimate<T> {
    pub fn contains(&self, x: T) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn width(&self) -> T {
        self.upper - self.lower
    }
}

/// Knobs of the candidate search.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig<T> {
    /// Measure tolerance while screening and climbing.
    pub tol_search: T,
    /// Measure tolerance for the final evaluation of the leaders.
    pub tol_final: T,
    pub climb_rounds: u32,
    /// Number of leading candidates that are hill-climbed.
    pub climb_top: usize,
    /// Random extra balls (dimension 2 and up).
    pub jitter: usize,
    pub seed: u64,
    /// Refinement nodes allowed per candidate evaluation.
    pub candidate_nodes: u64,
    pub budget: Budget,
}

impl<T: Scalar> SearchConfig<T> {
    fn eval_budget(&self) -> Budget {
        Budget {
            node_cap: self.budget.node_cap.min(self.candidate_nodes),
            ..self.budget
        }
    }
}

impl<T: Scalar> Default for SearchConfig<T> {
    fn default() -> Self {
        Self {
            tol_search: T::lit(1e-4),
            tol_final: T::lit(1e-8),
            climb_rounds: 20,
            climb_top: 4,
            jitter: 32,
            seed: 0,
            candidate_nodes: 200_000,
            budget: Budget::default(),
        }
    }
}

/// Certified `mu(U) / |U|^s`.
pub fn ratio_of<T: Scalar>(
    u: &ConvexCandidate<T>,
    m: &NaturalMeasure<T>,
    tol: T,
    budget: &Budget,
) -> Result<DensityRecord<T>> {
    let diam = diameter(u);
    if !(diam > T::zero()) {
        return Err(Error::Domain("candidate has zero diameter".into()));
    }
    let mu = measure_of(u, m, tol, budget)?;
    Ok(record(u.clone(), mu, diam, m.s()))
}

fn record<T: Scalar>(candidate: ConvexCandidate<T>, mu: MeasureInterval<T>, diam: T, s: T) -> DensityRecord<T> {
    // rounding guard so that diam^s / mu.lo stays an upper bound
    let diam = diam * (T::one() + T::lit(4.0) * T::epsilon());
    let scale = diam.powf(s);
    DensityRecord {
        candidate,
        mu,
        diam,
        ratio: Interval::new(mu.lo / scale, mu.hi / scale),
    }
}

/// Like [`ratio_of`] but keeps the partial enclosure when the budget runs
/// out, and drops degenerate candidates.
fn evaluate<T: Scalar>(
    u: ConvexCandidate<T>,
    m: &NaturalMeasure<T>,
    tol: T,
    budget: &Budget,
) -> Option<DensityRecord<T>> {
    let diam = diameter(&u);
    if !(diam > T::zero()) {
        return None;
    }
    let mu = match measure_of(&u, m, tol, budget) {
        Ok(mu) => mu,
        Err(Error::BudgetExceeded {
            partial: Some((lo, hi)),
            ..
        }) => MeasureInterval::new(T::lit(lo), T::lit(hi)),
        Err(_) => return None,
    };
    Some(record(u, mu, diam, m.s()))
}

/// Best first: larger certified ratio, then smaller diameter, then
/// lexicographically smaller center.
fn rank<T: Scalar>(a: &DensityRecord<T>, b: &DensityRecord<T>) -> Ordering {
    b.ratio
        .lo
        .partial_cmp(&a.ratio.lo)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.diam.partial_cmp(&b.diam).unwrap_or(Ordering::Equal))
        .then_with(|| a.candidate.center().lex_cmp(&b.candidate.center()))
}

/// Result of a candidate search.
#[derive(Clone, Debug)]
pub struct Optimized<T> {
    pub best: DensityRecord<T>,
    /// Largest `ratio.hi` seen over every evaluated candidate.
    pub max_ratio_hi: T,
    pub evaluated: usize,
}

impl<T: Scalar> Optimized<T> {
    pub fn upper(&self, s: T) -> T {
        self.best.upper_bound(s)
    }

    /// `1 / max ratio.hi`, an uncertified estimate of `H^s` from below.
    pub fn heuristic_lower(&self) -> T {
        T::one() / self.max_ratio_hi
    }
}

/// `|K|`, exact for homothety systems: the hull of the attractor is the hull
/// of the fixed points.
fn attractor_diameter<T: Scalar>(m: &NaturalMeasure<T>) -> T {
    crate::geometry::max_pairwise_distance(m.hull_points())
}

fn first_level<T: Scalar>(m: &NaturalMeasure<T>) -> Vec<Cylinder<T>> {
    let root = Cylinder::root(m.ifs().dimension());
    (0..m.ifs().len()).map(|j| m.child(&root, j)).collect()
}

fn mapped_hull_points<T: Scalar>(m: &NaturalMeasure<T>, c: &Cylinder<T>) -> Vec<Point<T>> {
    m.hull_points().iter().map(|p| c.apply(p)).collect()
}

/// Radii `Delta/2 * 2^{j/4}` up to `|K|`.
fn radius_grid<T: Scalar>(delta: T, diam_k: T) -> Vec<T> {
    let step = T::two().powf(T::lit(0.25));
    let mut out = Vec::new();
    let mut r = delta / T::two();
    while r <= diam_k && out.len() < 512 {
        out.push(r);
        r = r * step;
    }
    if out.is_empty() {
        out.push(diam_k / T::two());
    }
    out
}

fn cluster_sizes(ell: usize) -> Vec<usize> {
    let mut out = vec![];
    let mut k = 1usize;
    while k < ell {
        out.push(k);
        k = (k + 1).max(k * 3 / 2);
    }
    out.push(ell);
    out
}

fn generate<T: Scalar>(m: &NaturalMeasure<T>, delta: T, cfg: &SearchConfig<T>) -> Vec<ConvexCandidate<T>> {
    let d = m.ifs().dimension();
    let cap = cfg.budget.candidate_cap as usize;
    let mut out = vec![ConvexCandidate::PointHull(PointHull::new(m.hull_points().to_vec()))];
    if cap == 0 {
        return out;
    }
    let diam_k = attractor_diameter(m);
    let cyls = first_level(m);
    let hat = m.invariant_ball();
    let mut centers: Vec<Point<T>> = cyls.iter().map(|c| c.apply(&hat.center)).collect();
    centers.push(hat.center.clone());
    let radii = radius_grid(delta, diam_k);

    // hulls of clusters of first-level pieces
    let mut hulls = Vec::new();
    if d == 1 {
        let mut order: Vec<usize> = (0..cyls.len()).collect();
        let x = |i: usize| centers[i].coords()[0];
        order.sort_by(|&a, &b| x(a).partial_cmp(&x(b)).unwrap_or(Ordering::Equal));
        let ends: Vec<(T, T)> = order
            .iter()
            .map(|&i| {
                let pts = mapped_hull_points(m, &cyls[i]);
                let lo = pts.iter().map(|p| p.coords()[0]).fold(T::infinity(), T::min);
                let hi = pts.iter().map(|p| p.coords()[0]).fold(T::neg_infinity(), T::max);
                (lo, hi)
            })
            .collect();
        let lens: Vec<usize> = if ends.len() <= 64 {
            (1..=ends.len()).collect()
        } else {
            cluster_sizes(ends.len())
        };
        for len in lens {
            for a in 0..=ends.len() - len {
                let (lo, hi) = (ends[a].0, ends[a + len - 1].1);
                hulls.push(ConvexCandidate::PointHull(PointHull::new(vec![
                    Point::new(vec![lo]),
                    Point::new(vec![hi]),
                ])));
            }
        }
    } else {
        let max_k = if d >= 3 { 16 } else { 64 };
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        for i in 0..cyls.len() {
            let mut near: Vec<usize> = (0..cyls.len()).collect();
            near.sort_by(|&a, &b| {
                centers[i]
                    .dist2(&centers[a])
                    .partial_cmp(&centers[i].dist2(&centers[b]))
                    .unwrap_or(Ordering::Equal)
                    .then(a.cmp(&b))
            });
            for k in cluster_sizes(cyls.len()).into_iter().filter(|&k| k >= 2 && k <= max_k) {
                let mut members = near[..k].to_vec();
                members.sort_unstable();
                if !seen.insert(members.clone()) {
                    continue;
                }
                let verts: Vec<Point<T>> = members
                    .iter()
                    .flat_map(|&j| mapped_hull_points(m, &cyls[j]))
                    .collect();
                hulls.push(ConvexCandidate::PointHull(PointHull::new(verts)));
            }
        }
    }

    let per_center = radii.len() * if d >= 2 { 2 } else { 1 };
    let room = cap.saturating_sub(hulls.len().min(cap / 2)).max(per_center);
    let stride = (centers.len() * per_center).div_ceil(room).max(1);
    let sqrt_d = T::of_usize(d).sqrt();
    for c in centers.iter().step_by(stride) {
        for &r in &radii {
            out.push(ConvexCandidate::Ball(Ball::new(c.clone(), r)));
            if d >= 2 {
                out.push(ConvexCandidate::AxisBox(AxisBox::new(c.clone(), r / sqrt_d)));
            }
        }
    }
    let hull_room = cap.saturating_sub(out.len()).max(1);
    let hull_stride = hulls.len().div_ceil(hull_room).max(1);
    out.extend(hulls.into_iter().step_by(hull_stride));

    if d >= 2 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for _ in 0..cfg.jitter {
            let c = &centers[rng.gen_range(0..centers.len())];
            let r = radii[rng.gen_range(0..radii.len())];
            let offset: Vec<T> = (0..d)
                .map(|_| T::lit(rng.gen_range(-1.0..1.0)) * delta / T::two())
                .collect();
            out.push(ConvexCandidate::Ball(Ball::new(c.add(&Point::new(offset)), r)));
        }
    }
    out
}

fn neighbours<T: Scalar>(u: &ConvexCandidate<T>, step: T, min_diam: T) -> Vec<ConvexCandidate<T>> {
    let d = u.dim();
    let axis = |i: usize, sign: T| {
        let mut v = vec![T::zero(); d];
        v[i] = sign * step;
        Point::new(v)
    };
    let mut out = Vec::new();
    match u {
        ConvexCandidate::Ball(b) => {
            for i in 0..d {
                for sign in [T::one(), -T::one()] {
                    out.push(ConvexCandidate::Ball(Ball::new(b.center.add(&axis(i, sign)), b.radius)));
                }
            }
            for r in [b.radius + step, b.radius - step] {
                out.push(ConvexCandidate::Ball(Ball::new(b.center.clone(), r)));
            }
        }
        ConvexCandidate::AxisBox(b) => {
            for i in 0..d {
                for sign in [T::one(), -T::one()] {
                    out.push(ConvexCandidate::AxisBox(AxisBox::new(
                        b.center.add(&axis(i, sign)),
                        b.half_width,
                    )));
                }
            }
            for h in [b.half_width + step, b.half_width - step] {
                out.push(ConvexCandidate::AxisBox(AxisBox::new(b.center.clone(), h)));
            }
        }
        ConvexCandidate::PointHull(h) if d == 1 => {
            let ex = h.extreme_vertices();
            let lo = ex.iter().map(|p| p.coords()[0]).fold(T::infinity(), T::min);
            let hi = ex.iter().map(|p| p.coords()[0]).fold(T::neg_infinity(), T::max);
            for (a, b) in [
                (lo - step, hi),
                (lo + step, hi),
                (lo, hi - step),
                (lo, hi + step),
            ] {
                if a < b {
                    out.push(ConvexCandidate::PointHull(PointHull::new(vec![
                        Point::new(vec![a]),
                        Point::new(vec![b]),
                    ])));
                }
            }
        }
        ConvexCandidate::PointHull(h) => {
            for i in 0..d {
                for sign in [T::one(), -T::one()] {
                    out.push(u.mapped(T::one(), &axis(i, sign)));
                }
            }
            let c = h.centroid();
            let diam = h.diameter();
            for k in [T::one() + step / diam, T::one() - step / diam] {
                if k > T::zero() {
                    // x -> c + k (x - c)
                    out.push(u.mapped(k, &c.scale(T::one() - k)));
                }
            }
        }
    }
    out.retain(|c| diameter(c) >= min_diam && diameter(c) > T::zero());
    out
}

fn climb<T: Scalar>(
    start: DensityRecord<T>,
    m: &NaturalMeasure<T>,
    delta: T,
    cfg: &SearchConfig<T>,
    seen_hi: &mut T,
    evaluated: &mut usize,
) -> DensityRecord<T> {
    let budget = cfg.eval_budget();
    let mut cur = start;
    let mut step = cur.diam / T::lit(4.0);
    for _ in 0..cfg.climb_rounds {
        for _ in 0..8 {
            let next: Vec<DensityRecord<T>> = neighbours(&cur.candidate, step, delta)
                .into_par_iter()
                .filter_map(|c| evaluate(c, m, cfg.tol_search, &budget))
                .collect();
            *evaluated += next.len();
            for r in &next {
                *seen_hi = seen_hi.max(r.ratio.hi);
            }
            match next.into_iter().min_by(rank) {
                Some(best) if best.ratio.lo > cur.ratio.lo => cur = best,
                _ => break,
            }
        }
        step = step / T::two();
    }
    cur
}

/// Searches balls, cubes and cluster hulls for the largest certified
/// density ratio, hill-climbs the leaders and re-evaluates them tightly.
///
/// The conv(K) hull is always a candidate, so the result never exceeds
/// `|K|^s`.
pub fn optimize_upper<T: Scalar>(m: &NaturalMeasure<T>, delta: T, cfg: &SearchConfig<T>) -> Optimized<T> {
    let budget = cfg.eval_budget();
    let candidates = generate(m, delta, cfg);
    let mut records: Vec<DensityRecord<T>> = candidates
        .into_par_iter()
        .filter_map(|c| evaluate(c, m, cfg.tol_search, &budget))
        .collect();
    let mut evaluated = records.len();
    let mut max_hi = records.iter().fold(T::zero(), |a, r| a.max(r.ratio.hi));
    records.sort_by(rank);
    records.truncate(cfg.climb_top.max(1));

    let mut leaders = Vec::new();
    for r in records {
        let climbed = if cfg.budget.candidate_cap == 0 {
            r.clone()
        } else {
            climb(r.clone(), m, delta, cfg, &mut max_hi, &mut evaluated)
        };
        leaders.push(r);
        leaders.push(climbed);
    }
    let mut finals: Vec<DensityRecord<T>> = leaders
        .into_par_iter()
        .filter_map(|r| evaluate(r.candidate, m, cfg.tol_final, &budget))
        .collect();
    evaluated += finals.len();
    for r in &finals {
        max_hi = max_hi.max(r.ratio.hi);
    }
    finals.sort_by(rank);
    let best = finals.swap_remove(0);
    Optimized {
        best,
        max_ratio_hi: max_hi,
        evaluated,
    }
}

/// `1 / max ratio.hi` over the same sweep as [`optimize_upper`]; not
/// certified.
pub fn heuristic_lower<T: Scalar>(m: &NaturalMeasure<T>, delta: T, cfg: &SearchConfig<T>) -> T {
    optimize_upper(m, delta, cfg).heuristic_lower()
}

/// Largest fattening depth whose cylinder count fits the budget.
pub fn auto_fattening_depth(ell: usize, budget: &Budget) -> u32 {
    let pair_side = (2.0 * budget.pair_cap as f64).sqrt();
    let cap = pair_side.min(budget.node_cap as f64);
    let mut k = 0u32;
    while k < 12 && (ell as f64).powi(k as i32 + 1) <= cap {
        k += 1;
    }
    k
}

/// Certified lower bound on `H^s(K)` for systems on the line.
///
/// The depth-`k` cylinders are replaced by the hulls of their attractor
/// pieces; overlapping hulls are merged into groups. An interval `U`
/// meeting groups `A..=B` has `mu(U)` at most their total weight and
/// `|U| >= max(lo(B) - hi(A), Delta)`; the reciprocal of the largest such
/// ratio bounds `H^s` from below.
pub fn rigorous_lower_1d<T: Scalar>(m: &NaturalMeasure<T>, delta: T, k_depth: u32, budget: &Budget) -> Result<T> {
    if m.ifs().dimension() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: m.ifs().dimension(),
        });
    }
    let ell = m.ifs().len() as f64;
    let count = ell.powi(k_depth as i32);
    if count > budget.node_cap as f64 {
        return Err(Error::BudgetExceeded {
            what: "fattening cylinders",
            partial: None,
        });
    }
    let s = m.s();
    let hp: Vec<T> = m.hull_points().iter().map(|p| p.coords()[0]).collect();
    let (k_lo, k_hi) = (
        hp.iter().copied().fold(T::infinity(), T::min),
        hp.iter().copied().fold(T::neg_infinity(), T::max),
    );
    let hat = m.invariant_ball();
    let widen = T::lit(16.0) * T::epsilon() * (hat.center.norm() + hat.radius);

    let mut pieces: Vec<(T, T, T)> = Vec::with_capacity(count as usize);
    let mut stack = vec![Cylinder::root(1)];
    while let Some(c) = stack.pop() {
        if c.depth == k_depth {
            let a = c.apply(&Point::new(vec![k_lo])).coords()[0];
            let b = c.apply(&Point::new(vec![k_hi])).coords()[0];
            pieces.push((a - widen, b + widen, c.weight));
        } else {
            stack.extend((0..m.ifs().len()).map(|j| m.child(&c, j)));
        }
    }
    pieces.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(Ordering::Equal));

    let mut groups: Vec<(T, T, T)> = Vec::new();
    for (lo, hi, w) in pieces {
        match groups.last_mut() {
            Some(g) if lo <= g.1 => {
                g.1 = g.1.max(hi);
                g.2 = g.2 + w;
            }
            _ => groups.push((lo, hi, w)),
        }
    }
    let g = groups.len() as f64;
    if g * (g + 1.0) / 2.0 > budget.pair_cap as f64 {
        return Err(Error::BudgetExceeded {
            what: "fattening pairs",
            partial: None,
        });
    }
    let mut prefix = vec![T::zero()];
    for grp in &groups {
        let last = *prefix.last().expect("nonempty");
        prefix.push(last + grp.2);
    }
    let round = T::one() + T::lit(4.0 * (count + 4.0)) * T::epsilon();
    let delta_s = delta.powf(s);
    let best = (0..groups.len())
        .into_par_iter()
        .map(|a| {
            let mut best = T::zero();
            for b in a..groups.len() {
                let mass = (prefix[b + 1] - prefix[a]).min(T::one());
                let len = if a == b {
                    delta_s
                } else {
                    (groups[b].0 - groups[a].1).max(delta).powf(s)
                };
                best = best.max(mass / len);
            }
            best
        })
        .reduce(T::zero, T::max);
    Ok(T::one() / (best * round))
}

/// `(x + sqrt(d)/n)^d / ((1 - sqrt(d)/(2n))^d x^s)` for `x in [1/(4n), 1]`.
pub fn lemma22_ratio_bound<T: Scalar>(n: u64, d: usize, s: T, x: T) -> Result<T> {
    if n == 0 {
        return Err(Error::Domain("n must be positive".into()));
    }
    let nf = T::lit(n as f64);
    let lo = T::one() / (T::lit(4.0) * nf);
    if !(x >= lo && x <= T::one()) {
        return Err(Error::Domain(format!("x = {x} outside [1/(4n), 1]")));
    }
    let sd = T::of_usize(d).sqrt();
    let di = d as i32;
    Ok((x + sd / nf).powi(di) / ((T::one() - sd / (T::two() * nf)).powi(di) * x.powf(s)))
}

/// Analytic lower bound `1 / max_x lemma22_ratio_bound` on `H^s(K_0)`;
/// zero when the bound is undefined at this `n`.
pub fn certified_k0_bound<T: Scalar>(params: &ConstructionParams<T>) -> T {
    match ratio_bound_max(params.n, params.d, params.s) {
        Some(max) => T::one() / max,
        None => T::zero(),
    }
}

/// Options for [`estimate`].
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateOptions<T> {
    pub search: SearchConfig<T>,
    /// Fattening depth on the line; chosen from the budget when `None`.
    pub fattening_depth: Option<u32>,
    /// An independently certified lower bound to merge in.
    pub analytic_lower: Option<T>,
    /// Clear both rigor flags (hand-picked parameters).
    pub downgrade: bool,
}

impl<T: Scalar> Default for EstimateOptions<T> {
    fn default() -> Self {
        Self {
            search: SearchConfig::default(),
            fattening_depth: None,
            analytic_lower: None,
            downgrade: false,
        }
    }
}

/// Full enclosure of `H^s(K)`: certified upper bound from the candidate
/// search, rigorous lower bound on the line or when an analytic one is
/// supplied, heuristic lower bound otherwise.
pub fn estimate<T: Scalar>(m: &NaturalMeasure<T>, opts: &EstimateOptions<T>) -> Result<HausdorffEstimate<T>> {
    let delta = check_ssc(m.ifs(), &opts.search.budget)
        .gap()
        .ok_or(Error::SscUnknown)?;
    let opt = optimize_upper(m, delta, &opts.search);
    let upper = opt.upper(m.s());

    let mut rigorous: Option<T> = opts.analytic_lower;
    if m.ifs().dimension() == 1 {
        let k = opts
            .fattening_depth
            .unwrap_or_else(|| auto_fattening_depth(m.ifs().len(), &opts.search.budget));
        if let Ok(lo) = rigorous_lower_1d(m, delta, k, &opts.search.budget) {
            rigorous = Some(rigorous.map_or(lo, |a| a.max(lo)));
        }
    }
    let (lower, lower_rigorous) = match rigorous {
        Some(lo) => (lo, true),
        None => (opt.heuristic_lower().min(upper), false),
    };
    Ok(HausdorffEstimate {
        lower,
        upper,
        lower_rigorous: lower_rigorous && !opts.downgrade,
        upper_rigorous: !opts.downgrade,
        witness: opt.best,
    })
}
