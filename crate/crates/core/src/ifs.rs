//! Iterated function systems of contracting homotheties `x -> r x + a`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::geometry::{max_pairwise_distance, Ball, Point};
use crate::interval::Interval;
use crate::scalar::Scalar;

/// The homothety `x -> ratio * x + translation`, `0 < ratio < 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Similitude<T> {
    pub ratio: T,
    pub translation: Point<T>,
}

impl<T: Scalar> Similitude<T> {
    pub fn new(ratio: T, translation: Point<T>) -> Result<Self> {
        if !(ratio > T::zero() && ratio < T::one()) {
            return Err(Error::InvalidIfs(format!("ratio {ratio} not in (0, 1)")));
        }
        Ok(Self { ratio, translation })
    }

    pub fn apply(&self, x: &Point<T>) -> Point<T> {
        x.affine(self.ratio, &self.translation)
    }

    /// `translation / (1 - ratio)`.
    pub fn fixed_point(&self) -> Point<T> {
        self.translation.scale(T::one() / (T::one() - self.ratio))
    }
}

#[derive(Serialize, Deserialize)]
struct IfsRepr<T> {
    dimension: usize,
    maps: Vec<Similitude<T>>,
}

/// A finite family of at least two homotheties of `R^d`.
///
/// Serializes as `{"dimension": d, "maps": [{"ratio": r, "translation": [..]}, ..]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    into = "IfsRepr<T>",
    try_from = "IfsRepr<T>",
    bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct Ifs<T> {
    dimension: usize,
    maps: Vec<Similitude<T>>,
}

impl<T: Scalar> From<Ifs<T>> for IfsRepr<T> {
    fn from(f: Ifs<T>) -> Self {
        Self {
            dimension: f.dimension,
            maps: f.maps,
        }
    }
}

impl<T: Scalar> TryFrom<IfsRepr<T>> for Ifs<T> {
    type Error = Error;
    fn try_from(r: IfsRepr<T>) -> Result<Self> {
        Ifs::new(r.dimension, r.maps)
    }
}

impl<T: Scalar> Ifs<T> {
    pub fn new(dimension: usize, maps: Vec<Similitude<T>>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidIfs("dimension must be positive".into()));
        }
        if maps.len() < 2 {
            return Err(Error::InvalidIfs(format!("need at least 2 maps, got {}", maps.len())));
        }
        for m in &maps {
            if !(m.ratio > T::zero() && m.ratio < T::one()) {
                return Err(Error::InvalidIfs(format!("ratio {} not in (0, 1)", m.ratio)));
            }
            if m.translation.dim() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    found: m.translation.dim(),
                });
            }
            if m.translation.coords().iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidIfs("non-finite translation".into()));
            }
        }
        Ok(Self { dimension, maps })
    }

    /// Convenience constructor from `(ratio, translation)` pairs.
    pub fn from_parts(dimension: usize, parts: &[(T, Vec<T>)]) -> Result<Self> {
        let maps = parts
            .iter()
            .map(|(r, a)| Point::try_new(a.clone()).and_then(|p| Similitude::new(*r, p)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(dimension, maps)
    }

    #[inline]
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    #[inline]
    pub fn maps(&self) -> &[Similitude<T>] {
        &self.maps
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// The common ratio, if every map shares it.
    pub fn common_ratio(&self) -> Option<T> {
        let r = self.maps[0].ratio;
        self.maps.iter().all(|m| m.ratio == r).then_some(r)
    }

    pub fn fixed_points(&self) -> Vec<Point<T>> {
        self.maps.iter().map(Similitude::fixed_point).collect()
    }

    /// The system conjugated by `x -> lambda x`; its attractor is `lambda K`.
    pub fn conjugated(&self, lambda: T) -> Self {
        Self {
            dimension: self.dimension,
            maps: self
                .maps
                .iter()
                .map(|m| Similitude {
                    ratio: m.ratio,
                    translation: m.translation.scale(lambda),
                })
                .collect(),
        }
    }
}

/// The `s > 0` with `sum r_i^s = 1`.
pub fn similarity_dimension<T: Scalar>(f: &Ifs<T>) -> T {
    let ell = T::of_usize(f.len());
    if let Some(r) = f.common_ratio() {
        return ell.ln() / (T::one() / r).ln();
    }
    let g = |s: T| f.maps.iter().fold(T::zero(), |acc, m| acc + m.ratio.powf(s)) - T::one();
    let mut lo = T::zero();
    let mut hi = T::of_usize(f.dimension.max(1));
    while g(hi) >= T::zero() {
        lo = hi;
        hi = hi * T::two();
    }
    let tol = T::lit(1e-15).max(T::epsilon());
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = (lo + hi) / T::two();
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / T::two()
}

/// Natural self-similar weights `r_i^s`, normalized to sum to one.
pub fn natural_weights<T: Scalar>(f: &Ifs<T>) -> Vec<T> {
    if f.common_ratio().is_some() {
        return vec![T::one() / T::of_usize(f.len()); f.len()];
    }
    let s = similarity_dimension(f);
    let raw: Vec<T> = f.maps.iter().map(|m| m.ratio.powf(s)).collect();
    let total = raw.iter().fold(T::zero(), |a, &b| a + b);
    raw.into_iter().map(|w| w / total).collect()
}

/// A ball mapped into itself by every map of `f`; it contains the attractor.
///
/// The center is the fixed point of the barycenter map
/// `x -> mean_i phi_i(x)`; the radius is the smallest one making every image
/// nest inside, inflated by [`Scalar::geo_slack`].
pub fn invariant_ball<T: Scalar>(f: &Ifs<T>) -> Ball<T> {
    let ell = T::of_usize(f.len());
    let mean_ratio = f.maps.iter().fold(T::zero(), |a, m| a + m.ratio) / ell;
    let mut mean_shift = Point::origin(f.dimension);
    for m in &f.maps {
        mean_shift = mean_shift.add(&m.translation);
    }
    let center = mean_shift.scale(T::one() / (ell * (T::one() - mean_ratio)));
    let radius = f
        .maps
        .iter()
        .map(|m| m.apply(&center).dist(&center) / (T::one() - m.ratio))
        .fold(T::zero(), |a, b| a.max(b));
    Ball::new(center, radius + T::geo_slack())
}

/// Composition `phi_w = phi_{w_1} o ... o phi_{w_k}` tracked as a homothety
/// together with its natural-measure weight.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Cylinder<T> {
    pub ratio: T,
    pub shift: Point<T>,
    pub weight: T,
    pub depth: u32,
}

impl<T: Scalar> Cylinder<T> {
    pub fn root(dim: usize) -> Self {
        Self {
            ratio: T::one(),
            shift: Point::origin(dim),
            weight: T::one(),
            depth: 0,
        }
    }

    /// `phi_w o phi_j`.
    pub fn child(&self, map: &Similitude<T>, weight: T) -> Self {
        Self {
            ratio: self.ratio * map.ratio,
            shift: map.translation.affine(self.ratio, &self.shift),
            weight: self.weight * weight,
            depth: self.depth + 1,
        }
    }

    pub fn apply(&self, x: &Point<T>) -> Point<T> {
        x.affine(self.ratio, &self.shift)
    }

    /// Image of the invariant ball.
    pub fn ball(&self, hat: &Ball<T>) -> Ball<T> {
        Ball::new(self.apply(&hat.center), hat.radius * self.ratio)
    }
}

/// A finite word over the map indices with its composed homothety.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CylinderWord<T> {
    pub indices: Vec<u32>,
    /// Product of the ratios along the word.
    pub ratio: T,
    pub translation: Point<T>,
    /// Natural-measure weight, the product of `r_i^s` along the word.
    pub weight: T,
    /// Image of the invariant ball under the word.
    pub ball: Ball<T>,
}

/// Outcome of a strong-separation check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SscStatus<T> {
    /// Separation holds; the value is a lower bound on the minimal distance
    /// between distinct first-level pieces of the attractor.
    Certified(T),
    Unknown,
}

impl<T: Scalar> SscStatus<T> {
    pub fn gap(&self) -> Option<T> {
        match self {
            Self::Certified(g) => Some(*g),
            Self::Unknown => None,
        }
    }
}

fn ball_gap<T: Scalar>(a: &Ball<T>, b: &Ball<T>) -> T {
    a.center.dist(&b.center) - a.radius - b.radius - T::geo_slack()
}

struct SscSearch<'a, T> {
    ifs: &'a Ifs<T>,
    hat: Ball<T>,
    depth_cap: u32,
    pairs_left: u64,
}

impl<T: Scalar> SscSearch<'_, T> {
    /// Lower bound on the distance between the attractor pieces under `a`
    /// and `b`, or `None` if they cannot be separated within the caps.
    fn gap(&mut self, a: &Cylinder<T>, b: &Cylinder<T>) -> Option<T> {
        if self.pairs_left == 0 {
            return None;
        }
        self.pairs_left -= 1;
        let g = ball_gap(&a.ball(&self.hat), &b.ball(&self.hat));
        if g > T::zero() {
            return Some(g);
        }
        if a.depth >= self.depth_cap {
            return None;
        }
        let mut best = T::infinity();
        for ma in self.ifs.maps() {
            let ca = a.child(ma, T::one());
            for mb in self.ifs.maps() {
                let cb = b.child(mb, T::one());
                best = best.min(self.gap(&ca, &cb)?);
            }
        }
        Some(best)
    }
}

/// Certifies strong separation by refining cylinder bounding balls.
///
/// Each pair of first-level pieces is refined until its bounding balls are
/// disjoint, up to `budget.ssc_depth_cap` levels.
pub fn check_ssc<T: Scalar>(f: &Ifs<T>, budget: &Budget) -> SscStatus<T> {
    let hat = invariant_ball(f);
    let root = Cylinder::root(f.dimension());
    let first: Vec<Cylinder<T>> = f.maps().iter().map(|m| root.child(m, T::one())).collect();
    let balls: Vec<Ball<T>> = first.iter().map(|c| c.ball(&hat)).collect();
    let mut order: Vec<usize> = (0..first.len()).collect();
    order.sort_by(|&i, &j| {
        balls[i].center.coords()[0]
            .partial_cmp(&balls[j].center.coords()[0])
            .unwrap_or(Ordering::Equal)
    });
    let rho_max = balls.iter().fold(T::zero(), |m, b| m.max(b.radius));
    let mut search = SscSearch {
        ifs: f,
        hat: hat.clone(),
        depth_cap: budget.ssc_depth_cap.max(1),
        pairs_left: budget.pair_cap.max(1),
    };
    let mut best = T::infinity();
    for (pos, &i) in order.iter().enumerate() {
        let xi = balls[i].center.coords()[0];
        for &j in &order[pos + 1..] {
            let axis_gap = balls[j].center.coords()[0] - xi - balls[i].radius - rho_max;
            if axis_gap > T::zero() && axis_gap >= best {
                break;
            }
            match search.gap(&first[i], &first[j]) {
                Some(g) => best = best.min(g),
                None => return SscStatus::Unknown,
            }
        }
    }
    SscStatus::Certified(best)
}

/// The minimal prefix-free list of words whose bounding balls have diameter
/// at most `max_diam`, in lexicographic word order.
pub fn cylinders<T: Scalar>(f: &Ifs<T>, max_diam: T, budget: &Budget) -> Result<Vec<CylinderWord<T>>> {
    if !(max_diam > T::zero()) {
        return Err(Error::Domain("max_diam must be positive".into()));
    }
    let hat = invariant_ball(f);
    let weights = natural_weights(f);
    let mut out = Vec::new();
    let mut visited: u64 = 0;
    let mut stack: Vec<(Vec<u32>, Cylinder<T>)> = vec![(Vec::new(), Cylinder::root(f.dimension()))];
    while let Some((word, cyl)) = stack.pop() {
        visited += 1;
        if visited > budget.node_cap {
            return Err(Error::BudgetExceeded {
                what: "cylinder enumeration",
                partial: None,
            });
        }
        let ball = cyl.ball(&hat);
        if ball.diameter() <= max_diam {
            out.push(CylinderWord {
                indices: word,
                ratio: cyl.ratio,
                translation: cyl.shift,
                weight: cyl.weight,
                ball,
            });
            continue;
        }
        for (j, m) in f.maps().iter().enumerate().rev() {
            let mut w = word.clone();
            w.push(j as u32);
            stack.push((w, cyl.child(m, weights[j])));
        }
    }
    Ok(out)
}

#[derive(Debug)]
struct PairNode<T> {
    upper: T,
    a: usize,
    b: usize,
}

impl<T: Scalar> PartialEq for PairNode<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Scalar> Eq for PairNode<T> {}
impl<T: Scalar> PartialOrd for PairNode<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Scalar> Ord for PairNode<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.upper
            .partial_cmp(&other.upper)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.a.cmp(&self.a))
            .then_with(|| other.b.cmp(&self.b))
    }
}

/// Certified enclosure of the attractor's diameter with width at most `tol`.
///
/// The lower end comes from images of a fixed point (which lie on the
/// attractor); the upper end from best-first branch and bound over pairs of
/// cylinder bounding balls.
pub fn diameter_interval<T: Scalar>(f: &Ifs<T>, tol: T, budget: &Budget) -> Result<Interval<T>> {
    let hat = invariant_ball(f);
    let anchor = f.maps()[0].fixed_point();
    let mut lower = max_pairwise_distance(&f.fixed_points());
    let mut arena: Vec<Cylinder<T>> = vec![Cylinder::root(f.dimension())];
    let mut balls: Vec<Ball<T>> = vec![hat.clone()];
    let mut children: Vec<Option<Vec<usize>>> = vec![None];
    let mut heap = BinaryHeap::new();
    heap.push(PairNode {
        upper: hat.diameter(),
        a: 0,
        b: 0,
    });
    let mut visited: u64 = 0;
    while let Some(top) = heap.pop() {
        if top.upper - lower <= tol || top.upper <= lower {
            let hi = top.upper.max(lower);
            return Ok(Interval::new(lower, hi));
        }
        visited += 1;
        if visited > budget.node_cap {
            return Err(Error::BudgetExceeded {
                what: "diameter bound",
                partial: Some((lower.as_f64(), top.upper.as_f64())),
            });
        }
        let split = |id: usize,
                         arena: &mut Vec<Cylinder<T>>,
                         balls: &mut Vec<Ball<T>>,
                         children: &mut Vec<Option<Vec<usize>>>|
         -> Vec<usize> {
            if let Some(c) = &children[id] {
                return c.clone();
            }
            let parent = arena[id].clone();
            let mut ids = Vec::with_capacity(f.len());
            for m in f.maps() {
                let c = parent.child(m, T::one());
                balls.push(c.ball(&hat));
                arena.push(c);
                children.push(None);
                ids.push(arena.len() - 1);
            }
            children[id] = Some(ids.clone());
            ids
        };
        let mut new_pairs = Vec::new();
        if top.a == top.b {
            let kids = split(top.a, &mut arena, &mut balls, &mut children);
            for (x, &i) in kids.iter().enumerate() {
                for &j in &kids[x..] {
                    new_pairs.push((i, j));
                }
            }
        } else {
            let (big, small) = if balls[top.a].radius >= balls[top.b].radius {
                (top.a, top.b)
            } else {
                (top.b, top.a)
            };
            let kids = split(big, &mut arena, &mut balls, &mut children);
            new_pairs.extend(kids.into_iter().map(|k| (k, small)));
        }
        for (i, j) in new_pairs {
            let (bi, bj) = (&balls[i], &balls[j]);
            let upper = if i == j {
                bi.diameter()
            } else {
                bi.center.dist(&bj.center) + bi.radius + bj.radius
            } + T::geo_slack();
            lower = lower.max(arena[i].apply(&anchor).dist(&arena[j].apply(&anchor)));
            if upper > lower {
                heap.push(PairNode { upper, a: i, b: j });
            }
        }
    }
    Ok(Interval::new(lower, lower + T::geo_slack()))
}
