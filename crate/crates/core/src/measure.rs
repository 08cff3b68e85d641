//! The natural self-similar measure and certified enclosures of `mu(U)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::geometry::{classify_ball, extreme_points, Ball, ConvexCandidate, Point, Relation};
use crate::ifs::{invariant_ball, natural_weights, similarity_dimension, Cylinder, Ifs};
use crate::scalar::Scalar;

/// The self-similar measure with weights `r_i^s`.
#[derive(Clone, Debug)]
pub struct NaturalMeasure<T> {
    ifs: Ifs<T>,
    s: T,
    weights: Vec<T>,
    hat: Ball<T>,
    hull_points: Vec<Point<T>>,
}

impl<T: Scalar> NaturalMeasure<T> {
    pub fn new(ifs: Ifs<T>) -> Self {
        let s = similarity_dimension(&ifs);
        let weights = natural_weights(&ifs);
        let hat = invariant_ball(&ifs);
        let hull_points = extreme_points(&ifs.fixed_points());
        Self {
            ifs,
            s,
            weights,
            hat,
            hull_points,
        }
    }

    pub fn ifs(&self) -> &Ifs<T> {
        &self.ifs
    }

    /// Similarity dimension.
    pub fn s(&self) -> T {
        self.s
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn invariant_ball(&self) -> &Ball<T> {
        &self.hat
    }

    /// Extreme points of the fixed-point set. Their hull is the convex hull
    /// of the attractor.
    pub fn hull_points(&self) -> &[Point<T>] {
        &self.hull_points
    }

    pub(crate) fn child(&self, parent: &Cylinder<T>, j: usize) -> Cylinder<T> {
        parent.child(&self.ifs.maps()[j], self.weights[j])
    }

    /// `U` contains the attractor by construction: it is the invariant ball
    /// itself, or a hull listing every extreme fixed point as a vertex.
    fn holds_attractor(&self, u: &ConvexCandidate<T>) -> bool {
        match u {
            ConvexCandidate::Ball(b) => *b == self.hat,
            ConvexCandidate::PointHull(h) => self
                .hull_points
                .iter()
                .all(|p| h.vertices().iter().any(|v| v == p)),
            ConvexCandidate::AxisBox(_) => false,
        }
    }
}

/// Certified enclosure `0 <= lo <= hi <= 1` of a measure value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureInterval<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Scalar> MeasureInterval<T> {
    /// Clamps both ends into `[0, 1]`.
    pub fn new(lo: T, hi: T) -> Self {
        let lo = lo.max(T::zero()).min(T::one());
        let hi = hi.max(lo).min(T::one());
        Self { lo, hi }
    }

    pub fn width(&self) -> T {
        self.hi - self.lo
    }

    pub fn contains(&self, x: T) -> bool {
        self.lo <= x && x <= self.hi
    }
}

struct Pending<T> {
    weight: T,
    seq: u64,
    cyl: Cylinder<T>,
}

impl<T: Scalar> PartialEq for Pending<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Scalar> Eq for Pending<T> {}
impl<T: Scalar> PartialOrd for Pending<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Scalar> Ord for Pending<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.weight
            .partial_cmp(&other.weight)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Encloses `mu(U)` by classifying cylinder bounding balls against `U`.
///
/// Straddling cylinders are refined heaviest first until their total weight
/// is at most `tol`, or until every straddling cylinder is shrunk by a factor
/// below the geometric slack. On budget exhaustion the error carries the enclosure
/// reached so far.
pub fn measure_of<T: Scalar>(
    u: &ConvexCandidate<T>,
    m: &NaturalMeasure<T>,
    tol: T,
    budget: &Budget,
) -> Result<MeasureInterval<T>> {
    if u.dim() != m.ifs.dimension() {
        return Err(Error::DimensionMismatch {
            expected: m.ifs.dimension(),
            found: u.dim(),
        });
    }
    if !(tol > T::zero()) {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    if m.holds_attractor(u) {
        return Ok(MeasureInterval::new(T::one(), T::one()));
    }
    let root = Cylinder::root(m.ifs.dimension());
    match classify_ball(u, &root.ball(&m.hat)) {
        Relation::Inside => return Ok(MeasureInterval::new(T::one(), T::one())),
        Relation::Outside => return Ok(MeasureInterval::new(T::zero(), T::zero())),
        Relation::Straddle => {}
    }
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    heap.push(Pending {
        weight: T::one(),
        seq,
        cyl: root,
    });
    let mut inside = T::zero();
    let mut outside = T::zero();
    let mut terms: u64 = 0;
    let mut max_depth = 0u32;
    let mut visited: u64 = 0;
    let finish = |inside: T, outside: T, terms: u64, depth: u32| {
        // rounding allowance for the running sums and the weight products
        let c = T::lit((terms + u64::from(depth) + 2) as f64) * T::epsilon();
        MeasureInterval::new(inside * (T::one() - c), T::one() - outside + c)
    };
    loop {
        let straddle = T::one() - inside - outside;
        if straddle <= tol {
            break;
        }
        let Some(top) = heap.pop() else { break };
        if top.cyl.ratio <= T::geo_slack() {
            continue;
        }
        visited += m.ifs.len() as u64;
        if visited > budget.node_cap {
            let best = finish(inside, outside, terms, max_depth);
            return Err(Error::BudgetExceeded {
                what: "measure refinement",
                partial: Some((best.lo.as_f64(), best.hi.as_f64())),
            });
        }
        for j in 0..m.ifs.len() {
            let child = m.child(&top.cyl, j);
            max_depth = max_depth.max(child.depth);
            match classify_ball(u, &child.ball(&m.hat)) {
                Relation::Inside => {
                    inside = inside + child.weight;
                    terms += 1;
                }
                Relation::Outside => {
                    outside = outside + child.weight;
                    terms += 1;
                }
                Relation::Straddle => {
                    seq += 1;
                    heap.push(Pending {
                        weight: child.weight,
                        seq,
                        cyl: child,
                    });
                }
            }
        }
    }
    Ok(finish(inside, outside, terms, max_depth))
}

/// `mu` of the cylinder named by `word`: the product of the map weights.
pub fn pushforward_weight<T: Scalar>(word: &[u32], m: &NaturalMeasure<T>) -> T {
    word.iter()
        .fold(T::one(), |acc, &i| acc * m.weights[i as usize])
}
