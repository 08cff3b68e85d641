//! Locating `t0` with `H^s(K_{t0}) = c` by sweeping and bisecting `t`.
//!
//! Only continuity of `t -> H^s(K_t)` is used: the bracket always has a
//! point certifiably on one side of `c` at its left end.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::construction::{ifs_at, ConstructionParams};
use crate::density::{certified_k0_bound, estimate, EstimateOptions, HausdorffEstimate};
use crate::error::{Error, Result};
use crate::measure::NaturalMeasure;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct SweepPoint<T> {
    pub t: T,
    pub estimate: HausdorffEstimate<T>,
}

/// Position of an estimate relative to `c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Above,
    Below,
    Contains,
}

pub fn side<T: Scalar>(e: &HausdorffEstimate<T>, c: T) -> Side {
    if e.lower > c {
        Side::Above
    } else if e.upper < c {
        Side::Below
    } else {
        Side::Contains
    }
}

/// Estimate of `H^s(K_t)`. At `t = 0` the analytic bound is merged in;
/// hand-picked parameters clear the rigor flags.
pub fn estimate_at<T: Scalar>(
    params: &ConstructionParams<T>,
    t: T,
    opts: &EstimateOptions<T>,
) -> Result<HausdorffEstimate<T>> {
    let m = NaturalMeasure::new(ifs_at(params, t)?);
    let mut opts = opts.clone();
    opts.downgrade |= params.forced;
    if t == T::zero() && !params.forced {
        let k0 = certified_k0_bound(params);
        opts.analytic_lower = Some(opts.analytic_lower.map_or(k0, |a| a.max(k0)));
    }
    estimate(&m, &opts)
}

fn check_target<T: Scalar>(params: &ConstructionParams<T>, c: T) -> Result<()> {
    if !(c > params.eps && c < T::one() - params.eps) {
        return Err(Error::Domain(format!(
            "c = {c} must lie in (eps, 1 - eps) = ({}, {})",
            params.eps,
            T::one() - params.eps
        )));
    }
    Ok(())
}

/// Estimates at `grid + 1` equispaced `t`.
pub fn sweep<T: Scalar>(
    params: &ConstructionParams<T>,
    c: T,
    grid: usize,
    opts: &EstimateOptions<T>,
) -> Result<Vec<SweepPoint<T>>> {
    if grid < 2 {
        return Err(Error::Domain("grid must be at least 2".into()));
    }
    check_target(params, c)?;
    (0..=grid)
        .into_par_iter()
        .map(|k| {
            let t = T::of_usize(k) / T::of_usize(grid);
            estimate_at(params, t, opts).map(|estimate| SweepPoint { t, estimate })
        })
        .collect()
}

/// First adjacent pair certifiably on opposite sides of `c`.
pub fn straddling_pair<T: Scalar>(points: &[SweepPoint<T>], c: T) -> Result<(usize, usize)> {
    points
        .windows(2)
        .position(|w| {
            matches!(
                (side(&w[0].estimate, c), side(&w[1].estimate, c)),
                (Side::Above, Side::Below) | (Side::Below, Side::Above)
            )
        })
        .map(|i| (i, i + 1))
        .ok_or_else(|| Error::Inconclusive(format!("no sweep pair straddles c = {c}")))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchOptions<T> {
    pub grid: usize,
    pub tol_t: T,
    /// Bisection steps allowed after the sweep.
    pub max_steps: u32,
    pub estimate: EstimateOptions<T>,
}

impl<T: Scalar> Default for SearchOptions<T> {
    fn default() -> Self {
        Self {
            grid: 8,
            tol_t: T::one() / T::lit(64.0),
            max_steps: 48,
            estimate: EstimateOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct SearchOutcome<T> {
    pub t0: T,
    pub estimate: HausdorffEstimate<T>,
    /// Final bracket; its left end is certifiably on one side of `c`.
    pub bracket: (T, T),
    pub steps: u32,
    pub sweep: Vec<SweepPoint<T>>,
}

/// Sweeps, then bisects the first straddling pair until the bracket is at
/// most `tol_t` wide and its right end has an estimate containing `c`.
///
/// A midpoint on the left end's side replaces the left end; any other
/// midpoint replaces the right end, so ties shrink toward the left.
pub fn find_t<T: Scalar>(params: &ConstructionParams<T>, c: T, opts: &SearchOptions<T>) -> Result<SearchOutcome<T>> {
    let points = sweep(params, c, opts.grid, &opts.estimate)?;
    if let Some(p) = points.iter().find(|p| side(&p.estimate, c) == Side::Contains) {
        let prev = points.iter().rev().find(|q| q.t < p.t && side(&q.estimate, c) != Side::Contains);
        if prev.map_or(true, |q| p.t - q.t <= opts.tol_t) {
            return Ok(SearchOutcome {
                t0: p.t,
                estimate: p.estimate.clone(),
                bracket: (p.t, p.t),
                steps: 0,
                sweep: points.clone(),
            });
        }
    }
    let (i, j) = straddling_pair(&points, c)?;
    let left_side = side(&points[i].estimate, c);
    let (mut a, mut b) = (points[i].t, points[j].t);
    let mut hit: Option<(T, HausdorffEstimate<T>)> = None;
    let mut steps = 0;
    loop {
        if let Some((t, e)) = &hit {
            if b - a <= opts.tol_t {
                return Ok(SearchOutcome {
                    t0: *t,
                    estimate: e.clone(),
                    bracket: (a, b),
                    steps,
                    sweep: points,
                });
            }
        }
        if steps >= opts.max_steps {
            return Err(Error::Inconclusive(format!(
                "bisection budget spent with bracket [{a}, {b}]"
            )));
        }
        steps += 1;
        let mid = (a + b) / T::two();
        let e = estimate_at(params, mid, &opts.estimate)?;
        match side(&e, c) {
            s if s == left_side => a = mid,
            Side::Contains => {
                b = mid;
                hit = Some((mid, e));
            }
            _ => {
                b = mid;
                hit = None;
            }
        }
    }
}
