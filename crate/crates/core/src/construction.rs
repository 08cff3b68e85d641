//! The one-parameter family `Phi_t`, `t in [0, 1]`, of equal-ratio
//! homothety systems on the lattice `Z^d / (2n)` inside `B(0, 1/2)`.
//!
//! At `t = 0` every map sits on its lattice point; as `t -> 1` all maps
//! except the two antipodal ones on the first axis contract towards the
//! origin by the factor `8 n r`. The attractor has diameter 1 throughout.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::budget::Budget;
use crate::density::{lemma22_ratio_bound, ratio_of};
use crate::error::{Error, Result};
use crate::geometry::{
    classify_ball, lattice_count, lattice_points, unit_ball_volume, AxisBox, Ball, ConvexCandidate,
    Point, Relation,
};
use crate::ifs::{check_ssc, diameter_interval, similarity_dimension, Ifs, Similitude};
use crate::measure::{measure_of, NaturalMeasure};
use crate::scalar::Scalar;

/// Largest `n` tried by [`choose_n`].
pub const N_SEARCH_CAP: u64 = 10_000_000;

/// All data of one family: dimension, target dimension `s`, `eps`, lattice
/// resolution `n`, the lattice points `F` and the common ratio `r`.
///
/// Serialized as `{d, s, eps, n, ell, r, F: [[..], ..]}` plus a `forced`
/// flag set when `n` was chosen by hand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct ConstructionParams<T> {
    pub d: usize,
    pub s: T,
    pub eps: T,
    pub n: u64,
    pub ell: u64,
    pub r: T,
    #[serde(rename = "F")]
    pub lattice: Vec<Point<T>>,
    #[serde(default)]
    pub forced: bool,
}

impl<T: Scalar> ConstructionParams<T> {
    /// `8 n r`, the contraction applied to the inner maps at `t = 1`.
    pub fn inner_factor(&self) -> T {
        T::lit(8.0 * self.n as f64) * self.r
    }

    /// `V = B(0, (4n + 1) r)`.
    pub fn inner_ball(&self) -> Ball<T> {
        Ball::new(
            Point::origin(self.d),
            T::lit((4 * self.n + 1) as f64) * self.r,
        )
    }
}

fn sqrt_d<T: Scalar>(d: usize) -> T {
    T::of_usize(d).sqrt()
}

fn check_domain<T: Scalar>(d: usize, s: T, eps: T) -> Result<()> {
    if d == 0 {
        return Err(Error::Domain("dimension must be positive".into()));
    }
    if !(s > T::zero() && s < T::of_usize(d)) {
        return Err(Error::Domain(format!("s = {s} must lie in (0, {d})")));
    }
    if !(eps > T::zero() && eps < T::one()) {
        return Err(Error::Domain(format!("eps = {eps} must lie in (0, 1)")));
    }
    Ok(())
}

/// Maximum of [`lemma22_ratio_bound`] over `x in [1/(4n), 1]`, or `None`
/// when `n <= sqrt(d)/2` makes the bound meaningless.
///
/// The log-derivative `d/(x + c) - s/x` (`c = sqrt(d)/n`) has a single zero
/// `x* = s c / (d - s)`, so the maximum sits at an endpoint or at `x*`.
pub fn ratio_bound_max<T: Scalar>(n: u64, d: usize, s: T) -> Option<T> {
    let nf = T::lit(n as f64);
    if T::one() - sqrt_d::<T>(d) / (T::two() * nf) <= T::zero() {
        return None;
    }
    let lo = T::one() / (T::lit(4.0) * nf);
    let crit = s * sqrt_d::<T>(d) / ((T::of_usize(d) - s) * nf);
    let mut xs = vec![lo, T::one()];
    if crit > lo && crit < T::one() {
        xs.push(crit);
    }
    xs.into_iter()
        .map(|x| lemma22_ratio_bound(n, d, s, x).expect("x inside the admissible range"))
        .reduce(T::max)
}

/// The ratio inequality holds at this single `n`: its maximum over
/// `[1/(4n), 1]` is below `1 + eps`.
pub fn check_lemma22<T: Scalar>(n: u64, d: usize, s: T, eps: T) -> bool {
    n >= 1 && ratio_bound_max(n, d, s).map_or(false, |m| m < T::one() + eps)
}

/// `(omega_d (n - sqrt(d)/2)^d - 2) / (8n + 4)^s > 1/eps`.
pub fn check_eq23<T: Scalar>(n: u64, d: usize, s: T, eps: T) -> Result<bool> {
    let nf = T::lit(n as f64);
    let shifted = nf - sqrt_d::<T>(d) / T::two();
    if shifted <= T::zero() {
        return Err(Error::Domain(format!("n = {n} must exceed sqrt({d})/2")));
    }
    let lhs = (unit_ball_volume::<T>(d) * shifted.powi(d as i32) - T::two())
        / (T::lit(8.0) * nf + T::lit(4.0)).powf(s);
    Ok(lhs > T::one() / eps)
}

/// Lattice-count lower bound `ell >= omega_d (n - sqrt(d)/2)^d`.
pub fn check_lattice_volume<T: Scalar>(n: u64, d: usize, ell: u64) -> bool {
    let shifted = (T::lit(n as f64) - sqrt_d::<T>(d) / T::two()).max(T::zero());
    T::lit(ell as f64) >= unit_ball_volume::<T>(d) * shifted.powi(d as i32)
}

/// `(8n + 4) ell^{-1/s} < eps^{1/s}`, compared in log space.
pub fn check_contraction_margin<T: Scalar>(n: u64, s: T, eps: T, ell: u64) -> bool {
    let lhs = T::lit((8 * n + 4) as f64).ln() - T::lit(ell as f64).ln() / s;
    lhs < eps.ln() / s && eps < T::one()
}

/// Smallest `n` passing both the ratio inequality and the lattice-count
/// inequality.
pub fn choose_n<T: Scalar>(d: usize, s: T, eps: T) -> Result<u64> {
    check_domain(d, s, eps)?;
    let start = (f64::sqrt(d as f64) / 2.0).floor() as u64 + 1;
    for n in start..=N_SEARCH_CAP {
        if check_eq23(n, d, s, eps)? && check_lemma22(n, d, s, eps) {
            return Ok(n);
        }
    }
    Err(Error::IterationCap { cap: N_SEARCH_CAP })
}

/// Builds the parameters for `(d, s, eps)`. With `force_n` the given `n` is
/// used as is and the result is marked `forced`; the inequalities are then
/// reported but not required.
pub fn construct<T: Scalar>(d: usize, s: T, eps: T, force_n: Option<u64>) -> Result<ConstructionParams<T>> {
    check_domain(d, s, eps)?;
    let (n, forced) = match force_n {
        Some(0) => return Err(Error::Domain("n must be positive".into())),
        Some(n) => (n, true),
        None => (choose_n(d, s, eps)?, false),
    };
    let lattice = lattice_points::<T>(d, n);
    let ell = lattice.len() as u64;
    let r = T::lit(ell as f64).powf(-T::one() / s);
    if !forced && !check_contraction_margin(n, s, eps, ell) {
        return Err(Error::Inconclusive(format!(
            "(8n+4) r < eps^(1/s) fails at n = {n}, ell = {ell}"
        )));
    }
    Ok(ConstructionParams {
        d,
        s,
        eps,
        n,
        ell,
        r,
        lattice,
        forced,
    })
}

/// The system `Phi_t`: common ratio `r`, translations `(1 - r) b_i` for the
/// two axis points and `(1 - r) (8nr)^t b_i` for the rest.
pub fn ifs_at<T: Scalar>(params: &ConstructionParams<T>, t: T) -> Result<Ifs<T>> {
    if !(t >= T::zero() && t <= T::one()) {
        return Err(Error::Domain(format!("t = {t} must lie in [0, 1]")));
    }
    let one_minus_r = T::one() - params.r;
    let inner = params.inner_factor().powf(t);
    let maps = params
        .lattice
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let k = if i < 2 { one_minus_r } else { one_minus_r * inner };
            Similitude::new(params.r, b.scale(k))
        })
        .collect::<Result<Vec<_>>>()?;
    Ifs::new(params.d, maps)
}

/// One named check of a verification run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub t: Option<f64>,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckOutcome>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn push(&mut self, name: &str, t: Option<f64>, passed: bool, detail: String) {
        self.checks.push(CheckOutcome {
            name: name.to_string(),
            t,
            passed,
            detail,
        });
    }
}

/// Checks on the parameters alone: the defining inequalities, the ratio
/// identity and the lattice layout.
pub fn inequality_report<T: Scalar>(p: &ConstructionParams<T>) -> VerificationReport {
    let mut rep = VerificationReport::default();
    let count_ok = check_eq23(p.n, p.d, p.s, p.eps);
    rep.push(
        "lattice_count_inequality",
        None,
        matches!(count_ok, Ok(true)),
        format!("{count_ok:?}"),
    );
    rep.push(
        "ratio_inequality",
        None,
        check_lemma22(p.n, p.d, p.s, p.eps),
        format!(
            "max ratio bound {:?} vs 1 + eps = {}",
            ratio_bound_max(p.n, p.d, p.s).map(Scalar::as_f64),
            (T::one() + p.eps).as_f64()
        ),
    );
    rep.push(
        "lattice_volume_bound",
        None,
        check_lattice_volume::<T>(p.n, p.d, p.ell),
        format!("ell = {}", p.ell),
    );
    let margin = T::lit((8 * p.n + 4) as f64).ln() + p.r.ln() < p.eps.ln() / p.s;
    rep.push(
        "contraction_margin",
        None,
        margin && check_contraction_margin(p.n, p.s, p.eps, p.ell),
        format!(
            "(8n+4) r = {} vs eps^(1/s) = {}",
            (T::lit((8 * p.n + 4) as f64) * p.r).as_f64(),
            p.eps.powf(T::one() / p.s).as_f64()
        ),
    );
    let factor = p.inner_factor();
    rep.push(
        "inner_factor_below_one",
        None,
        factor < T::one(),
        format!("8nr = {}", factor.as_f64()),
    );
    let expected_r = T::lit(p.ell as f64).powf(-T::one() / p.s);
    rep.push(
        "ratio_identity",
        None,
        ((p.r - expected_r) / expected_r).abs() <= T::lit(1e-14).max(T::lit(4.0) * T::epsilon()),
        format!("r = {}, ell^(-1/s) = {}", p.r.as_f64(), expected_r.as_f64()),
    );
    let count_ok = p.lattice.len() as u64 == p.ell && lattice_count(p.d, p.n) == p.ell;
    rep.push("lattice_size", None, count_ok, format!("|F| = {}", p.lattice.len()));
    let half = T::half();
    let layout_ok = p.lattice.len() >= 2
        && p.lattice[0] == Point::on_first_axis(-half, p.d)
        && p.lattice[1] == Point::on_first_axis(half, p.d);
    rep.push("axis_points_first", None, layout_ok, String::new());
    rep
}

/// Verifies every claim about `Phi_t` at the sampled parameters: strong
/// separation, dimension `s`, diameter 1, nesting of the first-level images
/// of `B(0, 1/2)`, the cube identity at `t = 0` and the inner-ball ratio at
/// `t = 1`.
pub fn verify_prop2<T: Scalar>(
    params: &ConstructionParams<T>,
    t_samples: &[T],
    budget: &Budget,
) -> VerificationReport {
    let mut rep = inequality_report(params);
    let d = params.d;
    let unit = Ball::new(Point::origin(d), T::half());
    for &t in t_samples {
        let tf = Some(t.as_f64());
        let f = match ifs_at(params, t) {
            Ok(f) => f,
            Err(e) => {
                rep.push("system", tf, false, e.to_string());
                continue;
            }
        };
        let ssc = check_ssc(&f, budget);
        rep.push("strong_separation", tf, ssc.gap().is_some(), format!("{ssc:?}"));

        let dim = similarity_dimension(&f);
        rep.push(
            "similarity_dimension",
            tf,
            (dim - params.s).abs() <= T::lit(1e-10),
            format!("{}", dim.as_f64()),
        );

        match diameter_interval(&f, T::lit(1e-4), budget) {
            Ok(iv) => {
                let slack = T::geo_slack();
                let ok = iv.lo <= T::one() + slack && iv.hi >= T::one() - slack && iv.width() <= T::lit(1e-3);
                rep.push(
                    "diameter_one",
                    tf,
                    ok,
                    format!("[{}, {}]", iv.lo.as_f64(), iv.hi.as_f64()),
                );
            }
            Err(e) => rep.push("diameter_one", tf, false, e.to_string()),
        }

        let (nested, disjoint) = first_level_layout(&f, &unit);
        rep.push("images_inside_ball", tf, nested, String::new());
        rep.push("images_disjoint", tf, disjoint, String::new());

        let m = NaturalMeasure::new(f);
        if t == T::zero() {
            cube_identity(params, &m, budget, &mut rep);
        }
        if t == T::one() {
            inner_ball_ratio(params, &m, budget, &mut rep);
        }
    }
    rep
}

/// Whether each `phi_i(B)` lies in `B` (closed containment, up to slack)
/// and whether the images are pairwise disjoint.
fn first_level_layout<T: Scalar>(f: &Ifs<T>, unit: &Ball<T>) -> (bool, bool) {
    let slack = T::geo_slack();
    let images: Vec<Ball<T>> = f
        .maps()
        .iter()
        .map(|m| Ball::new(m.apply(&unit.center), m.ratio * unit.radius))
        .collect();
    let nested = images
        .iter()
        .all(|b| b.center.dist(&unit.center) + b.radius <= unit.radius + slack);
    let mut order: Vec<usize> = (0..images.len()).collect();
    let x = |i: usize| images[i].center.coords()[0];
    order.sort_by(|&a, &b| x(a).partial_cmp(&x(b)).unwrap_or(std::cmp::Ordering::Equal));
    let rho = images.iter().fold(T::zero(), |m, b| m.max(b.radius));
    let mut disjoint = true;
    'outer: for (pos, &i) in order.iter().enumerate() {
        for &j in &order[pos + 1..] {
            if x(j) - x(i) > T::two() * rho + slack {
                break;
            }
            let (a, b) = (&images[i], &images[j]);
            if a.center.dist(&b.center) <= a.radius + b.radius {
                disjoint = false;
                break 'outer;
            }
        }
    }
    (nested, disjoint)
}

fn cube_identity<T: Scalar>(
    params: &ConstructionParams<T>,
    m: &NaturalMeasure<T>,
    budget: &Budget,
    rep: &mut VerificationReport,
) {
    let ell = params.lattice.len();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut picks: Vec<usize> = if ell <= 10 {
        (0..ell).collect()
    } else {
        sample(&mut rng, ell, 10).into_vec()
    };
    picks.sort_unstable();
    let share = T::one() / T::lit(ell as f64);
    let half_width = T::one() / T::lit(4.0 * params.n as f64);
    let mut ok = true;
    let mut detail = String::new();
    for i in picks {
        let q = ConvexCandidate::AxisBox(AxisBox::new(params.lattice[i].clone(), half_width));
        match measure_of(&q, m, T::lit(1e-6), budget) {
            Ok(mu) if mu.contains(share) && mu.width() <= T::lit(1e-6) => {}
            other => {
                ok = false;
                detail = format!("index {i}: {other:?}");
                break;
            }
        }
    }
    rep.push("cube_identity", Some(0.0), ok, detail);
}

fn inner_ball_ratio<T: Scalar>(
    params: &ConstructionParams<T>,
    m: &NaturalMeasure<T>,
    budget: &Budget,
    rep: &mut VerificationReport,
) {
    let ell = T::lit(params.ell as f64);
    let v = ConvexCandidate::Ball(params.inner_ball());
    let analytic = (ell - T::two()) / T::lit((8 * params.n + 2) as f64).powf(params.s);
    rep.push(
        "inner_ball_ratio_analytic",
        Some(1.0),
        analytic > T::one() / params.eps,
        format!("(ell-2)/(8n+2)^s = {}", analytic.as_f64()),
    );
    match ratio_of(&v, m, T::lit(1e-6), budget) {
        Ok(rec) => {
            let expected = (ell - T::two()) / ell;
            let ok = rec.mu.contains(expected) && rec.ratio.lo > T::one() / params.eps;
            rep.push(
                "inner_ball_ratio",
                Some(1.0),
                ok,
                format!(
                    "mu(V) in [{}, {}], ratio >= {}",
                    rec.mu.lo.as_f64(),
                    rec.mu.hi.as_f64(),
                    rec.ratio.lo.as_f64()
                ),
            );
        }
        Err(e) => rep.push("inner_ball_ratio", Some(1.0), false, e.to_string()),
    }
}

/// Whether `classify_ball` certifies `phi_i(B)` inside `V` for every inner
/// map and outside `V` for the two axis maps at `t = 1`.
pub fn inner_ball_separates<T: Scalar>(params: &ConstructionParams<T>) -> Result<bool> {
    let f = ifs_at(params, T::one())?;
    let v = ConvexCandidate::Ball(params.inner_ball());
    let unit = Ball::new(Point::origin(params.d), T::half());
    Ok(f.maps().iter().enumerate().all(|(i, m)| {
        let img = Ball::new(m.apply(&unit.center), m.ratio * unit.radius);
        let want = if i < 2 { Relation::Outside } else { Relation::Inside };
        classify_ball(&v, &img) == want
    }))
}
