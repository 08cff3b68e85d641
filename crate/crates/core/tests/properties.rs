use hausdorff_forge::construction::{check_lemma22, construct, ratio_bound_max};
use hausdorff_forge::density::{estimate, EstimateOptions};
use hausdorff_forge::geometry::{
    classify_ball, isodiametric_bound, lattice_count, lattice_points, unit_ball_volume, AxisBox, Ball,
    ConvexCandidate, Point, Relation,
};
use hausdorff_forge::ifs::{cylinders, diameter_interval, natural_weights, similarity_dimension, Ifs};
use hausdorff_forge::measure::{measure_of, NaturalMeasure};
use hausdorff_forge::{Budget, Ifs64};
use proptest::prelude::*;

/// Two maps on the line with fixed points 0 and 1.
fn pair(r1: f64, r2: f64) -> Ifs64 {
    Ifs::from_parts(1, &[(r1, vec![0.0]), (r2, vec![1.0 - r2])]).unwrap()
}

/// Up to three maps in the plane with ratios below 1/3 at spread-out corners.
fn planar(rs: &[f64]) -> Ifs64 {
    let corners = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    let parts: Vec<(f64, Vec<f64>)> = rs
        .iter()
        .zip(corners)
        .map(|(&r, c)| (r, vec![c[0] * (1.0 - r), c[1] * (1.0 - r)]))
        .collect();
    Ifs::from_parts(2, &parts).unwrap()
}

/// Depth-10 enumeration with an independent ball-in-ball test: mass of
/// cylinders surely inside `U` and mass of cylinders possibly meeting it.
fn brute_force(m: &NaturalMeasure<f64>, u: &Ball<f64>, depth: u32) -> (f64, f64) {
    let hat = m.invariant_ball().clone();
    let maps = m.ifs().maps();
    let w = m.weights();
    let d = hat.center.dim();
    // word phi_w as x -> ratio * x + shift
    let mut stack = vec![(1.0f64, 1.0f64, vec![0.0; d], 0u32)];
    let (mut lo, mut hi) = (0.0, 0.0);
    while let Some((weight, ratio, shift, k)) = stack.pop() {
        let c: Vec<f64> = hat.center.coords().iter().zip(&shift).map(|(x, t)| ratio * x + t).collect();
        let rad = hat.radius * ratio;
        let dist = c.iter().zip(u.center.coords()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        if dist + rad <= u.radius {
            lo += weight;
            hi += weight;
            continue;
        }
        if dist > u.radius + rad {
            continue;
        }
        if k == depth {
            hi += weight;
            continue;
        }
        for (j, map) in maps.iter().enumerate() {
            let t: Vec<f64> = map.translation.coords().iter().zip(&shift).map(|(a, t)| ratio * a + t).collect();
            stack.push((weight * w[j], ratio * map.ratio, t, k + 1));
        }
    }
    (lo, hi)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cylinder_weights_sum_to_one(r1 in 0.05f64..0.45, r2 in 0.05f64..0.45, cut in 0.001f64..0.3) {
        let f = pair(r1, r2);
        let words = cylinders(&f, cut, &Budget::default()).unwrap();
        let total: f64 = words.iter().map(|w| w.weight).sum();
        prop_assert!((total - 1.0).abs() <= 1e-10, "{}", total);
    }

    #[test]
    fn moran_equation(r1 in 0.05f64..0.45, r2 in 0.05f64..0.45, r3 in 0.05f64..0.3) {
        let f = planar(&[r1, r2, r3]);
        let s = similarity_dimension(&f);
        let sum: f64 = [r1, r2, r3].iter().map(|r| r.powf(s)).sum();
        prop_assert!((sum - 1.0).abs() < 1e-10);
        let w: f64 = natural_weights(&f).iter().sum();
        prop_assert!((w - 1.0).abs() < 1e-12);
    }

    #[test]
    fn measure_encloses_brute_force_on_line(
        r1 in 0.1f64..0.4, r2 in 0.1f64..0.4, c in -0.2f64..1.2, rad in 0.01f64..0.8,
    ) {
        let m = NaturalMeasure::new(pair(r1, r2));
        let u = Ball::new(Point::new(vec![c]), rad);
        let mu = measure_of(&ConvexCandidate::Ball(u.clone()), &m, 1e-6, &Budget::default()).unwrap();
        let (lo, hi) = brute_force(&m, &u, 10);
        prop_assert!(mu.lo <= hi + 1e-12 && mu.hi >= lo - 1e-12, "{:?} vs [{}, {}]", mu, lo, hi);
    }

    #[test]
    fn measure_encloses_brute_force_in_plane(
        r1 in 0.1f64..0.3, r2 in 0.1f64..0.3, r3 in 0.1f64..0.3,
        cx in -0.2f64..1.2, cy in -0.2f64..1.2, rad in 0.05f64..0.9,
    ) {
        let m = NaturalMeasure::new(planar(&[r1, r2, r3]));
        let u = Ball::new(Point::new(vec![cx, cy]), rad);
        let mu = measure_of(&ConvexCandidate::Ball(u.clone()), &m, 1e-5, &Budget::default()).unwrap();
        let (lo, hi) = brute_force(&m, &u, 10);
        prop_assert!(mu.lo <= hi + 1e-12 && mu.hi >= lo - 1e-12, "{:?} vs [{}, {}]", mu, lo, hi);
    }

    #[test]
    fn ball_classification_is_sound(
        ux in -1.0f64..1.0, uy in -1.0f64..1.0, ur in 0.01f64..1.0,
        cx in -2.0f64..2.0, cy in -2.0f64..2.0, cr in 0.001f64..0.5,
    ) {
        let u = ConvexCandidate::Ball(Ball::new(Point::new(vec![ux, uy]), ur));
        let c = Ball::new(Point::new(vec![cx, cy]), cr);
        let dist = ((ux - cx).powi(2) + (uy - cy).powi(2)).sqrt();
        match classify_ball(&u, &c) {
            Relation::Inside => prop_assert!(dist + cr <= ur),
            Relation::Outside => prop_assert!(dist > ur + cr),
            Relation::Straddle => {}
        }
    }

    #[test]
    fn box_classification_is_sound(
        h in 0.05f64..1.0, cx in -2.0f64..2.0, cy in -2.0f64..2.0, cr in 0.001f64..0.5,
    ) {
        let u = ConvexCandidate::AxisBox(AxisBox::new(Point::new(vec![0.0, 0.0]), h));
        let c = Ball::new(Point::new(vec![cx, cy]), cr);
        let gap = |x: f64| (x.abs() - h).max(0.0);
        let dist_out = (gap(cx).powi(2) + gap(cy).powi(2)).sqrt();
        let depth = (h - cx.abs()).min(h - cy.abs());
        match classify_ball(&u, &c) {
            Relation::Inside => prop_assert!(depth >= cr),
            Relation::Outside => prop_assert!(dist_out > cr),
            Relation::Straddle => {}
        }
    }

    #[test]
    fn diameter_enclosure_contains_sampled_distances(r1 in 0.1f64..0.3, r2 in 0.1f64..0.3, r3 in 0.1f64..0.3) {
        let f = planar(&[r1, r2, r3]);
        let iv = diameter_interval(&f, 1e-6, &Budget::default()).unwrap();
        let pts = f.fixed_points();
        let far = pts.iter().flat_map(|a| pts.iter().map(move |b| a.dist(b))).fold(0.0, f64::max);
        prop_assert!(iv.lo <= far + 1e-12 && far <= iv.hi);
        prop_assert!(iv.width() <= 1e-6);
    }

    #[test]
    fn ratio_identity(s in 0.2f64..0.75, eps in 0.3f64..0.8) {
        let p = construct(1, s, eps, None).unwrap();
        let want = (p.ell as f64).powf(-1.0 / s);
        prop_assert!(((p.r - want) / want).abs() <= 1e-14);
        prop_assert_eq!(p.ell as usize, p.lattice.len());
    }

    #[test]
    fn analytic_max_dominates_scan(n in 2u64..400, s in 0.1f64..0.9) {
        let max = ratio_bound_max(n, 1, s).unwrap();
        let lo = 1.0 / (4.0 * n as f64);
        for k in 0..=200 {
            let x = lo + (1.0 - lo) * k as f64 / 200.0;
            let v = (x + 1.0 / n as f64) / ((1.0 - 0.5 / n as f64) * x.powf(s));
            prop_assert!(v <= max * (1.0 + 1e-12));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn estimates_scale_with_lambda_to_the_s(r1 in 0.15f64..0.4, r2 in 0.15f64..0.4) {
        let f = pair(r1, r2);
        let s = similarity_dimension(&f);
        let opts = EstimateOptions::default();
        let a = estimate(&NaturalMeasure::new(f.clone()), &opts).unwrap();
        let b = estimate(&NaturalMeasure::new(f.conjugated(3.0)), &opts).unwrap();
        let k = 3f64.powf(s);
        prop_assert!((b.upper / (a.upper * k) - 1.0).abs() <= 1e-9, "{} vs {}", b.upper, a.upper * k);
        prop_assert!((b.lower / (a.lower * k) - 1.0).abs() <= 1e-9, "{} vs {}", b.lower, a.lower * k);
        prop_assert!(a.lower <= a.upper && b.lower <= b.upper);
    }
}

#[test]
fn isodiametric_equality_on_balls() {
    for d in 1..=3 {
        for diam in [0.5, 1.0, 3.0] {
            let ball = Ball::new(Point::<f64>::origin(d), diam / 2.0);
            let rel = (isodiametric_bound(diam, d) - ball.volume()).abs() / ball.volume();
            assert!(rel < 1e-14, "d = {d}");
        }
    }
}

#[test]
fn unit_ball_volumes() {
    assert_eq!(unit_ball_volume::<f64>(1), 2.0);
    assert!((unit_ball_volume::<f64>(2) - std::f64::consts::PI).abs() < 1e-15);
    assert!((unit_ball_volume::<f64>(3) - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-14);
}

#[test]
fn lattice_matches_enumeration() {
    for d in 1..=3usize {
        for n in 1..=6u64 {
            let pts = lattice_points::<f64>(d, n);
            assert_eq!(pts.len() as u64, lattice_count(d, n));
            let range = -(n as i64)..=(n as i64);
            let brute = match d {
                1 => range.clone().count(),
                2 => range.clone().flat_map(|a| range.clone().map(move |b| a * a + b * b)).filter(|&q| q <= (n * n) as i64).count(),
                _ => range
                    .clone()
                    .flat_map(|a| range.clone().flat_map(move |b| (-(n as i64)..=n as i64).map(move |c| a * a + b * b + c * c)))
                    .filter(|&q| q <= (n * n) as i64)
                    .count(),
            };
            assert_eq!(pts.len(), brute);
            assert!(pts.iter().all(|p| p.norm() <= 0.5 + 1e-15));
        }
    }
}

#[test]
fn minimal_n_examples() {
    let p = construct(1, 0.5f64, 0.5, None).unwrap();
    assert!(check_lemma22(p.n, 1, 0.5, 0.5));
    let q = construct(1, 0.5f64, 0.4, None).unwrap();
    assert_eq!((q.n, q.ell), (16, 33));
    assert!((q.r - 1.0 / 1089.0).abs() < 1e-18);
}
