//! Acceptance criteria: one `PASS`/`FAIL` line per criterion, non-zero
//! exit if any fails.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use hausdorff_forge::construction::{
    check_eq23, check_lattice_volume, check_lemma22, construct, ifs_at,
};
use hausdorff_forge::density::{
    certified_k0_bound, estimate, ratio_of, rigorous_lower_1d, EstimateOptions,
};
use hausdorff_forge::geometry::{
    isodiametric_bound, unit_ball_volume, AxisBox, Ball, ConvexCandidate, Point,
};
use hausdorff_forge::ifs::{check_ssc, cylinders, similarity_dimension, Ifs};
use hausdorff_forge::measure::{measure_of, NaturalMeasure};
use hausdorff_forge::search::{estimate_at, find_t, SearchOptions};
use hausdorff_forge::{Budget, Ifs64, Params64};

const R_TOL: f64 = 1e-15;
const ENDPOINT_SLACK: f64 = 1e-6;
const CUBE_WIDTH: f64 = 1e-6;
const CANTOR_UPPER_SLACK: f64 = 1e-6;
const CANTOR_LOWER: f64 = 0.95;
const CANTOR_DEPTH: u32 = 6;
const WEIGHT_SUM_TOL: f64 = 1e-10;
const SCALE_TOL: f64 = 1e-9;
const BRUTE_DEPTH: u32 = 10;
const OMEGA_TOL: f64 = 1e-14;
const BRACKET: f64 = 1.0 / 64.0;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, cap: Duration) -> Result<(), String> {
    ensure(elapsed < cap, format!("took {elapsed:?}, cap {cap:?}"))
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hausdorff-forge"))
}

fn line_instance(eps: f64) -> Params64 {
    construct(1, 0.5, eps, None).expect("line instance")
}

fn construction_d1() -> Outcome {
    let start = Instant::now();
    let p = line_instance(0.5);
    let elapsed = start.elapsed();
    ensure((p.n, p.ell) == (12, 25), format!("n = {}, ell = {}", p.n, p.ell))?;
    ensure(((p.r - 1.0 / 625.0) / p.r).abs() <= R_TOL, format!("r = {}", p.r))?;
    let margin = (8 * p.n + 4) as f64 * p.r;
    let target = p.eps.powf(1.0 / p.s);
    ensure((margin - 0.16).abs() < 1e-14 && margin < target, format!("(8n+4)r = {margin} vs {target}"))?;
    ensure(check_lemma22(p.n, 1, p.s, p.eps), "lemma22 check")?;
    ensure(check_eq23(p.n, 1, p.s, p.eps).unwrap_or(false), "lattice count inequality")?;
    ensure(check_lattice_volume::<f64>(p.n, 1, p.ell), "lattice volume bound")?;
    ensure(8.0 * p.n as f64 * p.r < 1.0, "8nr < 1")?;
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!("n = 12, ell = 25, r = 1/625, (8n+4)r = {margin:.4} < {target:.4}, {elapsed:?}"))
}

fn endpoint_bounds() -> Outcome {
    let p = line_instance(0.5);
    let opts = EstimateOptions::default();
    let start = Instant::now();
    let e0 = estimate_at(&p, 0.0, &opts).map_err(|e| e.to_string())?;
    let t0 = start.elapsed();
    ensure(e0.lower_rigorous && e0.lower > 2.0 / 3.0, format!("t = 0 lower {} ({})", e0.lower, e0.lower_rigorous))?;
    within(t0, Duration::from_secs(60))?;

    let start = Instant::now();
    let e1 = estimate_at(&p, 1.0, &opts).map_err(|e| e.to_string())?;
    let t1 = start.elapsed();
    ensure(e1.upper_rigorous && e1.upper <= 1.0 / 2.3 + ENDPOINT_SLACK, format!("t = 1 upper {}", e1.upper))?;
    within(t1, Duration::from_secs(60))?;

    let m = NaturalMeasure::new(ifs_at(&p, 1.0).map_err(|e| e.to_string())?);
    let v = ConvexCandidate::Ball(p.inner_ball());
    let rec = ratio_of(&v, &m, 1e-10, &Budget::default()).map_err(|e| e.to_string())?;
    let via_v = rec.upper_bound(p.s);
    ensure(e1.upper <= via_v, format!("upper {} worse than V's {via_v}", e1.upper))?;
    Ok(format!(
        "lower(0) = {:.6} > 2/3 in {t0:?}; upper(1) = {:.6} <= min(1/2.3, V {via_v:.6}) in {t1:?}",
        e0.lower, e1.upper
    ))
}

fn cube_identity() -> Outcome {
    let p = line_instance(0.5);
    let m = NaturalMeasure::new(ifs_at(&p, 0.0).map_err(|e| e.to_string())?);
    let share = 1.0 / p.ell as f64;
    let half = 1.0 / (4.0 * p.n as f64);
    let mut widest = 0.0f64;
    for (i, b) in p.lattice.iter().enumerate() {
        let q = ConvexCandidate::AxisBox(AxisBox::new(b.clone(), half));
        let mu = measure_of(&q, &m, 1e-8, &Budget::default()).map_err(|e| e.to_string())?;
        ensure(mu.lo <= share && share <= mu.hi, format!("i = {i}: {mu:?}"))?;
        ensure(mu.hi - mu.lo <= CUBE_WIDTH, format!("i = {i}: width {}", mu.hi - mu.lo))?;
        widest = widest.max(mu.hi - mu.lo);
    }
    ensure(p.lattice.len() == 25, "25 indices")?;
    Ok(format!("25/25 enclose 1/25, widest {widest:.2e}"))
}

fn cantor() -> Ifs64 {
    Ifs::from_parts(1, &[(1.0 / 3.0, vec![0.0]), (1.0 / 3.0, vec![2.0 / 3.0])]).unwrap()
}

fn cantor_oracle() -> Outcome {
    let start = Instant::now();
    let m = NaturalMeasure::new(cantor());
    let opts = EstimateOptions { fattening_depth: Some(CANTOR_DEPTH), ..EstimateOptions::default() };
    let e = estimate(&m, &opts).map_err(|e| e.to_string())?;
    ensure(e.contains(1.0), format!("[{}, {}] misses 1", e.lower, e.upper))?;
    ensure(e.lower_rigorous && e.lower >= CANTOR_LOWER, format!("lower {}", e.lower))?;
    ensure(e.upper_rigorous && e.upper <= 1.0 + CANTOR_UPPER_SLACK, format!("upper {}", e.upper))?;
    let w = &e.witness;
    ensure((w.diam - 1.0).abs() < 1e-9, format!("witness diameter {}", w.diam))?;

    let delta = check_ssc(m.ifs(), &Budget::default()).gap().ok_or("no separation")?;
    let mut prev = 0.0;
    for k in 2..=CANTOR_DEPTH + 2 {
        let lo = rigorous_lower_1d(&m, delta, k, &Budget::default()).map_err(|e| e.to_string())?;
        ensure(lo >= prev && lo <= 1.0, format!("k = {k}: {lo} after {prev}"))?;
        prev = lo;
    }
    within(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!("[{:.6}, {:.9}] contains 1, monotone in k, {:?}", e.lower, e.upper, start.elapsed()))
}

fn search_endgame(dir: &Path) -> Outcome {
    let start = Instant::now();
    let p = line_instance(0.4);
    fs::write(dir.join("p.json"), serde_json::to_string(&p).unwrap()).map_err(|e| e.to_string())?;
    let out = bin()
        .current_dir(dir)
        .args(["--json", "search", "p.json", "-c", "0.5", "--grid", "8"])
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), String::from_utf8_lossy(&out.stderr).into_owned())?;
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let t0 = v["t0"].as_f64().ok_or("t0")?;
    let (lo, hi) = (v["estimate"]["lower"].as_f64().ok_or("lower")?, v["estimate"]["upper"].as_f64().ok_or("upper")?);
    let bracket = v["bracket"][1].as_f64().ok_or("bracket")? - v["bracket"][0].as_f64().ok_or("bracket")?;
    ensure((0.0..=1.0).contains(&t0), format!("t0 = {t0}"))?;
    ensure(lo <= 0.5 && 0.5 <= hi, format!("[{lo}, {hi}] misses 0.5"))?;
    ensure(bracket <= BRACKET, format!("bracket {bracket}"))?;
    let lib = find_t(&p, 0.5, &SearchOptions::default()).map_err(|e| e.to_string())?;
    ensure(lib.t0 == t0, "library and command disagree")?;
    within(start.elapsed(), Duration::from_secs(600))?;
    Ok(format!("t0 = {t0:.6}, [{lo:.6}, {hi:.6}], bracket {bracket:.2e}, {:?}", start.elapsed()))
}

fn pair(r1: f64, r2: f64) -> Ifs64 {
    Ifs::from_parts(1, &[(r1, vec![0.0]), (r2, vec![1.0 - r2])]).unwrap()
}

fn triple(r: [f64; 3]) -> Ifs64 {
    let corners = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    let parts: Vec<(f64, Vec<f64>)> = r
        .iter()
        .zip(corners)
        .map(|(&r, c)| (r, vec![c[0] * (1.0 - r), c[1] * (1.0 - r)]))
        .collect();
    Ifs::from_parts(2, &parts).unwrap()
}

/// Exhaustive depth-limited sum: mass surely inside `u`, mass possibly in it.
fn brute_force(m: &NaturalMeasure<f64>, u: &Ball<f64>) -> (f64, f64) {
    let hat = m.invariant_ball().clone();
    let w = m.weights();
    let d = hat.center.dim();
    let mut stack = vec![(1.0f64, 1.0f64, vec![0.0; d], 0u32)];
    let (mut lo, mut hi) = (0.0, 0.0);
    while let Some((weight, ratio, shift, k)) = stack.pop() {
        let c: Vec<f64> = hat.center.coords().iter().zip(&shift).map(|(x, t)| ratio * x + t).collect();
        let rad = hat.radius * ratio;
        let dist = c.iter().zip(u.center.coords()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        if dist + rad <= u.radius {
            lo += weight;
            hi += weight;
        } else if dist <= u.radius + rad {
            if k == BRUTE_DEPTH {
                hi += weight;
            } else {
                for (j, map) in m.ifs().maps().iter().enumerate() {
                    let t = map.translation.coords().iter().zip(&shift).map(|(a, t)| ratio * a + t).collect();
                    stack.push((weight * w[j], ratio * map.ratio, t, k + 1));
                }
            }
        }
    }
    (lo, hi)
}

fn invariant_suites() -> Outcome {
    let budget = Budget::default();
    let mut systems: Vec<Ifs64> = Vec::new();
    for r1 in [0.1, 0.25, 0.4] {
        for r2 in [0.15, 1.0 / 3.0] {
            systems.push(pair(r1, r2));
        }
    }
    for r in [[0.1, 0.2, 0.3], [0.3, 0.3, 0.3], [0.25, 0.15, 0.2]] {
        systems.push(triple(r));
    }

    let mut enumerations = 0;
    for f in &systems {
        for cut in [0.3, 0.05, 0.004] {
            let total: f64 = cylinders(f, cut, &budget).map_err(|e| e.to_string())?.iter().map(|c| c.weight).sum();
            ensure((total - 1.0).abs() <= WEIGHT_SUM_TOL, format!("(a) weight sum {total}"))?;
            enumerations += 1;
        }
    }

    let opts = EstimateOptions::default();
    for f in systems.iter().filter(|f| f.dimension() == 1).take(4) {
        let s = similarity_dimension(f);
        let a = estimate(&NaturalMeasure::new(f.clone()), &opts).map_err(|e| e.to_string())?;
        let b = estimate(&NaturalMeasure::new(f.conjugated(3.0)), &opts).map_err(|e| e.to_string())?;
        let k = 3f64.powf(s);
        for (x, y) in [(a.lower, b.lower), (a.upper, b.upper)] {
            ensure((y / (x * k) - 1.0).abs() <= SCALE_TOL, format!("(b) {y} vs {}", x * k))?;
        }
    }

    let mut probes = 0;
    for f in &systems {
        let m = NaturalMeasure::new(f.clone());
        let d = f.dimension();
        for (i, rad) in [0.05, 0.2, 0.45, 0.8].into_iter().enumerate() {
            let c = 0.15 + 0.2 * i as f64;
            let u = Ball::new(Point::new(vec![c; d]), rad);
            let mu = measure_of(&ConvexCandidate::Ball(u.clone()), &m, 1e-6, &budget).map_err(|e| e.to_string())?;
            let (lo, hi) = brute_force(&m, &u);
            ensure(mu.lo <= hi + 1e-12 && mu.hi >= lo - 1e-12, format!("(c) {mu:?} vs [{lo}, {hi}]"))?;
            probes += 1;
        }
    }

    for d in 1..=3 {
        for diam in [0.5, 1.0, 3.0] {
            let ball = Ball::new(Point::<f64>::origin(d), diam / 2.0);
            let rel = (isodiametric_bound(diam, d) - ball.volume()).abs() / ball.volume();
            ensure(rel < OMEGA_TOL, format!("(d) d = {d}, diam = {diam}: {rel}"))?;
        }
    }

    let omega = [2.0, std::f64::consts::PI, 4.0 * std::f64::consts::PI / 3.0];
    for (d, want) in (1..=3).zip(omega) {
        ensure((unit_ball_volume::<f64>(d) - want).abs() <= OMEGA_TOL * want, format!("(e) omega_{d}"))?;
    }
    Ok(format!("{enumerations} enumerations, 4 scalings, {probes} brute-force probes, isodiametric and omega_d"))
}

fn svg_dots(svg: &str) -> Vec<(f64, f64)> {
    svg.lines()
        .filter(|l| l.contains(r#"r="3.000""#))
        .map(|l| {
            let attr = |k: &str| {
                let at = l.find(&format!(r#"{k}=""#)).unwrap() + k.len() + 2;
                l[at..].split('"').next().unwrap().parse::<f64>().unwrap()
            };
            (attr("cx"), attr("cy"))
        })
        .collect()
}

fn figure_regeneration(dir: &Path) -> Outcome {
    let run = |args: &[&str]| -> Result<(), String> {
        let out = bin().current_dir(dir).args(args).output().map_err(|e| e.to_string())?;
        ensure(out.status.success(), String::from_utf8_lossy(&out.stderr).into_owned())
    };
    run(&["construct", "-d", "2", "-s", "0.8", "-e", "0.5", "--force-n", "3", "-o", "f.json"])?;
    let p: Params64 = serde_json::from_str(&fs::read_to_string(dir.join("f.json")).unwrap()).unwrap();
    ensure(p.ell == 29, format!("ell = {}", p.ell))?;
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let (scale, mid) = (560.0, 320.0);
    let mut notes = Vec::new();
    for (t, name) in [("0", "figure1a.svg"), ("1", "figure1b.svg")] {
        run(&["plot", "f.json", "-t", t, "--depth", "1", "-o", name])?;
        let svg = fs::read_to_string(dir.join(name)).unwrap();
        let want = fs::read_to_string(golden.join(name)).map_err(|e| format!("{name}: {e}"))?;
        ensure(svg == want, format!("{name} differs from golden"))?;
        let dots = svg_dots(&svg);
        ensure(dots.len() == 29, format!("{name}: {} dots", dots.len()))?;
        let r = |(x, y): (f64, f64)| ((x - mid).powi(2) + (y - mid).powi(2)).sqrt() / scale;
        ensure(dots.iter().all(|&q| r(q) <= 0.5 + 1e-3), format!("{name}: dot outside the unit disc"))?;
        ensure(dots[..2] == [(mid - 0.5 * scale, mid), (mid + 0.5 * scale, mid)], format!("{name}: b1, b2 moved"))?;
        if t == "0" {
            let on_lattice = dots.iter().all(|&(x, y)| {
                let g = |v: f64| (v - mid) / scale * 2.0 * p.n as f64;
                (g(x) - g(x).round()).abs() < 1e-3 && (g(y) - g(y).round()).abs() < 1e-3
            });
            ensure(on_lattice, "t = 0 dots off the lattice")?;
        } else {
            let v = p.inner_ball().radius;
            ensure(dots[2..].iter().all(|&q| r(q) <= v + 1e-3), "t = 1 dots outside V")?;
        }
        notes.push(format!("{name} matches golden"));
    }
    Ok(format!("29 dots each; {}", notes.join(", ")))
}

fn k0_bound_check() -> Outcome {
    let mut shown = Vec::new();
    for (d, s, eps) in [(1, 0.5, 0.5), (1, 0.5, 0.4), (1, 0.3, 0.6), (1, 0.7, 0.5), (2, 1.5, 0.5)] {
        let p = construct(d, s, eps, None).map_err(|e| e.to_string())?;
        ensure(check_lemma22(p.n, d, s, eps), format!("lemma22 fails for ({d}, {s}, {eps})"))?;
        let k0 = certified_k0_bound(&p);
        ensure(k0 > 1.0 - eps, format!("({d}, {s}, {eps}): {k0} <= {}", 1.0 - eps))?;
        shown.push(format!("{k0:.4}"));
    }
    Ok(format!("bounds {} all exceed 1 - eps", shown.join(", ")))
}

fn main() {
    let dir = tempfile::TempDir::new().expect("temp dir");
    let criteria: Vec<(&str, &str, Box<dyn Fn() -> Outcome>)> = vec![
        ("1", "construction reproduction (d = 1)", Box::new(construction_d1)),
        ("2", "endpoint bounds", Box::new(endpoint_bounds)),
        ("3", "cube identity", Box::new(cube_identity)),
        ("4", "Cantor oracle", Box::new(cantor_oracle)),
        ("5", "search endgame", Box::new(|| search_endgame(dir.path()))),
        ("6", "invariant suites", Box::new(invariant_suites)),
        ("7", "figure regeneration", Box::new(|| figure_regeneration(dir.path()))),
        ("k0", "certified t = 0 lower bound", Box::new(k0_bound_check)),
    ];
    let mut failed = 0;
    for (id, name, check) in &criteria {
        match check() {
            Ok(detail) => println!("criterion {id:>2} PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {id:>2} FAIL  {name}: {why}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
