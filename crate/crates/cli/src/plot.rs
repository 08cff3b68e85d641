//! Deterministic SVG output: attractor cylinders and sweep bands.

use std::fmt::Write;

use hausdorff_forge::geometry::{Ball, Point};
use hausdorff_forge::ifs::Ifs;

use crate::table::SweepRow;

const SIZE: f64 = 640.0;
const SCALE: f64 = 560.0;

fn px(x: f64) -> f64 {
    SIZE / 2.0 + x * SCALE
}

fn py(y: f64) -> f64 {
    SIZE / 2.0 - y * SCALE
}

fn header(s: &mut String, w: f64, h: f64) {
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#
    );
    let _ = writeln!(s, r#"<rect width="{w:.0}" height="{h:.0}" fill="white"/>"#);
}

fn circle(s: &mut String, b: &Ball<f64>, style: &str) {
    let c = b.center.coords();
    let y = c.get(1).copied().unwrap_or(0.0);
    let _ = writeln!(
        s,
        r#"<circle cx="{:.3}" cy="{:.3}" r="{:.3}" {style}/>"#,
        px(c[0]),
        py(y),
        b.radius * SCALE
    );
}

fn segment(s: &mut String, b: &Ball<f64>, style: &str) {
    let c = b.center.coords()[0];
    let _ = writeln!(
        s,
        r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="8.000" {style}/>"#,
        px(c - b.radius),
        py(0.0) - 4.0,
        2.0 * b.radius * SCALE
    );
}

/// Images of `B(0, 1/2)` under all words of length `depth`, the enclosing
/// ball, the optional inner ball `v` and the first-level fixed points.
pub fn attractor_svg(f: &Ifs<f64>, depth: u32, v: Option<&Ball<f64>>) -> String {
    let d = f.dimension();
    let unit = Ball::new(Point::origin(d), 0.5);
    let mut s = String::new();
    header(&mut s, SIZE, SIZE);
    let outline = r#"fill="none" stroke="black" stroke-width="1" stroke-dasharray="4 3""#;
    let piece = r#"fill="none" stroke="steelblue" stroke-width="0.6""#;
    let draw = |s: &mut String, b: &Ball<f64>, style: &str| {
        if d == 1 {
            segment(s, b, style)
        } else {
            circle(s, b, style)
        }
    };
    draw(&mut s, &unit, outline);
    if let Some(v) = v {
        draw(&mut s, v, r#"fill="none" stroke="firebrick" stroke-width="1""#);
    }
    // words as (ratio, shift), expanded in lexicographic order
    let mut words = vec![(1.0, Point::origin(d))];
    for _ in 0..depth {
        words = words
            .iter()
            .flat_map(|(r, t)| {
                f.maps()
                    .iter()
                    .map(move |m| (r * m.ratio, m.translation.affine(*r, t)))
            })
            .collect();
    }
    for (r, t) in &words {
        draw(&mut s, &Ball::new(unit.center.affine(*r, t), unit.radius * r), piece);
    }
    for p in f.fixed_points() {
        let c = p.coords();
        let _ = writeln!(
            s,
            r#"<circle cx="{:.3}" cy="{:.3}" r="3.000" fill="black"/>"#,
            px(c[0]),
            py(c.get(1).copied().unwrap_or(0.0))
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Step bands `[lower, upper]` against `t`; rigorous bands are filled,
/// heuristic ones hatched by a lighter fill.
pub fn sweep_svg(rows: &[SweepRow]) -> String {
    let (w, h) = (640.0, 400.0);
    let (left, right, top, bottom) = (60.0, 620.0, 20.0, 360.0);
    let ymax = rows.iter().map(|r| r.upper).filter(|u| u.is_finite()).fold(0.0f64, f64::max) * 1.05;
    let ymax = if ymax > 0.0 { ymax } else { 1.0 };
    let sx = |t: f64| left + t * (right - left);
    let sy = |y: f64| bottom - y.min(ymax) / ymax * (bottom - top);
    let mut ts: Vec<f64> = rows.iter().map(|r| r.t).collect();
    ts.sort_by(f64::total_cmp);
    let half = ts
        .windows(2)
        .map(|p| p[1] - p[0])
        .filter(|g| *g > 0.0)
        .fold(f64::INFINITY, f64::min)
        .min(1.0)
        / 2.0;
    let half = if half.is_finite() { half } else { 0.5 };

    let mut s = String::new();
    header(&mut s, w, h);
    let _ = writeln!(
        s,
        r#"<path d="M {left:.1} {top:.1} L {left:.1} {bottom:.1} L {right:.1} {bottom:.1}" fill="none" stroke="black" stroke-width="1"/>"#
    );
    for (t, anchor) in [(0.0, "start"), (1.0, "end")] {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="{anchor}">t = {t}</text>"#,
            sx(t),
            bottom + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="end">{ymax:.4}</text>"#,
        left - 4.0,
        top + 4.0
    );
    for r in rows {
        let fill = if r.lower_rigorous && r.upper_rigorous {
            "steelblue"
        } else {
            "lightsteelblue"
        };
        let x0 = sx((r.t - half).max(0.0));
        let x1 = sx((r.t + half).min(1.0));
        let (y0, y1) = (sy(r.upper), sy(r.lower));
        let _ = writeln!(
            s,
            r#"<rect x="{x0:.3}" y="{y0:.3}" width="{:.3}" height="{:.3}" fill="{fill}" stroke="black" stroke-width="0.5"/>"#,
            x1 - x0,
            (y1 - y0).max(0.5)
        );
    }
    s.push_str("</svg>\n");
    s
}
