//! CSV and SVG exports of a reconstructed wave.
//!
//! Numbers are printed with Rust's shortest round-trip formatting, so the
//! files are byte-identical across runs with the same configuration.

use std::fmt::Write as _;

use num_complex::Complex64;
use selfsim_core::profile::CrossoverReport;
use selfsim_core::{Result, SelfSimilarWave, WaveProfile};

/// Column order of the profile table.
pub const PROFILE_COLUMNS: &str = "beta,re_zeta,im_zeta,b,a,re_w,im_w,abs_u,b_left,b_right";

/// Column order of the `Z(alpha, t)` tables.
pub const SPACETIME_COLUMNS: &str = "alpha,re_z,im_z,re_zt,im_zt,a";

/// Column order of the surface-tension table.
pub const TENSION_COLUMNS: &str = "t,alpha_c";

/// All nodes of both halves in ascending `beta`, with the crest `beta = 0`
/// between them: `(beta, half, index)`, `half = None` at the crest.
fn ordered_nodes(p: &WaveProfile) -> Vec<(f64, Option<(bool, usize)>)> {
    let n = p.beta.plus.len();
    let mut out = Vec::with_capacity(2 * n + 1);
    out.extend((0..n).rev().map(|j| (p.beta.minus[j], Some((false, j)))));
    out.push((0.0, None));
    out.extend((0..n).map(|j| (p.beta.plus[j], Some((true, j)))));
    out
}

/// One row per node plus the crest row. At the crest `b` jumps, so its cell
/// is empty and the one-sided tangent angles fill `b_left` and `b_right`.
pub fn profile_csv(p: &WaveProfile) -> String {
    let mut s = String::new();
    writeln!(s, "{PROFILE_COLUMNS}").unwrap();
    for (beta, at) in ordered_nodes(p) {
        match at {
            None => {
                let (l, r) = p.tangent_limits();
                writeln!(s, "0,0,0,,0,0,0,0,{l},{r}").unwrap();
            }
            Some((plus, j)) => {
                let pick = |f: &selfsim_core::GridFunction| if plus { f.plus[j] } else { f.minus[j] };
                let pickc = |f: &selfsim_core::GridFunction<Complex64>| if plus { f.plus[j] } else { f.minus[j] };
                let (z, w, u) = (pickc(&p.zeta), pickc(&p.w), pickc(&p.u));
                writeln!(
                    s,
                    "{beta},{},{},{},{},{},{},{},,",
                    z.re,
                    z.im,
                    pick(&p.b),
                    pick(&p.a),
                    w.re,
                    w.im,
                    u.norm()
                )
                .unwrap();
            }
        }
    }
    s
}

/// `Z(alpha, t)`, `Z_t` and `A` at `alpha = t beta` for every node `beta`,
/// with the crest row at `alpha = 0`.
pub fn spacetime_csv(wave: &SelfSimilarWave, t: f64) -> Result<String> {
    let mut s = String::new();
    writeln!(s, "{SPACETIME_COLUMNS}").unwrap();
    for (beta, _) in ordered_nodes(&wave.profile) {
        let alpha = t * beta;
        let p = wave.evaluate(alpha, t)?;
        writeln!(
            s,
            "{alpha},{},{},{},{},{}",
            p.z.re, p.z.im, p.velocity.re, p.velocity.im, p.a
        )
        .unwrap();
    }
    Ok(s)
}

pub fn tension_csv(r: &CrossoverReport) -> String {
    let mut s = String::new();
    writeln!(s, "{TENSION_COLUMNS}").unwrap();
    for (t, a) in &r.crossings {
        writeln!(s, "{t},{a}").unwrap();
    }
    s
}

/// Half-width of the `beta` range drawn in the SVG.
pub const SVG_BETA_RANGE: f64 = 10.0;
const SVG_SIZE: (f64, f64) = (800.0, 600.0);
const SVG_MARGIN: f64 = 40.0;
const ARROW_BETAS: [f64; 5] = [0.5, 1.0, 2.0, 4.0, 8.0];

/// The crest profile for `|beta| <= SVG_BETA_RANGE`, velocity arrows at a few
/// points, and the two tangent segments leaving the crest
/// (`<line class="tangent">`). One scale is used for both axes, so angles on
/// the page equal angles in the plane.
pub fn profile_svg(p: &WaveProfile) -> String {
    let pts: Vec<Complex64> = ordered_nodes(p)
        .into_iter()
        .filter(|(b, _)| b.abs() <= SVG_BETA_RANGE)
        .map(|(b, _)| p.sample(b).zeta)
        .collect();
    let (lo, hi) = pts.iter().fold(
        (Complex64::new(f64::INFINITY, f64::INFINITY), Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY)),
        |(lo, hi), z| {
            (
                Complex64::new(lo.re.min(z.re), lo.im.min(z.im)),
                Complex64::new(hi.re.max(z.re), hi.im.max(z.im)),
            )
        },
    );
    let span = hi - lo;
    let scale = ((SVG_SIZE.0 - 2.0 * SVG_MARGIN) / span.re.max(1e-12)).min((SVG_SIZE.1 - 2.0 * SVG_MARGIN) / span.im.max(1e-12));
    // page y grows downwards
    let page = |z: Complex64| (SVG_MARGIN + (z.re - lo.re) * scale, SVG_MARGIN + (hi.im - z.im) * scale);

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        SVG_SIZE.0, SVG_SIZE.1, SVG_SIZE.0, SVG_SIZE.1
    )
    .unwrap();
    writeln!(
        s,
        "<!-- mu={} nu={} kappa={} normalization={:?} -->",
        p.params.mu(),
        p.params.nu(),
        p.kappa,
        p.normalization
    )
    .unwrap();
    let path: Vec<String> = pts
        .iter()
        .map(|z| {
            let (x, y) = page(*z);
            format!("{x:.3},{y:.3}")
        })
        .collect();
    writeln!(
        s,
        r#"<polyline class="profile" fill="none" stroke="black" stroke-width="1.5" points="{}"/>"#,
        path.join(" ")
    )
    .unwrap();

    let (l, r) = p.tangent_limits();
    let len = 0.15 * span.re.max(span.im);
    let (x0, y0) = page(Complex64::new(0.0, 0.0));
    for (side, dir) in [("left", -Complex64::from_polar(1.0, l)), ("right", Complex64::from_polar(1.0, r))] {
        let (x1, y1) = page(dir * len);
        writeln!(
            s,
            r#"<line class="tangent" data-side="{side}" x1="{x0:.6}" y1="{y0:.6}" x2="{x1:.6}" y2="{y1:.6}" stroke="red" stroke-dasharray="4 3"/>"#
        )
        .unwrap();
    }

    let samples: Vec<(Complex64, Complex64)> = ARROW_BETAS
        .iter()
        .flat_map(|b| [-b, *b])
        .map(|b| {
            let q = p.sample(b);
            (q.zeta, q.w)
        })
        .collect();
    let wmax = samples.iter().fold(0.0f64, |m, (_, w)| m.max(w.norm()));
    let arrow = if wmax > 0.0 { 0.1 * span.re.max(span.im) / wmax } else { 0.0 };
    for (z, w) in samples {
        let (x1, y1) = page(z);
        let (x2, y2) = page(z + w * arrow);
        writeln!(
            s,
            r#"<line class="velocity" x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}" stroke="steelblue"/>"#
        )
        .unwrap();
        writeln!(s, r#"<circle cx="{x2:.3}" cy="{y2:.3}" r="2" fill="steelblue"/>"#).unwrap();
    }
    writeln!(s, "</svg>").unwrap();
    s
}

/// Interior angle at the crest from the two `tangent` lines of an SVG
/// written by [`profile_svg`].
pub fn svg_corner_angle(svg: &str) -> Option<f64> {
    let attr = |line: &str, name: &str| -> Option<f64> {
        let key = format!(" {name}=\"");
        let start = line.find(&key)? + key.len();
        let end = line[start..].find('"')? + start;
        line[start..end].parse().ok()
    };
    let dirs: Vec<Complex64> = svg
        .lines()
        .filter(|l| l.contains(r#"class="tangent""#))
        .map(|l| {
            Some(Complex64::new(
                attr(l, "x2")? - attr(l, "x1")?,
                attr(l, "y2")? - attr(l, "y1")?,
            ))
        })
        .collect::<Option<_>>()?;
    match dirs.as_slice() {
        [a, b] => Some((a * b.conj()).arg().abs()),
        _ => None,
    }
}
