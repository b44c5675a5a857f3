//! Randomized invariants of the quadrature, the Hilbert transform, the
//! operator `T` and the profile reconstruction.

use std::f64::consts::PI;

use proptest::prelude::*;

use selfsim_core::grid::{half_line_totals, integrate_from_zero, Grid, GridFunction, GridSpec};
use selfsim_core::hilbert::{hilbert_transform, TailModel};
use selfsim_core::system::{g_to_big_g, Parameters, System};
use selfsim_core::verify::check_x1_membership;
use selfsim_core::{reconstruct_profile, Normalization};

fn grid() -> &'static Grid {
    static G: std::sync::OnceLock<Grid> = std::sync::OnceLock::new();
    G.get_or_init(|| GridSpec::default().build().unwrap())
}

/// Gaussian in `ln|x|` centred at `ln c` with width `w`: even, bounded, and
/// vanishing at 0 and infinity faster than any power.
fn log_bump(x: f64, c: f64, w: f64) -> f64 {
    let u = (x.abs() / c).ln() / w;
    (-0.5 * u * u).exp()
}

prop_compose! {
    /// `sum a_k bump(c_k, w_k)` with two or three terms.
    fn even_density(max_amp: f64)(terms in prop::collection::vec(
        (-max_amp..max_amp, -2.0f64..2.0, 0.3f64..1.5), 2..4)) -> Vec<(f64, f64, f64)> {
        terms.into_iter().map(|(a, lc, w)| (a, 10f64.powf(lc), w)).collect()
    }
}

fn eval_terms(terms: &[(f64, f64, f64)], x: f64) -> f64 {
    terms.iter().map(|&(a, c, w)| a * log_bump(x, c, w)).sum()
}

fn params() -> impl Strategy<Value = Parameters> {
    (0.6f64..1.9, 0.05f64..0.45).prop_map(|(mu, nu)| Parameters::new(mu, nu).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn even_integrand_has_equal_half_lines(terms in even_density(2.0)) {
        let g = grid();
        // Lorentzian-weighted so both ends are pure powers
        let f = GridFunction::from_fn(g, |x| (1.0 + eval_terms(&terms, x).abs()) / (1.0 + x * x))
            .with_zero_exponent(0.0)
            .with_tail_exponent(2.0);
        let (m, p) = half_line_totals(g, &f).unwrap();
        prop_assert!((m - p).abs() <= 1e-12 * p.abs(), "{m} vs {p}");
    }

    #[test]
    fn pure_powers_integrate_exactly(p in -0.9f64..3.0) {
        let g = grid();
        let f = GridFunction::from_fn(g, |x| x.abs().powf(p))
            .with_zero_exponent(p)
            .with_tail_exponent(-p);
        let big = integrate_from_zero(g, &f).unwrap();
        let xs = g.positive();
        let prim = |x: f64| x.powf(p + 1.0) / (p + 1.0);
        prop_assert!((big.plus[0] - prim(xs[0])).abs() <= 1e-10 * prim(xs[0]));
        for k in 1..xs.len() {
            let want = prim(xs[k]) - prim(xs[k - 1]);
            let cell = big.plus[k] - big.plus[k - 1];
            prop_assert!((cell - want).abs() <= 1e-10 * want, "cell ending at {}: {cell} vs {want}", xs[k]);
            let cell = big.minus[k - 1] - big.minus[k];
            prop_assert!((cell - want).abs() <= 1e-10 * want);
        }
    }

    #[test]
    fn hilbert_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, s in 0.2f64..5.0) {
        let g = grid();
        let f1 = GridFunction::from_fn(g, |x| 1.0 / (1.0 + x * x));
        let f2 = GridFunction::from_fn(g, |x| x / (s * s + x * x) / (1.0 + x * x));
        let t1 = TailModel::fit(g, &f1, &[2.0, 4.0]).unwrap();
        let t2 = TailModel::fit(g, &f2, &[3.0, 5.0]).unwrap();
        let combo = f1.combine(a, &f2, b);
        let tc = TailModel::fit(g, &combo, &[2.0, 3.0, 4.0, 5.0]).unwrap();
        let lhs = hilbert_transform(g, &combo, &tc).unwrap();
        let rhs = hilbert_transform(g, &f1, &t1).unwrap().combine(a, &hilbert_transform(g, &f2, &t2).unwrap(), b);
        let scale = 1.0 + a.abs() + b.abs();
        prop_assert!(lhs.sup_distance(&rhs) <= 1e-10 * scale, "{}", lhs.sup_distance(&rhs));
    }

    #[test]
    fn hilbert_swaps_parity(terms in even_density(1.0)) {
        let g = grid();
        let f = GridFunction::from_fn(g, |x| eval_terms(&terms, x) / (1.0 + x * x));
        let tail = TailModel::fit(g, &f, &[2.0, 4.0]).unwrap();
        let hf = hilbert_transform(g, &f, &tail).unwrap();
        let odd = hf.plus.iter().zip(&hf.minus).fold(0.0f64, |m, (p, q)| m.max((p + q).abs()));
        prop_assert!(odd <= 1e-6, "{odd}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn t_keeps_the_log_corrected_part_even(p in params(), terms in even_density(0.3)) {
        let g = grid();
        let dens = GridFunction::from_fn(g, |x| eval_terms(&terms, x));
        let s = System::new(g.clone(), p).apply(&dens).unwrap();
        let big = g_to_big_g(g, &s.tg, &p);
        let odd = big.plus.iter().zip(&big.minus).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        prop_assert!(odd <= 1e-6, "{odd}");
    }

    #[test]
    fn t_maps_the_cone_into_itself(p in params(), terms in even_density(0.15)) {
        let g = grid();
        let dens = GridFunction::from_fn(g, |x| eval_terms(&terms, x));
        prop_assume!(check_x1_membership(g, &dens, &p).passed());
        let s = System::new(g.clone(), p).apply(&dens).unwrap();
        let r = check_x1_membership(g, &s.tg, &p);
        prop_assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn log_derivative_of_hinv_is_pinched(p in params(), terms in even_density(0.15)) {
        let g = grid();
        let dens = GridFunction::from_fn(g, |x| eval_terms(&terms, x));
        prop_assume!(check_x1_membership(g, &dens, &p).passed());
        let s = System::new(g.clone(), p).apply(&dens).unwrap();
        let (lo, hi) = ((1.0 - p.nu() - 6.0 * p.spread()).exp(), 1.0 / p.nu());
        for (k, &x) in g.positive().iter().enumerate() {
            let r = s.hinv.plus[k] / (x * s.hinv_prime.plus[k]);
            prop_assert!(r >= lo * (1.0 - 1e-3) && r <= hi * (1.0 + 1e-3), "x={x}: {r} not in [{lo}, {hi}]");
        }
    }

    #[test]
    fn reconstructed_curve_has_unit_speed_and_right_turning(p in params(), terms in even_density(0.5)) {
        // the crest is resolved only when beta(x_min) is small
        let g = &p.recommended_grid().build().unwrap();
        let dens = GridFunction::from_fn(g, |x| eval_terms(&terms, x));
        let s = System::new(g.clone(), p).apply(&dens).unwrap();
        let prof = reconstruct_profile(g, &s, &p, Normalization::Symmetric).unwrap();
        prop_assert!(prof.unit_speed_defect() <= 1e-12);
        prop_assert!(prof.chord_excess() <= 1e-6, "{}", prof.chord_excess());
        prop_assert!(prof.reflection_defect() <= 1e-6);
        prop_assert!((prof.total_turning() - p.turning()).abs() <= 1e-4, "{}", prof.total_turning());
        let (l, r) = prof.tangent_limits();
        prop_assert!(((l - r) - (1.0 - p.nu()) * PI).abs() <= 1e-12);
        // the innermost chords approach the tangents at a rate set by how
        // fast this g decays at the crest, so only a coarse match here
        prop_assert!((prof.corner_angle() - p.nu() * PI).abs() <= 1e-3, "corner {} vs {}", prof.corner_angle(), p.nu() * PI);
        // b is non-decreasing in beta on each side of the crest
        for half in [&prof.b.plus, &prof.b.minus] {
            let beta = if std::ptr::eq(half, &prof.b.plus) { &prof.beta.plus } else { &prof.beta.minus };
            for k in 1..half.len() {
                let rising = (half[k] - half[k - 1]) * (beta[k] - beta[k - 1]).signum();
                prop_assert!(rising >= -1e-12, "b decreases at beta = {}", beta[k]);
            }
        }
        prop_assert!(prof.a.values().iter().all(|a| *a >= -1e-10));
    }

    #[test]
    fn window_is_exactly_the_admissible_set(mu in -1.0f64..3.0, nu in -0.5f64..1.0) {
        let inside = mu > 0.5 && mu <= 2.0 && nu > 0.0 && nu < 0.5;
        prop_assert_eq!(Parameters::new(mu, nu).is_ok(), inside);
    }
}
