use bellman_strip::field::{classify_stationary, classify_s, curve_values, eigenvalues, normal_form, velocity, Classification, Eigenvalues, FieldKind};
use bellman_strip::patches::rect::rect_from_vertex_values;
use bellman_strip::patches::{chord_frame, rect_patch, spine_value};
use bellman_strip::regimes::{closed_roots, critical_epsilons_closed};
use bellman_strip::spine::{stationary_roots, trace_spine, trace_upper, ExitKind};
use bellman_strip::{build_foliation, canonicalize, regime_at, BoundaryPair, Regime, Side, StripPoint, TraceControls};
use proptest::prelude::*;

fn pocket() -> BoundaryPair {
    BoundaryPair::new([1.0, 0.0, 1.0, 0.0], [0.0; 4])
}

fn two_pockets() -> BoundaryPair {
    BoundaryPair::new([1.0, 0.0, 1.0, 0.0], [-1.0, 0.0, 0.0, 0.0])
}

fn coeffs() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(-3.0..3.0f64)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

/// Canonical pairs with a negative discriminant: f₊′ − f₋′ > 0 everywhere.
fn negative_pairs() -> impl Strategy<Value = BoundaryPair> {
    (0.3..3.0f64, -0.95..0.95f64, -2.0..2.0f64, 0.1..3.0f64, coeffs()).prop_map(|(ap, r, a2, q, m)| {
        let am = r * ap;
        let da3 = ap - am;
        // a1 chosen so that q_min = q
        let da2 = a2 - m[1];
        let da1 = q + da2 * da2 / (3.0 * da3);
        BoundaryPair::new([ap, a2, m[2] + da1, m[3]], [am, m[1], m[2], m[3]])
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn interior_forms_meet_boundary_forms(fp in coeffs(), fm in coeffs(), u in -3.0..3.0f64, eps in 0.01..3.0f64, k in 0.01..1.0f64) {
        let p = BoundaryPair::new(fp, fm);
        let top = StripPoint::new(u, eps);
        prop_assert!(rel(p.d_plus_numerator(top), 2.0 * eps * p.d_plus_boundary(u, eps)) < 1e-12);
        prop_assert!(rel(p.d_minus_numerator(top), 2.0 * eps * p.d_minus_boundary(u, eps)) < 1e-12);
        // the cubic closed forms agree with the derivative forms inside the strip
        for x2 in [k * eps, -k * eps] {
            let x = StripPoint::new(u, x2);
            let s = 1f64.max(u.abs() + eps).powi(2) * (fp.iter().chain(&fm).fold(0.0f64, |m, c| m.max(c.abs())));
            prop_assert!((p.d_plus_numerator(x) - p.d_plus_quadratic(x)).abs() <= 1e-12 * s.max(1.0));
            prop_assert!((p.d_minus_numerator(x) - p.d_minus_quadratic(x)).abs() <= 1e-12 * s.max(1.0));
        }
    }

    #[test]
    fn canonical_form_undoes_to_the_input(fp in coeffs(), fm in coeffs()) {
        let raw = BoundaryPair::new(fp, fm);
        let (c, rec) = canonicalize(raw);
        prop_assert_eq!(c.apply(rec), raw);
        prop_assert!(c.f_plus.a3().abs() >= c.f_minus.a3().abs());
        prop_assert!(c.f_plus.a3() >= 0.0);
    }

    #[test]
    fn d_minus_is_d_plus_of_the_swapped_pair(fp in coeffs(), fm in coeffs(), x1 in -3.0..3.0f64, x2 in 0.01..2.0f64, sg in prop::bool::ANY) {
        let p = BoundaryPair::new(fp, fm);
        let x2 = if sg { x2 } else { -x2 };
        let eps = 2.0;
        let a = p.d_minus(StripPoint::new(x1, x2), eps).unwrap();
        let b = p.swapped().d_plus(StripPoint::new(x1, -x2), eps).unwrap();
        prop_assert!(rel(a, b) < 1e-12, "{} {}", a, b);
    }

    #[test]
    fn mirrored_field_is_the_left_field_of_the_reflected_pair(fp in coeffs(), fm in coeffs(), x1 in -3.0..3.0f64, x2 in -1.0..1.0f64) {
        let p = BoundaryPair::new(fp, fm);
        let eps = 1.0;
        let r = velocity(&p, FieldKind::RightSpine, StripPoint::new(x1, x2), eps);
        let l = velocity(&p.reflected(), FieldKind::LeftSpine, StripPoint::new(-x1, x2), eps);
        // (−L₁, L₂) traversed backwards
        let s = 1f64.max(r.0.abs()).max(r.1.abs());
        prop_assert!((r.0 - l.0).abs() <= 1e-12 * s && (r.1 + l.1).abs() <= 1e-12 * s, "{:?} {:?}", r, l);
    }

    #[test]
    fn eigenpairs_of_the_normal_form(s in -30.0..30.0f64) {
        prop_assume!(s.abs() > 1e-6);
        let m = normal_form(FieldKind::LeftSpine, Side::Upper, s);
        let norm = m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        match eigenvalues(s) {
            Eigenvalues::Real(l1, l2) => {
                for l in [l1, l2] {
                    prop_assert!((l * l - s * l - 2.0 * s).abs() <= 1e-10 * (1.0 + s * s));
                    let den = s - 1.0 - l;
                    if den.abs() < 1e-9 {
                        continue;
                    }
                    let v = [1.0, 1.0 / den];
                    let vn = v[0].hypot(v[1]);
                    let r0 = (m[0][0] - l) * v[0] + m[0][1] * v[1];
                    let r1 = m[1][0] * v[0] + (m[1][1] - l) * v[1];
                    prop_assert!(r0.hypot(r1) <= 1e-8 * norm * vn, "s={} l={}", s, l);
                }
            }
            Eigenvalues::Complex { re, im } => {
                // (re + i·im)² − s(re + i·im) − 2s = 0
                let real = re * re - im * im - s * re - 2.0 * s;
                let imag = 2.0 * re * im - s * im;
                prop_assert!(real.abs() <= 1e-10 * (1.0 + s * s) && imag.abs() <= 1e-10 * (1.0 + s * s));
            }
        }
    }

    #[test]
    fn classification_sees_only_s(eps in 0.3..3.0f64, k in prop_oneof![-5.0..-0.2f64, 0.2..5.0f64], left in prop::bool::ANY) {
        let p = pocket();
        let roots = stationary_roots(&p, FieldKind::LeftSpine, Side::Upper, eps).roots;
        prop_assume!(roots.len() == 2);
        let u = if left { roots[0] } else { roots[1] };
        let scaled = BoundaryPair::new(p.f_plus.0.map(|c| k * c), p.f_minus.0.map(|c| k * c));
        let a = classify_stationary(&p, u, Side::Upper, FieldKind::LeftSpine, eps).unwrap();
        let b = classify_stationary(&scaled, u, Side::Upper, FieldKind::LeftSpine, eps).unwrap();
        prop_assert!(rel(a.s, b.s) < 1e-12);
        prop_assert!(rel(b.prefactor, k * a.prefactor) < 1e-12);
        prop_assert_eq!(a.classification, b.classification);
        prop_assert_eq!(a.classification, classify_s(a.s).unwrap());
    }

    #[test]
    fn slopes_of_the_zero_curves_at_stationary_points(pair in negative_pairs(), t in 1e-3..2.0f64, left in prop::bool::ANY) {
        let e0 = critical_epsilons_closed(&pair).eps0_plus.unwrap();
        let eps = e0 * (1.0 + t);
        let (ul, ur) = closed_roots(&pair, eps).upper.unwrap();
        let u = if left { ul } else { ur };
        let Ok(info) = classify_stationary(&pair, u, Side::Upper, FieldKind::LeftSpine, eps) else { return Ok(()) };
        let ek = eps * info.kappa;
        let h = 1e-5 * eps;
        let at = |x1: f64, x2: f64| curve_values(&pair, StripPoint::new(x1, x2), eps);
        let (xp, xm, yp, ym) = (at(u + h, eps), at(u - h, eps), at(u, eps + h), at(u, eps - h));
        let d1 = [(xp.0 - xm.0) / (2.0 * h), (xp.1 - xm.1) / (2.0 * h), (xp.2 - xm.2) / (2.0 * h)];
        let d2 = [(yp.0 - ym.0) / (2.0 * h), (yp.1 - ym.1) / (2.0 * h), (yp.2 - ym.2) / (2.0 * h)];
        let expect = [1.0 / ek, 1.0 / (1.0 + 2.0 * ek), 1.0 / (2.0 + 3.0 * ek)];
        for i in 0..3 {
            let got = -d1[i] / d2[i];
            prop_assert!((got - expect[i]).abs() <= 1e-6 * expect[i].abs().max(1.0), "curve {} got {} want {}", i, got, expect[i]);
        }
    }

    #[test]
    fn pocket_opens_like_a_square_root(pair in negative_pairs()) {
        let e0 = critical_epsilons_closed(&pair).eps0_plus.unwrap();
        let eps = e0 * (1.0 + 1e-6);
        let r = stationary_roots(&pair, FieldKind::LeftSpine, Side::Upper, eps).roots;
        prop_assert_eq!(r.len(), 2);
        let (ap, da3) = (pair.f_plus.a3(), pair.da3());
        let want = 4.0 * (ap / da3).sqrt() * (eps * eps - e0 * e0).sqrt();
        prop_assert!(((r[1] - r[0]) / want - 1.0).abs() < 1e-3, "{} {}", r[1] - r[0], want);
    }

    #[test]
    fn rect_coefficients_solve_the_vertex_system(c1 in -1.0..1.0f64, f in 0.1..0.9f64, sg in prop::bool::ANY, eps in 0.1..2.0f64, fm in coeffs()) {
        let p = BoundaryPair::new([1.0, 0.0, 1.0, 0.0], fm);
        let c2 = if sg { f * eps } else { -f * eps };
        let c = StripPoint::new(c1, c2);
        let r = rect_patch(&p, c, eps);
        let (al, ar) = r.spine_vertex_values(&p);
        let s = rect_from_vertex_values(c, eps, p.fp(0, c1 + c2), p.fm(0, c1 - c2), al, ar);
        for (x, y) in [(r.a, s.a), (r.b, s.b), (r.cc, s.cc), (r.d, s.d)] {
            prop_assert!(rel(x, y) < 1e-9, "{} {}", x, y);
        }
    }

    #[test]
    fn chord_ends_sit_on_the_diagonals(p in -1.0..2.0f64, f in -0.9..0.9f64, eps in 0.1..2.0f64) {
        let pair = two_pockets();
        let t = f * eps;
        let cf = chord_frame(&pair, p, t, eps);
        let spine = StripPoint::new(p, t);
        let up = cf.upper_end;
        // chord ends and spine point lie on slope ±1 lines
        prop_assert!(((up.x1 - spine.x1) + (up.x2 - spine.x2)).abs() <= 1e-12 * (1.0 + p.abs() + eps));
        prop_assert!(((spine.x1 - cf.lower_end.x1) - (spine.x2 - cf.lower_end.x2)).abs() <= 1e-12 * (1.0 + p.abs() + eps));
        prop_assert!((spine_value(&pair, p, t, eps) - cf.a).abs() <= 1e-12 * (1.0 + cf.a.abs()));
    }
}

// Spine and regime properties need tracing, so they run on fewer cases.
proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn traced_spines_stay_below_unit_slope(eps in 0.29..3.0f64, two in prop::bool::ANY) {
        let pair = if two { two_pockets() } else { pocket() };
        let ctl = TraceControls::default();
        let Some(sp) = trace_upper(&pair, eps, &ctl).unwrap() else { return Ok(()) };
        // on the upper line itself every direction of the field has slope −1
        let mut n = sp.invalid_from.unwrap_or(sp.slopes.len());
        if sp.exit_kind == Some(ExitKind::Boundary) {
            n = n.min(sp.slopes.len() - 1);
        }
        for m in &sp.slopes[..n] {
            prop_assert!(m.abs() < 1.0 - 1e-9, "{} {:?} {:?} of {}", m, sp.exit_kind, sp.invalid_from, sp.slopes.len());
        }
    }

    #[test]
    fn saddles_are_left_along_the_stable_direction(eps in 0.3..3.0f64) {
        let pair = pocket();
        let sp = trace_upper(&pair, eps, &TraceControls::default()).unwrap().unwrap();
        let s = sp.stationary.s;
        let closed = 2.0 / (s - 2.0 + (s * s + 8.0 * s).sqrt());
        let m = sp.stationary.stable_slope().unwrap();
        prop_assert!(rel(m, closed) < 1e-12, "{} {}", m, closed);
        let (a, b) = (sp.samples[0], sp.samples[1]);
        let fd = (b.x2 - a.x2) / (b.x1 - a.x1);
        prop_assert!((fd - closed).abs() <= 1e-5 * closed.abs().max(1.0), "{} {}", fd, closed);
    }

    #[test]
    fn mirrored_trace_is_the_reflected_left_trace(eps in 0.3..1.5f64) {
        let pair = two_pockets();
        let ctl = TraceControls::default();
        let roots = stationary_roots(&pair, FieldKind::RightSpine, Side::Lower, eps).roots;
        prop_assume!(roots.len() == 2);
        let u = roots[0];
        let right = classify_stationary(&pair, u, Side::Lower, FieldKind::RightSpine, eps).unwrap();
        let refl = pair.reflected();
        let left = classify_stationary(&refl, -u, Side::Lower, FieldKind::LeftSpine, eps).unwrap();
        prop_assert_eq!(right.classification, left.classification);
        if right.classification != Classification::Saddle {
            return Ok(());
        }
        let a = trace_spine(&pair, &right, &ctl).unwrap();
        let b = trace_spine(&refl, &left, &ctl).unwrap();
        let gb = b.graph(false, 0.0).unwrap();
        let (lo, hi) = gb.range();
        let mut n = 0;
        for p in &a.samples {
            let q = -p.x1;
            if q > lo && q < hi {
                prop_assert!((gb.t_at(q) - p.x2).abs() <= 1e-7, "at {} {} vs {}", q, gb.t_at(q), p.x2);
                n += 1;
            }
        }
        prop_assert!(n > 2);
    }
}

fn regime_sequence(pair: &BoundaryPair, grid: &[f64]) -> Vec<Regime> {
    let ctl = TraceControls::default();
    let mut seq: Vec<Regime> = Vec::new();
    for &e in grid {
        let r = regime_at(pair, e, &ctl).unwrap_or_else(|err| panic!("eps {e}: {err}"));
        if seq.last() != Some(&r) {
            seq.push(r);
        }
    }
    seq
}

fn grid_through(lo: f64, hi: f64, thresholds: &[f64]) -> Vec<f64> {
    let mut g: Vec<f64> = (0..=200).map(|i| lo + (hi - lo) * i as f64 / 200.0).collect();
    for &t in thresholds {
        g.extend((-20..=20).map(|k| t + 1e-4 * k as f64));
    }
    g.sort_by(f64::total_cmp);
    g
}

#[test]
fn regimes_change_once_per_threshold_in_order() {
    let e0 = (1.0f64 / 12.0).sqrt();
    let seq = regime_sequence(&pocket(), &grid_through(0.1, 2.0, &[e0]));
    assert_eq!(seq, vec![Regime::Simple, Regime::OnePocket]);

    let pair = two_pockets();
    let e2 = bellman_strip::spine::epsilon2(&pair, None, &TraceControls::default()).unwrap().value().unwrap();
    let seq = regime_sequence(&pair, &grid_through(0.1, 1.0, &[e0, e2]));
    assert_eq!(seq, vec![Regime::Simple, Regime::TwoPockets, Regime::RectangleWithHerringbones]);
}

#[test]
fn foliations_of_a_scan_tile_the_strip() {
    let ctl = TraceControls::default();
    for pair in [pocket(), two_pockets()] {
        for i in 0..12 {
            let eps = 0.2 + 0.1 * i as f64;
            let fol = build_foliation(&pair, eps, &ctl).unwrap();
            fol.check_tiling().unwrap();
        }
    }
}
