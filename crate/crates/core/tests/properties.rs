use std::f64::consts::PI;

use ginvariant::colombeau::{classify, seminorm, CompactBox, EpsilonGrid, Net, Scalar};
use ginvariant::corpus::{random_expr, random_lorentz, random_planar_product, random_point, random_rotation, rng};
use ginvariant::decompose::{givens_decompose, lorentz_decompose, schedule_pairs};
use ginvariant::expr::{Expr, MultiIndex};
use ginvariant::groups::{compose_net, GroupElement, PlanarKind};
use ginvariant::numbertheory::{convergents, corollary_pair, dirichlet, named_value, AlgebraicNumber};
use ginvariant::verify::{
    chain_bound, chain_tolerance, rotation_invariance_pipeline, translation_constancy, two_period_constancy, Verdict,
    VerifyOptions,
};
use proptest::prelude::*;
use twofloat::TwoFloat;

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn scalars(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<Scalar>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| Scalar::Real(m[(i, j)])).collect()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn print_parse_print_is_fixed(seed in any::<u64>(), depth in 1u32..6) {
        let e = random_expr(&mut rng(seed), 3, depth);
        let text = e.to_string();
        let again = Expr::parse(&text, 3).unwrap().to_string();
        prop_assert_eq!(&again, &text);
        prop_assert_eq!(Expr::parse(&again, 3).unwrap().to_string(), again);
    }

    #[test]
    fn evaluation_is_bitwise_repeatable(seed in any::<u64>()) {
        let mut r = rng(seed);
        let e = random_expr(&mut r, 2, 5);
        let x = random_point(&mut r, 2, -2.0, 2.0);
        let (a, b) = (e.eval(0.1, &x).unwrap(), e.eval(0.1, &x).unwrap());
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn rotations_preserve_norm(theta in -PI..PI, i in 1usize..4, dj in 1usize..3) {
        let (d, j) = (5, (i + dj).min(5));
        let g = GroupElement::rotation(d, i, j, theta).unwrap();
        for x in CompactBox::cube(d, -3.0, 3.0, 3).unwrap().lattice() {
            let y = g.apply_point(&x, None).unwrap();
            prop_assert!((norm(&y) - norm(&x)).abs() <= 1e-12 * (1.0 + norm(&x)));
        }
    }

    #[test]
    fn boosts_preserve_signed_form(theta in -3.0..3.0f64) {
        let g = GroupElement::boost(3, 1, 3, theta).unwrap();
        for x in CompactBox::cube(3, -3.0, 3.0, 5).unwrap().lattice() {
            let y = g.apply_point(&x, None).unwrap();
            let form = |v: &[f64]| v[0] * v[0] - v[2] * v[2];
            prop_assert!((form(&y) - form(&x)).abs() <= 1e-10 * (1.0 + norm(&x).powi(2)));
        }
    }

    #[test]
    fn planar_group_axioms(a in -3.0..3.0f64, b in -3.0..3.0f64, boost in any::<bool>()) {
        let kind = if boost { PlanarKind::Boost } else { PlanarKind::Rotation };
        let g = |t: f64| GroupElement::planar(3, kind, 1, 2, t).unwrap();
        let k = CompactBox::cube(3, -1.0, 1.0, 3).unwrap();
        for x in k.lattice() {
            let zero = g(0.0).apply_point(&x, None).unwrap();
            let sum = g(a + b).apply_point(&x, None).unwrap();
            let chained = g(a).apply_point(&g(b).apply_point(&x, None).unwrap(), None).unwrap();
            let back = g(-a).apply_point(&g(a).apply_point(&x, None).unwrap(), None).unwrap();
            let scale = 1e-10 * (1.0 + (a.abs() + b.abs()).cosh().powi(2));
            for c in 0..3 {
                prop_assert!((zero[c] - x[c]).abs() <= 1e-10);
                prop_assert!((sum[c] - chained[c]).abs() <= scale);
                prop_assert!((back[c] - x[c]).abs() <= scale);
            }
        }
    }

    #[test]
    fn composition_is_associative(a in -PI..PI, b in -2.0..2.0f64, t in -1.0..1.0f64) {
        let f = Net::parse("sin(x1)*x2 + x3^2", 3).unwrap();
        let g = GroupElement::rotation(3, 1, 3, a).unwrap();
        let h = GroupElement::boost(3, 2, 3, b).unwrap()
            .compose(&GroupElement::translation(vec![Scalar::Real(t), Scalar::Real(0.0), Scalar::Real(-t)]))
            .unwrap();
        let lhs = compose_net(&compose_net(&f, &g).unwrap(), &h).unwrap();
        let rhs = compose_net(&f, &g.compose(&h).unwrap()).unwrap();
        for x in CompactBox::cube(3, -1.0, 1.0, 4).unwrap().lattice() {
            let (u, v) = (lhs.eval(0.1, &x).unwrap(), rhs.eval(0.1, &x).unwrap());
            prop_assert!((u - v).abs() <= 1e-12 * (1.0 + u.abs()));
        }
    }

    #[test]
    fn givens_reconstructs_planar_products(seed in any::<u64>(), d in 2usize..7) {
        let m = random_planar_product(&mut rng(seed), d);
        let s = givens_decompose(&m).unwrap();
        prop_assert_eq!(s.pairs(), schedule_pairs(d));
        prop_assert!((s.to_matrix(None).unwrap() - &m).norm() <= 1e-10);
        for a in s.real_angles().unwrap() {
            prop_assert!((0.0..2.0 * PI).contains(&a));
        }
    }

    #[test]
    fn lorentz_factors_fix_time(seed in any::<u64>(), d in 2usize..4) {
        let (l, _) = random_lorentz(&mut rng(seed), d, 0.0, 3.0);
        let f = lorentz_decompose(&l).unwrap();
        prop_assert!((f.to_matrix(None).unwrap() - &l).norm() <= 1e-9);
        prop_assert_eq!(f.theta.value_at(None).unwrap(), l[(0, 0)].acosh());
        for side in [&f.r1, &f.r2] {
            let g = GroupElement::new(d + 1, side.factors(1)).unwrap();
            let mut t = vec![0.0; d + 1];
            t[0] = 1.0;
            let y = g.apply_point(&t, None).unwrap();
            prop_assert!(y.iter().zip(&t).all(|(a, b)| (a - b).abs() <= 1e-10));
        }
    }

    #[test]
    fn dirichlet_bounds(pick in 0usize..6, n in 1u64..=10_000) {
        let name = ["sqrt2", "sqrt3", "phi", "cbrt2", "pi", "e"][pick];
        let alpha = named_value(name).unwrap();
        let p = dirichlet(alpha, n).unwrap();
        prop_assert!(p.l >= 1 && p.l <= n);
        let defect = (TwoFloat::from(p.k) - TwoFloat::from(p.l) * alpha).abs().hi();
        prop_assert!(defect <= 1.0 / n as f64);
    }

    #[test]
    fn chain_lemma_on_corpus(
        which in 0usize..3,
        h1 in 0.2..1.5f64,
        h2 in 0.2..1.5f64,
        k in 0u64..6,
        l in 0u64..6,
    ) {
        let f: Box<dyn Fn(f64) -> f64 + Sync> = match which {
            0 => Box::new(|_| -2.0),
            1 => Box::new(|x: f64| (2.0 * PI * x).sin() + 0.001 * x),
            _ => Box::new(|x: f64| 7.0 + (0.3f64.ln() / 0.3).exp() * x.cos()),
        };
        let pairs = [(k, l)];
        let tol = chain_tolerance(&*f, 0.0, 12.0, h1, h2, &pairs, 61).unwrap();
        let report = chain_bound(&*f, 0.0, 12.0, h1, h2, tol, &pairs, 61).unwrap();
        for e in &report.evidence {
            prop_assert!(!e.stuck);
            prop_assert!(e.measured <= e.certified);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn negligible_order_is_monotone(which in 0usize..6, max_order in 0u32..3) {
        let body = ["exp(ln(eps)/eps)*x1", "eps^3*cos(x1)", "eps*x1", "x1/eps", "sin(1/eps)", "eps^2 + exp(-1/eps)"][which];
        let f = Net::parse(body, 1).unwrap();
        let grid = EpsilonGrid::dyadic(4, 30).unwrap();
        let r = classify(&f, &CompactBox::cube(1, -1.0, 1.0, 9).unwrap(), max_order, &grid, 8).unwrap();
        let quarter = &r.sups[r.sups.len() - (r.sups.len() + 3) / 4..];
        for q in 0..=r.negligible_order.max(-1) {
            for &(e, s) in quarter {
                prop_assert!(s <= e.powi(q));
            }
        }
    }

    #[test]
    fn seminorm_monotone_in_box(which in 0usize..4, n in 3usize..12, eps in 0.01..0.9f64) {
        let body = ["x1^2 + sin(x1/eps)", "exp(x1)*eps", "cos(3*x1) - x1", "tanh(x1/eps)"][which];
        let f = Net::parse(body, 1).unwrap();
        let small = CompactBox::new(vec![(0.0, 1.0)], n).unwrap();
        let large = CompactBox::new(vec![(-1.0, 1.0)], 2 * n - 1).unwrap();
        for alpha in MultiIndex::all_up_to(1, 2) {
            let (a, b) = (seminorm(&f, &small, &alpha, eps).unwrap(), seminorm(&f, &large, &alpha, eps).unwrap());
            prop_assert!(a <= b * (1.0 + 1e-12) + 1e-12);
        }
    }

    #[test]
    fn scaling_shifts_exponent(which in 0usize..4, m in 1i32..4) {
        let body = ["cos(x1) + 2", "x1/eps", "x1^2/eps^2 + 1", "eps*exp(x1)"][which];
        let f = Net::parse(body, 1).unwrap();
        let scaled = Net::parse(&format!("eps^{m}*({body})"), 1).unwrap();
        let grid = EpsilonGrid::default();
        let k = CompactBox::cube(1, -1.0, 1.0, 9).unwrap();
        let (a, b) = (classify(&f, &k, 1, &grid, 8).unwrap(), classify(&scaled, &k, 1, &grid, 8).unwrap());
        prop_assert!((b.fitted_exponent - a.fitted_exponent - f64::from(m)).abs() <= 0.1);
    }

    #[test]
    fn convergents_match_dirichlet(pick in 0usize..6) {
        let name = ["sqrt2", "sqrt3", "phi", "cbrt2", "pi", "e"][pick];
        let alpha = named_value(name).unwrap();
        for (p, q) in convergents(alpha, 40).into_iter().filter(|&(_, q)| q <= 1_000_000) {
            let gap = (TwoFloat::from(q) * alpha - TwoFloat::from(p)).abs().hi();
            prop_assert!(dirichlet(alpha, q).unwrap().defect <= gap + 1e-15);
        }
    }

    #[test]
    fn corollary_pairs_within_bounds(pick in 0usize..6, r in 2.5..1e4f64) {
        let a = &AlgebraicNumber::catalog()[pick];
        let c = corollary_pair(a, r).unwrap();
        prop_assert!(c.lower <= c.defect && c.defect <= c.upper && c.l as f64 <= r);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn pipeline_verdicts_are_consistent(seed in any::<u64>(), which in 0usize..4) {
        let body = [
            "exp(-(x1^2+x2^2+x3^2))",
            "x1",
            "x1^2 + x2",
            "cos(x1^2+x2^2+x3^2) + exp(ln(eps)/eps)*x3",
        ][which];
        let f = Net::parse(body, 3).unwrap();
        let m = random_rotation(&mut rng(seed), 3);
        let grid = EpsilonGrid::dyadic(4, 20).unwrap();
        let r = rotation_invariance_pipeline(&f, &scalars(&m), &CompactBox::cube(3, -1.0, 1.0, 5).unwrap(), &grid, 4, &VerifyOptions::default()).unwrap();
        prop_assert!(r.consistent);
        prop_assert_eq!(r.full_invariant, which == 0 || which == 3);
    }

    #[test]
    fn two_period_audits_hold(pick in 0usize..6, p in 1u32..4) {
        let a = &AlgebraicNumber::catalog()[pick];
        let f = Net::parse("3 - exp(ln(eps)/eps)*cos(x1)", 1).unwrap();
        let r = two_period_constancy(&f, a, a.value_f64() + 4.0, p, &EpsilonGrid::dyadic(4, 24).unwrap(), &VerifyOptions::default()).unwrap();
        prop_assert_eq!(r.verdict, Verdict::Constant);
        for ev in &r.evidence {
            for row in &ev.rows {
                if let Some(audit) = &row.audit {
                    prop_assert!(audit.lower <= audit.h && audit.h <= audit.upper);
                    prop_assert!(audit.k as f64 <= audit.k_bound);
                    prop_assert!(audit.walk_ok);
                }
            }
        }
    }

    #[test]
    fn translation_constancy_never_rejects_constants(c in -5.0..5.0f64, which in 0usize..3, h in 0.1..2.0f64) {
        let noise = ["exp(ln(eps)/eps)*sin(x1)", "exp(-1/eps)*x1^2", "exp(-1/eps^2)*cos(3*x1)"][which];
        let f = Net::parse(&format!("{c} + sin(1/eps) + {noise}"), 1).unwrap();
        let k = CompactBox::cube(1, -1.0, 1.0, 9).unwrap();
        let r = translation_constancy(&f, &k, &EpsilonGrid::default(), 6, &[vec![h], vec![-h / 2.0]], &VerifyOptions::default()).unwrap();
        prop_assert!(r.hypothesis_holds);
        prop_assert_eq!(r.verdict, Verdict::Constant);
    }
}
