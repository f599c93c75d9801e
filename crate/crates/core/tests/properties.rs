//! Property tests for the jet algebra, geometry, symbol calculus and the
//! numeric kernel.

use std::sync::Arc;

use bergman_core::functions::{one, Polarized, Polynomial};
use bergman_core::geometry::{kahler_data, WeightSpec};
use bergman_core::kernel::{fit_alpha_expansion, gram_matrix, KernelSettings};
use bergman_core::models::{parse_model, ModelSpec};
use bergman_core::oracle::{check_model_partials, FD_STEP};
use bergman_core::quadrature::build_quadrature;
use bergman_core::symbols::{poisson_bracket, FormalSymbol, PoissonBracketFn, StarAlgebra};
use bergman_core::{Jet, Layout, C64};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn jet_strategy(vars: usize, order: usize) -> impl Strategy<Value = Jet> {
    let layout = Layout::get(vars, order);
    let n = layout.len();
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
        .prop_map(move |v| Jet::from_coeffs(&layout, v.into_iter().map(|(a, b)| C64::new(a, b)).collect()))
}

/// A point strictly inside the unit disc.
fn disc_point() -> impl Strategy<Value = C64> {
    (0.0f64..0.6, 0.0f64..std::f64::consts::TAU).prop_map(|(r, t)| C64::from_polar(r, t))
}

fn model_strategy() -> impl Strategy<Value = ModelSpec> {
    prop::sample::select(vec![
        "segal-bargmann",
        "sb-mu-exp(0.25)",
        "disc-hyperbolic",
        "disc-mu-sq",
        "plane-quartic(0.1)",
    ])
    .prop_map(|n| parse_model(n).unwrap())
}

fn polys(seed: u64, count: usize) -> Vec<Polarized> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| Arc::new(Polynomial::random(1, 3, &mut rng)) as Polarized)
        .collect()
}

fn coeffs(s: &FormalSymbol, x: C64) -> Vec<C64> {
    s.eval(&[x], &[x.conj()]).unwrap()
}

fn algebra(m: &ModelSpec) -> StarAlgebra {
    StarAlgebra::new(m.weight(m.min_alpha() + 1.0).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn jet_ring_laws(a in jet_strategy(2, 4), b in jet_strategy(2, 4), c in jet_strategy(2, 4)) {
        prop_assert!((&(&a * &b) * &c).max_abs_diff(&(&a * &(&b * &c))) < 1e-12);
        prop_assert!((&a * &(&b + &c)).max_abs_diff(&(&(&a * &b) + &(&a * &c))) < 1e-12);
        prop_assert!((&a * &b).max_abs_diff(&(&b * &a)) < 1e-14);
        prop_assert_eq!((&a * &b).value(), a.value() * b.value());
    }

    #[test]
    fn exp_inverts_ln(a in jet_strategy(2, 4)) {
        // keep the value away from the branch cut and from zero
        let a = a.scale(C64::new(0.3, 0.0)).add_constant(C64::new(1.5, 0.0) - a.value() * 0.3);
        let back = a.ln().unwrap().exp();
        prop_assert!(back.max_abs_diff(&a) < 1e-12);
        let r = &a.recip().unwrap() * &a;
        prop_assert!(r.max_abs_diff(&Jet::constant(a.layout(), C64::new(1.0, 0.0))) < 1e-12);
    }

    #[test]
    fn product_rule_for_derivatives(a in jet_strategy(2, 3), b in jet_strategy(2, 3), var in 0usize..2) {
        let lhs = (&a * &b).derivative(var).unwrap();
        let rhs = &(&a.derivative(var).unwrap() * &b.convert(&Layout::get(2, 2)))
            + &(&a.convert(&Layout::get(2, 2)) * &b.derivative(var).unwrap());
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn metric_is_hermitian_positive_on_diagonal(m in model_strategy(), x in disc_point()) {
        let d = kahler_data(m.phi.as_ref(), &[x], &[x.conj()]).unwrap();
        prop_assert!(d.metric[(0, 0)].im.abs() < 1e-12);
        prop_assert!(d.metric[(0, 0)].re > 0.0);
        prop_assert!(d.det.im.abs() < 1e-12 && d.det.re > 0.0);
        prop_assert!(d.scalar_curvature.im.abs() < 1e-10);
        prop_assert!((d.metric[(0, 0)] * d.inverse[(0, 0)] - 1.0).norm() < 1e-12);
    }

    #[test]
    fn jets_match_finite_differences(m in model_strategy(), x in disc_point(), d in disc_point()) {
        let yb = [x.conj() + d * 0.05];
        for c in check_model_partials(&m, &[x], &yb, 3, FD_STEP).unwrap() {
            prop_assert!(c.error < 1e-6, "{:?}", c);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn generalized_associativity(m in model_strategy(), seed in any::<u64>(), x in disc_point()) {
        let alg = algebra(&m);
        let s: Vec<FormalSymbol> = polys(seed, 5).into_iter().map(FormalSymbol::classical).collect();
        let a = alg.triple_symbol(&s[0], &s[1], &alg.triple_symbol(&s[2], &s[3], &s[4]).unwrap()).unwrap();
        let b = alg.triple_symbol(&alg.triple_symbol(&s[0], &s[1], &s[2]).unwrap(), &s[3], &s[4]).unwrap();
        for (u, v) in coeffs(&a, x).iter().zip(coeffs(&b, x)) {
            prop_assert!((u - v).norm() < 1e-10);
        }
    }

    #[test]
    fn kernel_symbol_is_unit(m in model_strategy(), seed in any::<u64>(), x in disc_point()) {
        let alg = algebra(&m);
        let k = alg.kernel_symbol().unwrap();
        let f = FormalSymbol::classical(polys(seed, 1).remove(0));
        let fv = coeffs(&f, x);
        for s in [alg.bt_star(&k, &f).unwrap(), alg.bt_star(&f, &k).unwrap()] {
            let v = coeffs(&s, x);
            prop_assert!((v[0] - fv[0]).norm() < 1e-10);
            prop_assert!(v[1].norm() < 1e-10);
        }
    }

    #[test]
    fn commutators_equal_poisson_bracket(m in model_strategy(), seed in any::<u64>(), x in disc_point()) {
        let alg = algebra(&m);
        let p = polys(seed, 2);
        let (f, h) = (FormalSymbol::classical(p[0].clone()), FormalSymbol::classical(p[1].clone()));
        let pb = poisson_bracket(&p[0], &p[1], &m.phi, &[x], &[x.conj()]).unwrap();
        type Product = fn(&StarAlgebra, &FormalSymbol, &FormalSymbol) -> bergman_core::Result<FormalSymbol>;
        let products: [Product; 3] = [StarAlgebra::bt_star, StarAlgebra::contravariant_star, StarAlgebra::covariant_star];
        for star in products {
            let a = coeffs(&star(&alg, &f, &h).unwrap(), x);
            let b = coeffs(&star(&alg, &h, &f).unwrap(), x);
            prop_assert!((a[0] - b[0]).norm() < 1e-10);
            prop_assert!((a[1] - b[1] - pb).norm() < 1e-10);
        }
    }

    #[test]
    fn poisson_bracket_is_a_lie_bracket_and_derivation(m in model_strategy(), seed in any::<u64>(), x in disc_point()) {
        let p = polys(seed, 3);
        let (xs, xb) = ([x], [x.conj()]);
        let br = |a: &Polarized, b: &Polarized| -> Polarized {
            Arc::new(PoissonBracketFn { f: a.clone(), h: b.clone(), phi: m.phi.clone() })
        };
        let ev = |f: &Polarized| f.eval(&xs, &xb).unwrap();
        prop_assert!((ev(&br(&p[0], &p[1])) + ev(&br(&p[1], &p[0]))).norm() < 1e-12);
        let gh = bergman_core::functions::product(&p[1], &p[2]);
        let leibniz = ev(&br(&p[0], &gh)) - ev(&p[1]) * ev(&br(&p[0], &p[2])) - ev(&br(&p[0], &p[1])) * ev(&p[2]);
        prop_assert!(leibniz.norm() < 1e-10);
        let jacobi = ev(&br(&p[0], &br(&p[1], &p[2]))) + ev(&br(&p[1], &br(&p[2], &p[0]))) + ev(&br(&p[2], &br(&p[0], &p[1])));
        prop_assert!(jacobi.norm() < 1e-8);
    }

    #[test]
    fn berezin_transform_intertwines_products(m in model_strategy(), seed in any::<u64>(), x in disc_point()) {
        let alg = algebra(&m);
        let p = polys(seed, 2);
        let (f, h) = (FormalSymbol::classical(p[0].clone()), FormalSymbol::classical(p[1].clone()));
        let lhs = alg.berezin_transform(&alg.contravariant_star(&f, &h).unwrap()).unwrap();
        let rhs = alg.bt_star(&alg.berezin_transform(&f).unwrap(), &alg.berezin_transform(&h).unwrap()).unwrap();
        prop_assert!((coeffs(&lhs, x)[1] - coeffs(&rhs, x)[1]).norm() < 1e-10);
        let back = alg.berezin_inverse(&alg.berezin_transform(&f).unwrap()).unwrap();
        let (u, v) = (coeffs(&back, x), coeffs(&f, x));
        prop_assert!((u[0] - v[0]).norm() < 1e-10 && u[1].norm() < 1e-10);
    }

    #[test]
    fn derived_products_do_not_depend_on_mu(m in model_strategy(), beta in -0.5f64..0.5, seed in any::<u64>(), x in disc_point()) {
        let alpha = m.min_alpha() + 1.0;
        let tilt = bergman_core::functions::from_fn(1, "exp(beta x yb)", move |x, y| {
            Ok((&x[0] * &y[0]).scale(C64::new(beta, 0.0)).exp())
        });
        let flat = StarAlgebra::new(WeightSpec::new(m.phi.clone(), one(1), alpha).unwrap());
        let tilted = StarAlgebra::new(WeightSpec::new(m.phi.clone(), tilt, alpha + 1.0).unwrap());
        let p = polys(seed, 2);
        let (f, h) = (FormalSymbol::classical(p[0].clone()), FormalSymbol::classical(p[1].clone()));
        for (a, b) in [
            (flat.contravariant_star(&f, &h).unwrap(), tilted.contravariant_star(&f, &h).unwrap()),
            (flat.covariant_star(&f, &h).unwrap(), tilted.covariant_star(&f, &h).unwrap()),
        ] {
            for (u, v) in coeffs(&a, x).iter().zip(coeffs(&b, x)) {
                prop_assert!((u - v).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn recurrences_agree(m in model_strategy(), x in disc_point()) {
        let alg = algebra(&m);
        let a = coeffs(&alg.kernel_symbol_linear().unwrap(), x);
        let b = coeffs(&alg.kernel_symbol_quadratic().unwrap(), x);
        prop_assert!((a[1] - b[1]).norm() < 1e-10);
        prop_assert!((a[1].re - m.predicted_k1(&[x]).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn fit_recovers_exact_expansions(c0 in -2.0f64..2.0, c1 in -2.0f64..2.0, c2 in -2.0f64..2.0) {
        let samples: Vec<(f64, f64)> = [8.0, 16.0, 32.0, 64.0]
            .iter()
            .map(|&a: &f64| (a, c0 + c1 / a + c2 / (a * a)))
            .collect();
        let fit = fit_alpha_expansion(&samples, 2).unwrap();
        prop_assert!((fit.coeffs[0] - c0).abs() < 1e-10);
        prop_assert!((fit.coeffs[1] - c1).abs() < 1e-8);
        prop_assert!((fit.coeffs[2] - c2).abs() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn diagonal_kernel_increases_with_degree(x in disc_point(), alpha in 2.0f64..20.0) {
        let m = parse_model("disc-mu-sq").unwrap();
        let w = m.weight(alpha).unwrap();
        let s = KernelSettings::for_degree(20, true);
        let rule = build_quadrature(m.quadrature_domain(None).unwrap(), s.radial_order, s.angular_order, m.weight_exponent_hint(alpha)).unwrap();
        let gd = gram_matrix(&w, 20, &rule).unwrap();
        let sums = gd.kernel_partial_sums(x, x.conj()).unwrap();
        for pair in sums.windows(2) {
            prop_assert!(pair[1].re >= pair[0].re * (1.0 - 1e-14));
            prop_assert!(pair[1].im.abs() <= 1e-12 * pair[1].re.abs());
        }
    }

    #[test]
    fn gram_matrix_stable_under_refinement(alpha in 2.0f64..30.0, plane in any::<bool>()) {
        let m = parse_model(if plane { "plane-quartic(0.1)" } else { "disc-mu-sq" }).unwrap();
        let w = m.weight(alpha).unwrap();
        let d = 12;
        let s = KernelSettings::for_degree(d, !plane);
        let cutoff = if plane { Some(bergman_core::kernel::plane_cutoff(&w, d, 1e-14).unwrap().radius) } else { None };
        let dom = m.quadrature_domain(cutoff).unwrap();
        let hint = m.weight_exponent_hint(alpha);
        let g1 = gram_matrix(&w, d, &build_quadrature(dom, s.radial_order, s.angular_order, hint).unwrap()).unwrap();
        let g2 = gram_matrix(&w, d, &build_quadrature(dom, 2 * s.radial_order, s.angular_order, hint).unwrap()).unwrap();
        for i in 0..=d {
            for j in 0..=d {
                prop_assert!((g1.entry(i, j) - g2.entry(i, j)).norm() < 1e-10, "entry ({}, {})", i, j);
            }
        }
    }
}
