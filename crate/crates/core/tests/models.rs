use proptest::prelude::*;

use robin_convection::operator::{eval_a, eval_g, OperatorSpec};
use robin_convection::reaction::{truncate, Convection, ReactionSpec, Singular};

fn operators() -> Vec<OperatorSpec> {
    vec![
        OperatorSpec::p_laplacian(1.5),
        OperatorSpec::p_laplacian(3.0),
        OperatorSpec::pq_laplacian(3.0, 1.5),
        OperatorSpec::p_mean_curvature(2.5),
    ]
}

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 256,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn operator_is_strictly_monotone(k in 0usize..4, x in -50.0f64..50.0, y in -50.0f64..50.0) {
        prop_assume!((x - y).abs() > 1e-6);
        let op = &operators()[k];
        prop_assert!((op.a_scalar(x) - op.a_scalar(y)) * (x - y) > 0.0);
    }

    #[test]
    fn operator_is_odd(k in 0usize..4, x in -50.0f64..50.0) {
        let op = &operators()[k];
        prop_assert_eq!(op.a_scalar(-x), -op.a_scalar(x));
    }

    #[test]
    fn potential_derivative_is_flux(k in 0usize..4, x0 in 0.1f64..5.0, x1 in -5.0f64..5.0, y0 in -1.0f64..1.0, y1 in -1.0f64..1.0) {
        let op = &operators()[k];
        let xi = [x0, x1];
        let y = [y0, y1];
        let h = 1e-6;
        let shift = |s: f64| [xi[0] + s * y[0], xi[1] + s * y[1]];
        let fd = (eval_g(op, &shift(h)).unwrap() - eval_g(op, &shift(-h)).unwrap()) / (2.0 * h);
        let a = eval_a(op, &xi).unwrap();
        let exact = a[0] * y[0] + a[1] * y[1];
        prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1.0), "{} vs {}", fd, exact);
    }

    #[test]
    fn truncation_is_monotone_in_the_subsolution(l1 in 0.01f64..1.0, dl in 0.0f64..0.5, frac in 0.0f64..1.0) {
        let spec = ReactionSpec::new(Convection::Zero, Singular::PowerSingular { lambda: 1.0, gamma: 0.7 });
        let l2 = (l1 + dl).min(1.0);
        let s = frac * l1;
        let a = truncate(&spec, 2.0, l1, 0.0, s);
        let b = truncate(&spec, 2.0, l2, 0.0, s);
        prop_assert!(a.g_hat >= b.g_hat);
    }

    #[test]
    fn truncation_is_continuous_at_the_splice(ul in 0.01f64..2.0, dw in 0.0f64..3.0) {
        let spec = ReactionSpec::new(
            Convection::Affine { a: 0.3, b: 0.1, c: 0.2 },
            Singular::PowerSingular { lambda: 0.5, gamma: 0.5 },
        );
        let lo = truncate(&spec, 2.0, ul, dw, ul * (1.0 - 1e-12));
        let hi = truncate(&spec, 2.0, ul, dw, ul * (1.0 + 1e-12));
        prop_assert!((lo.f_hat + lo.g_hat - hi.f_hat - hi.g_hat).abs() <= 1e-9);
    }

    #[test]
    fn truncated_primitive_differentiates_to_the_load(ul in 0.05f64..1.0, dw in 0.0f64..3.0, s in -2.0f64..3.0) {
        let spec = ReactionSpec::new(
            Convection::Affine { a: 0.3, b: 0.1, c: 0.2 },
            Singular::PowerSingular { lambda: 0.5, gamma: 0.5 },
        );
        let h = 1e-6;
        prop_assume!((s - ul).abs() > 10.0 * h);
        let p = truncate(&spec, 2.0, ul, dw, s + h);
        let m = truncate(&spec, 2.0, ul, dw, s - h);
        let c = truncate(&spec, 2.0, ul, dw, s);
        let fd = (p.f_prim + p.g_prim - m.f_prim - m.g_prim) / (2.0 * h);
        let exact = c.f_hat + c.g_hat;
        prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1.0));
    }

    #[test]
    fn singular_part_below_subsolution_is_bounded(ul in 0.01f64..1.0, s in -5.0f64..5.0) {
        let spec = ReactionSpec::new(Convection::Zero, Singular::PowerSingular { lambda: 1.0, gamma: 0.5 });
        let t = truncate(&spec, 2.0, ul, 0.0, s);
        prop_assert!(t.g_hat <= ul.powf(-0.5) * (1.0 + 1e-12));
    }
}
