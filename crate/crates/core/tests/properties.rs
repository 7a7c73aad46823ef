use std::f64::consts::LN_2;

use proptest::prelude::*;

use skewprod::dynamics::{normalize_quadratic, DEFAULT_BUDGET};
use skewprod::infinity::{pi_map, ExtCx};
use skewprod::*;

fn cx(r: f64) -> impl Strategy<Value = Cx> {
    (-r..r, -r..r).prop_map(|(a, b)| Cx::new(a, b))
}

fn base() -> impl Strategy<Value = BaseQuadratic> {
    prop_oneof![
        Just(Cx::new(0.0, 0.0)),
        Just(Cx::new(-1.0, 0.0)),
        Just(Cx::new(-2.0, 0.0)),
        Just(Cx::new(-0.12, 0.75)),
    ]
    .prop_map(|d| BaseQuadratic::new(d).unwrap())
}

fn params(r: f64) -> impl Strategy<Value = SkewParams> {
    (cx(r), cx(r), cx(r), base()).prop_map(|(a, b, c, p)| SkewParams::from_lambda([a, b, c], p))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn escape_is_monotone_in_budget(p in params(3.0), z in cx(1.2), w in cx(2.0)) {
        let short = fiber_orbit(&p, z, w, 50);
        let long = fiber_orbit(&p, z, w, 400);
        if !short.is_bounded() {
            prop_assert!(!long.is_bounded());
        }
    }

    #[test]
    fn green_doubles_along_the_fiber(p in params(3.0), z in cx(1.0), w in cx(20.0)) {
        prop_assume!(green_base(&p.base, z, DEFAULT_BUDGET) == 0.0);
        let g = fiber_orbit(&p, z, w, DEFAULT_BUDGET).green;
        prop_assume!(g > 1e-3);
        let (z1, w1) = step(&p, (z, w));
        let g1 = fiber_orbit(&p, z1, w1, DEFAULT_BUDGET).green;
        prop_assert!((g1 - 2.0 * g).abs() <= 1e-9 * g1.max(1.0), "{} vs {}", g1, 2.0 * g);
    }

    #[test]
    fn normal_form_conjugates(
        coeffs in proptest::array::uniform6(cx(2.0)),
        b in base(),
        pts in proptest::collection::vec((cx(1.5), cx(1.5)), 100),
    ) {
        prop_assume!(coeffs[2].norm() > 0.1);
        let (normal, h) = normalize_quadratic(coeffs, b).unwrap();
        let [ca, cb, cc, cd, ce, cf] = coeffs;
        for (z, w) in pts {
            let orig = (b.eval(z), ca * z * z + cb * z * w + cc * w * w + cd * z + ce * w + cf);
            let lhs = h.apply(orig.0, orig.1);
            let hz = h.apply(z, w);
            let rhs = step(&normal, hz);
            let scale = 1.0 + lhs.1.norm();
            prop_assert!((lhs.0 - rhs.0).norm() < 1e-10 * scale);
            prop_assert!((lhs.1 - rhs.1).norm() < 1e-10 * scale, "{} vs {}", lhs.1, rhs.1);
        }
    }

    #[test]
    fn vertical_lyapunov_at_least_log_two(p in params(4.0)) {
        let est = lyap_vertical_periodic(&p, 6).unwrap();
        prop_assert!(est.value >= LN_2 - 1e-12, "{}", est.value);
    }

    #[test]
    fn pi_is_symmetric(x in cx(50.0), y in cx(50.0), inf in 0u8..3) {
        let (x, y) = match inf {
            0 => (ExtCx::Finite(x), ExtCx::Finite(y)),
            1 => (ExtCx::Finite(x), ExtCx::Infinity),
            _ => (ExtCx::Infinity, ExtCx::Infinity),
        };
        prop_assert_eq!(pi_map(x, y), pi_map(y, x));
    }

    #[test]
    fn rho_vanishes_at_pi_roots(x in cx(3.0), y in cx(3.0)) {
        let pt = pi_map(ExtCx::Finite(x), ExtCx::Finite(y));
        let scale = 1.0 + x.norm_sqr() + y.norm_sqr();
        prop_assert!(pt.eval(x).norm() < 1e-12 * scale);
        prop_assert!(pt.eval(y).norm() < 1e-12 * scale);
    }

    #[test]
    fn green_field_is_nonnegative_and_finite(p in params(5.0), z in cx(1.0), w in cx(5.0)) {
        let g = fiber_orbit(&p, z, w, 300).green;
        prop_assert!(g.is_finite() && g >= 0.0);
    }
}
