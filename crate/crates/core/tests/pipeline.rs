//! End-to-end checks through the public API.

use fejer_core::bounds::{bound_h_convex, bound_h_convex_mirror, fejer_triple};
use fejer_core::fejer::{lemma_identity_defect, m_integral, trapezoid_gap, ProblemSpec};
use fejer_core::kernel::HKernel;
use fejer_core::quadrature::{adaptive_refine, error_bound_h, run_quadrature, uniform_partition};
use proptest::prelude::*;

fn quadratic(c: f64, a: f64, b: f64, g: &str) -> ProblemSpec {
    ProblemSpec::parse(&format!("{c}*x^2 + x"), Some(&format!("2*{c}*x + 1")), g, a, b).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn identity_and_dominance_for_convex_quadratics(c in 0.1f64..3.0, a in -2.0f64..1.0, w in 0.2f64..3.0) {
        let b = a + w;
        let g = format!("1 + (x-({a}))*(({b})-x)");
        let p = quadratic(c, a, b, &g);
        prop_assert!(lemma_identity_defect(&p).unwrap() <= 1e-8);
        prop_assert!(m_integral(&p).unwrap().abs() <= 1e-10);
        let t = fejer_triple(&p).unwrap();
        prop_assert!(t.left_holds(1e-9) && t.right_holds(1e-9));
        // |f'| is convex, hence h-convex for h(t) = t
        if 2.0 * c * a + 1.0 >= 0.0 {
            let h = HKernel::new_power(1.0).unwrap();
            let r = bound_h_convex(&p, &h).unwrap();
            let m = bound_h_convex_mirror(&p, &h).unwrap();
            prop_assert!(r.satisfied, "{:?}", r);
            prop_assert!((r.bound - m.bound).abs() <= 1e-8 * (1.0 + r.bound));
        }
    }

    #[test]
    fn certified_quadrature(n in 1usize..12, k in 0.25f64..1.0) {
        let p = ProblemSpec::parse("exp(x)", Some("exp(x)"), "2", 0.0, 2.0).unwrap();
        let h = HKernel::new_power(k).unwrap();
        let q = run_quadrature(&p, &h, &uniform_partition(0.0, 2.0, n).unwrap()).unwrap();
        prop_assert!(q.certified(), "{:?}", q);
        prop_assert!(q.warnings.is_empty(), "{:?}", q.warnings);
    }
}

#[test]
fn refinement_meets_tolerance_and_matches_direct_bound() {
    let p = ProblemSpec::parse("exp(x)", Some("exp(x)"), "1", 0.0, 2.0).unwrap();
    let h = HKernel::new_power(1.0).unwrap();
    let r = adaptive_refine(&p, &h, 0.05, 1000).unwrap();
    assert!(r.converged && r.error_bound <= 0.05);
    let direct = error_bound_h(&p, &h, &r.partition).unwrap();
    assert!((direct - r.error_bound).abs() <= 1e-12);
    let q = run_quadrature(&p, &h, &r.partition).unwrap();
    assert!(q.actual_error <= q.error_bound);
}

#[test]
fn weight_asymmetric_on_pieces_is_flagged() {
    let p = ProblemSpec::parse("exp(x)", Some("exp(x)"), "2 - abs(x-1)", 0.0, 2.0).unwrap();
    let h = HKernel::new_power(1.0).unwrap();
    let whole = run_quadrature(&p, &h, &uniform_partition(0.0, 2.0, 1).unwrap()).unwrap();
    assert!(whole.warnings.is_empty() && whole.certified());
    let halves = run_quadrature(&p, &h, &uniform_partition(0.0, 2.0, 2).unwrap()).unwrap();
    assert_eq!(halves.warnings.len(), 2);
    assert!(halves.warnings.iter().all(|w| w.contains("not symmetric")));
}

#[test]
fn gap_is_linear_in_f() {
    let p1 = quadratic(1.0, 0.0, 2.0, "x*(2-x)");
    let p3 = quadratic(3.0, 0.0, 2.0, "x*(2-x)");
    let lin = ProblemSpec::parse("x", Some("1"), "x*(2-x)", 0.0, 2.0).unwrap();
    let (g1, g3, gl) = (trapezoid_gap(&p1).unwrap(), trapezoid_gap(&p3).unwrap(), trapezoid_gap(&lin).unwrap());
    assert!(gl.abs() <= 1e-12);
    assert!((g3 - 3.0 * g1).abs() <= 1e-10);
}
