mod support;

use mca_core::correlation::{pearson, ranks, significance, spearman};
use proptest::prelude::*;
use support::oracles::*;

#[test]
fn quadrature_reproduces_closed_forms() {
    // df = 1 (Cauchy) and df = 2 have elementary tails
    for t in [0.1_f64, 0.7, 1.3, 5.0, 40.0] {
        let cauchy = 1.0 - 2.0 / std::f64::consts::PI * t.atan();
        assert!((t_two_sided_oracle(t, 1) - cauchy).abs() < 1e-12, "t = {t}");
        let df2 = 1.0 - t / (2.0 + t * t).sqrt();
        assert!((t_two_sided_oracle(t, 2) - df2).abs() < 1e-12, "t = {t}");
    }
}

#[test]
fn fixed_examples() {
    assert!((p_value_oracle(0.8, 4) - 0.2).abs() < 1e-12);
    assert!((significance(0.8, 4).unwrap() - 0.2).abs() < 1e-12);
    let p = significance(0.99, 50).unwrap();
    assert!(p < 1e-10);
    assert!((p - p_value_oracle(0.99, 50)).abs() < 1e-15);
    let s = spearman(&[1., 2., 2., 4.], &[1., 3., 2., 4.]).unwrap();
    assert!((s.r - spearman_oracle(&[1., 2., 2., 4.], &[1., 3., 2., 4.])).abs() < 1e-15);
}

fn paired(max: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (3..=max).prop_flat_map(|n| (prop::collection::vec(-100.0..100.0f64, n), prop::collection::vec(-100.0..100.0f64, n)))
}

fn tied(max: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (3..=max)
        .prop_flat_map(|n| (prop::collection::vec(0..6i32, n), prop::collection::vec(0..6i32, n)))
        .prop_map(|(a, b)| (a.into_iter().map(f64::from).collect(), b.into_iter().map(f64::from).collect()))
}

proptest! {
    #[test]
    fn pearson_matches_oracle((x, y) in paired(50)) {
        let r = pearson(&x, &y).unwrap();
        prop_assert!((r.r - pearson_oracle(&x, &y)).abs() < 1e-12);
        prop_assert_eq!(r.n, x.len());
    }

    #[test]
    fn ranks_match_counting(v in prop::collection::vec(0..8i32, 1..40)) {
        let v: Vec<f64> = v.into_iter().map(f64::from).collect();
        prop_assert_eq!(ranks(&v), rank_oracle(&v));
    }

    #[test]
    fn spearman_with_ties_matches_oracle((x, y) in tied(40)) {
        let s = spearman(&x, &y).unwrap();
        if s.defined {
            prop_assert!((s.r - spearman_oracle(&x, &y)).abs() < 1e-12);
        } else {
            prop_assert!(x.iter().all(|&v| v == x[0]) || y.iter().all(|&v| v == y[0]));
        }
    }

    #[test]
    fn symmetric((x, y) in paired(30)) {
        prop_assert_eq!(pearson(&x, &y).unwrap().r, pearson(&y, &x).unwrap().r);
        prop_assert_eq!(spearman(&x, &y).unwrap().r, spearman(&y, &x).unwrap().r);
    }

    #[test]
    fn affine_equivariance((x, y) in paired(30), a in prop_oneof![-10.0..-0.1f64, 0.1..10.0f64], b in -50.0..50.0f64) {
        let ax: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let lhs = pearson(&ax, &y).unwrap().r;
        let rhs = a.signum() * pearson(&x, &y).unwrap().r;
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn monotone_invariance((x, y) in paired(30)) {
        let fx: Vec<f64> = x.iter().map(|v| v.powi(3) + 2.0 * v).collect();
        prop_assert_eq!(spearman(&fx, &y).unwrap().r, spearman(&x, &y).unwrap().r);
    }

    #[test]
    fn result_bounds((x, y) in paired(30)) {
        for c in [pearson(&x, &y).unwrap(), spearman(&x, &y).unwrap()] {
            prop_assert!(c.r.abs() <= 1.0);
            prop_assert!(c.p_value > 0.0 && c.p_value <= 1.0);
        }
    }

    #[test]
    fn significance_monotone(r1 in 0.01..0.98f64, dr in 0.001..0.02f64, n in 3usize..200) {
        let r2 = r1 + dr;
        prop_assert!(significance(r2, n).unwrap() < significance(r1, n).unwrap());
        prop_assert!(significance(-r2, n).unwrap() < significance(r1, n).unwrap());
        prop_assert!(significance(r1, n + 1).unwrap() < significance(r1, n).unwrap());
    }

    #[test]
    fn significance_matches_quadrature(r in -0.999..0.999f64, n in 3usize..60) {
        prop_assert!((significance(r, n).unwrap() - p_value_oracle(r, n)).abs() < 1e-9);
    }
}
