use approx::assert_abs_diff_eq;
use kinetic_net::analysis::{convergence_study, fit_slope, norms, residual_sweep, StudyConfig};
use kinetic_net::asymptotic::Case;
use kinetic_net::Field;
use proptest::prelude::*;
use std::f64::consts::PI;

#[test]
fn constant_field_norms() {
    let (c, cells, dx) = (2.5, 40, 0.05);
    let f = Field::from_components(vec![vec![c; cells]]).unwrap();
    let n = norms(&f, dx).unwrap();
    let len = cells as f64 * dx;
    assert_abs_diff_eq!(n.l2, c * len.sqrt(), epsilon = 1e-13);
    assert_abs_diff_eq!(n.linf, c, epsilon = 0.0);
    assert_abs_diff_eq!(n.h1, n.l2, epsilon = 1e-13);
}

#[test]
fn spike_and_components() {
    let mut f = Field::zeros(2, 9);
    f.set(1, 4, -1.0);
    let n = norms(&f, 0.25).unwrap();
    assert_eq!(n.linf, 1.0);
    assert_abs_diff_eq!(n.l2, 0.5, epsilon = 1e-15);
    // two jumps of size 1/dx
    assert_abs_diff_eq!(n.h1, (0.25f64 + 2.0 * 16.0 * 0.25).sqrt(), epsilon = 1e-13);
}

#[test]
fn sine_norms_match_integrals() {
    let m = 4096;
    let dx = 1.0 / m as f64;
    let v: Vec<f64> = (0..=m).map(|j| (PI * j as f64 * dx).sin()).collect();
    let n = norms(&Field::from_components(vec![v]).unwrap(), dx).unwrap();
    assert_abs_diff_eq!(n.l2, 0.5f64.sqrt(), epsilon = 1e-4);
    assert_abs_diff_eq!(n.linf, 1.0, epsilon = 1e-6);
    assert_abs_diff_eq!(n.h1, (0.5 + PI * PI / 2.0).sqrt(), epsilon = 1e-4);
}

#[test]
fn norm_errors() {
    assert!(norms(&Field::zeros(1, 0), 0.1).is_err());
    assert!(norms(&Field::zeros(1, 3), 0.0).is_err());
}

#[test]
fn slope_recovery() {
    let eps: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];
    for p in [0.5, 1.0, 1.5, 2.0] {
        let errs: Vec<f64> = eps.iter().map(|e| 3.0 * e.powf(p)).collect();
        let f = fit_slope(&eps, &errs).unwrap();
        assert_abs_diff_eq!(f.slope, p, epsilon = 1e-12);
        assert_abs_diff_eq!(f.intercept, 3f64.ln(), epsilon = 1e-11);
        assert!(f.residual < 1e-12);
    }
    assert!(fit_slope(&[0.1], &[1.0]).is_err());
    assert!(fit_slope(&[0.1, 0.05], &[1.0, 0.0]).is_err());
    assert!(fit_slope(&[0.1, 0.05], &[1.0]).is_err());
}

#[test]
fn sweeps_validate_eps_lists() {
    let cfg = StudyConfig::default();
    for bad in [
        vec![0.1, 0.05],
        vec![0.1, 0.2, 0.05],
        vec![1.5, 0.1, 0.05],
        vec![0.1, 0.05, 0.05],
    ] {
        assert!(
            residual_sweep(Case::Q1Ibvp1, &bad, &cfg).is_err(),
            "{bad:?}"
        );
        assert!(
            convergence_study(Case::Q1Ibvp1, &bad, &cfg).is_err(),
            "{bad:?}"
        );
    }
}

#[test]
fn residual_sweep_smoke() {
    let cfg = StudyConfig {
        n_half: 2,
        residual_times: 4,
        ..StudyConfig::default()
    };
    let s = residual_sweep(Case::Q1Ibvp1, &[0.2, 0.1, 0.05], &cfg).unwrap();
    assert_eq!(s.reports.len(), 3);
    assert!(s.reports.iter().all(|r| r.e1.is_finite() && r.e1 > 0.0));
    assert!(s.e1_fit.unwrap().slope > 0.5);
}

proptest! {
    #[test]
    fn norms_are_homogeneous(vals in prop::collection::vec(-3.0f64..3.0, 12), s in -4.0f64..4.0) {
        let f = Field::from_components(vec![vals[..6].to_vec(), vals[6..].to_vec()]).unwrap();
        let a = norms(&f, 0.1).unwrap();
        let b = norms(&f.scaled(s), 0.1).unwrap();
        prop_assert!((b.l2 - s.abs() * a.l2).abs() <= 1e-12 * (1.0 + a.l2 * s.abs()));
        prop_assert!((b.linf - s.abs() * a.linf).abs() <= 1e-12 * (1.0 + a.linf * s.abs()));
        prop_assert!((b.h1 - s.abs() * a.h1).abs() <= 1e-12 * (1.0 + a.h1 * s.abs()));
        prop_assert!(a.h1 >= a.l2);
    }
}
