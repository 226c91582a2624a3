use super::*;
use crate::wave::Interval;
use std::f64::consts::PI;

fn setup(nx: usize, t: f64) -> DiscreteSetup {
    DiscreteSetup::new(nx, t, Interval::new(0.2, 0.8).unwrap(), 0.9).unwrap()
}

fn seed_from(nx: usize, k: u32) -> AdjointSeed {
    AdjointSeed {
        phi0: (0..nx).map(|i| ((i as f64 + 1.0) * 0.3 * k as f64).sin()).collect(),
        phi1: (0..nx).map(|i| ((i as f64) * 0.7 + k as f64).cos()).collect(),
    }
}

#[test]
fn gramian_is_symmetric_and_matches_window_norm() {
    let s = setup(12, 2.0);
    let a = SpaceTimeField::from_fn(&s, |x, t| 1.0 + x * t);
    let (u, v) = (seed_from(12, 1), seed_from(12, 2));
    let lu = gramian_apply(&s, &a, &u).unwrap();
    let lv = gramian_apply(&s, &a, &v).unwrap();
    let dx = s.dx();
    let (uv, vu) = (lu.pairing(&v, dx), lv.pairing(&u, dx));
    assert!((uv - vu).abs() < 1e-11 * uv.abs().max(1.0), "{uv} vs {vu}");
    let phi_u = adjoint_state(&s, &a, &u).unwrap();
    let phi_v = adjoint_state(&s, &a, &v).unwrap();
    let direct = window_inner(&s, &phi_u, &phi_v);
    assert!((uv - direct).abs() < 1e-11 * direct.abs().max(1.0));
}

#[test]
fn zero_rhs_needs_no_iterations() {
    let s = setup(10, 2.0);
    let zero = SpaceTimeField::zeros(&s);
    let out = gramian_cg(&s, &zero, &AdjointSeed::zeros(10), &CgOptions::default()).unwrap();
    assert_eq!(out.iterations, 0);
    assert!(out.seed.phi0.iter().chain(&out.seed.phi1).all(|&v| v == 0.0));
}

#[test]
fn null_control_brings_sine_to_rest() {
    let s = setup(31, 2.5);
    let zero = SpaceTimeField::zeros(&s);
    let init = StateSlice::from_fns(&s, |x| (PI * x).sin(), |_| 0.0);
    let rest = StateSlice::zeros(31);
    let problem = LinearControlProblem {
        setup: &s,
        potential: &zero,
        source: &zero,
        init: &init,
        target: &rest,
    };
    let sol = solve_null_control(&problem, &CgOptions::default()).unwrap();
    assert!(sol.within_tolerance(), "{} > {}", sol.final_deviation, sol.tol_deviation);
    assert!(sol.final_deviation < 1e-6);
    // control lives on the window only
    for n in 0..=s.nt() {
        for (i, m) in s.omega_mask().iter().enumerate() {
            if *m == 0.0 {
                assert_eq!(sol.control.get(n, i), 0.0);
            }
        }
    }
}

#[test]
fn seed_minimizes_dual_functional() {
    let s = setup(15, 2.0);
    let a = SpaceTimeField::constant(&s, 2.0);
    let b = SpaceTimeField::from_fn(&s, |x, t| x * (1.0 - x) * t);
    let init = StateSlice::from_fns(&s, |x| (PI * x).sin(), |x| x);
    let rest = StateSlice::zeros(15);
    let problem = LinearControlProblem {
        setup: &s,
        potential: &a,
        source: &b,
        init: &init,
        target: &rest,
    };
    let sol = solve_null_control(&problem, &CgOptions::default()).unwrap();
    let j0 = dual_functional(&problem, &sol.seed).unwrap();
    for k in 1..5 {
        let mut moved = sol.seed.clone();
        moved.axpy(1e-3, &seed_from(15, k));
        assert!(dual_functional(&problem, &moved).unwrap() > j0);
    }
}

#[test]
fn steer_to_rest_agrees_with_null_control() {
    let s = setup(15, 2.0);
    let a = SpaceTimeField::from_fn(&s, |x, _| 3.0 * x);
    let b = SpaceTimeField::from_fn(&s, |x, t| (x - t).sin());
    let init = StateSlice::from_fns(&s, |x| (PI * x).sin(), |_| 0.0);
    let rest = StateSlice::zeros(15);
    let opts = CgOptions::default();
    let problem = LinearControlProblem {
        setup: &s,
        potential: &a,
        source: &b,
        init: &init,
        target: &rest,
    };
    let direct = solve_null_control(&problem, &opts).unwrap();
    let steered = steer(&s, &a, &b, &init, &rest, &opts).unwrap();
    let mut diff = direct.control.clone();
    diff.axpy(-1.0, &steered.control);
    assert!(diff.max_abs() <= 1e-12 * (1.0 + direct.control.max_abs()));
    let mut diff = direct.trajectory.clone();
    diff.axpy(-1.0, &steered.trajectory);
    assert!(diff.max_abs() <= 1e-12 * (1.0 + direct.trajectory.max_abs()));
}

#[test]
fn steer_reaches_nonzero_target() {
    let s = setup(31, 2.5);
    let zero = SpaceTimeField::zeros(&s);
    let init = StateSlice::zeros(31);
    let target = StateSlice::from_fns(&s, |x| 0.5 * (2.0 * PI * x).sin(), |x| x * (1.0 - x));
    let sol = steer(&s, &zero, &zero, &init, &target, &CgOptions::default()).unwrap();
    assert!(sol.within_tolerance());
}

#[test]
fn nonzero_target_is_refused_by_null_control() {
    let s = setup(10, 2.0);
    let zero = SpaceTimeField::zeros(&s);
    let init = StateSlice::zeros(10);
    let target = StateSlice::from_fns(&s, |x| x, |_| 0.0);
    let problem = LinearControlProblem {
        setup: &s,
        potential: &zero,
        source: &zero,
        init: &init,
        target: &target,
    };
    let err = solve_null_control(&problem, &CgOptions::default()).unwrap_err();
    assert!(matches!(err, Error::Validation { .. }));
}

#[test]
fn iteration_cap_is_reported() {
    let s = setup(31, 2.5);
    let zero = SpaceTimeField::zeros(&s);
    let rhs = seed_from(31, 3);
    let opts = CgOptions {
        max_iter: 2,
        tol: 1e-14,
        ..CgOptions::default()
    };
    let err = gramian_cg(&s, &zero, &rhs, &opts).unwrap_err();
    assert!(matches!(err, Error::Convergence { iterations: 2, .. }));
}

#[test]
fn jacobi_scaling_finds_the_same_seed() {
    let s = setup(12, 2.0);
    let a = SpaceTimeField::constant(&s, 1.0);
    let rhs = seed_from(12, 2);
    let plain = gramian_cg(&s, &a, &rhs, &CgOptions::default()).unwrap();
    let opts = CgOptions {
        diagonal_scaling: true,
        ..CgOptions::default()
    };
    let scaled = gramian_cg(&s, &a, &rhs, &opts).unwrap();
    let mut d = plain.seed.clone();
    d.axpy(-1.0, &scaled.seed);
    assert!(d.h_norm(s.dx()) <= 1e-7 * plain.seed.h_norm(s.dx()));
}

#[test]
fn filtered_seed_has_no_high_modes() {
    let s = setup(20, 2.0);
    let zero = SpaceTimeField::zeros(&s);
    let rhs = seed_from(20, 5);
    let opts = CgOptions {
        spectral_filter: true,
        ..CgOptions::default()
    };
    let out = gramian_cg(&s, &zero, &rhs, &opts).unwrap();
    let c = crate::wave::spectral::sine_coefficients(&out.seed.phi0);
    assert!(c[16..].iter().all(|v| v.abs() < 1e-10));
}
