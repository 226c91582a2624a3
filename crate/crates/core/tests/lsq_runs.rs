mod common;

use proptest::prelude::*;
use semiwave::baselines::{newton_iterate, newton_step};
use semiwave::lsq::*;
use semiwave::nonlinearity::Nonlinearity;
use semiwave::wave::*;

use common::*;

#[test]
fn reference_run_stays_admissible_and_decreases() {
    let s = reference();
    let nl = Nonlinearity::sine(5.0);
    let cfg = SolverConfig::default();
    let (init, target) = (sine(&s, 1.0), rest(&s));
    let tol = semiwave::hum::tol_deviation(&s, cfg.cg.tol, &init, &target);
    let start = make_initial_pair(&s, &nl, &init, &target, &cfg).unwrap();
    let mut worst = 0.0f64;
    let run = iterate_observed(&s, &nl, start, &cfg, StepRule::LineSearch, |_, pair| {
        let (a, b) = pair.endpoint_mismatch(&s, &nl);
        worst = worst.max(a).max(b);
    });
    assert!(run.converged(), "{:?}", run.failure);
    assert!(worst <= tol, "endpoint mismatch {worst:e} above {tol:e}");
    let e = run.energies();
    assert!(e.windows(2).all(|w| w[1] < w[0]), "{e:?}");
    assert!(run.final_e() <= 1e-14 * run.e0);
    assert!(run.records.len() <= 16);
    for rec in &run.records {
        if let Some(step) = &rec.step {
            assert!(step.deriv_err <= 1e-6, "k = {}: {}", rec.k, step.deriv_err);
            assert!(step.descent_deviation <= step.descent_tol);
            // the expansion is exact algebra; compare only above the roundoff floor
            if rec.e > 1e-10 {
                assert!(step.expansion_err < 1e-8, "k = {}: {}", rec.k, step.expansion_err);
            }
        }
    }
    let dev = replay_deviation(&s, &nl, &run.pair).unwrap();
    assert!(dev <= 10.0 * tol, "{dev:e}");
}

#[test]
fn slowly_growing_nonlinearity_converges_from_large_data() {
    let s = setup(31);
    let nl = Nonlinearity::logsq(2.0);
    let run = solve(&s, &nl, &sine(&s, 10.0), &rest(&s), &SolverConfig::default()).unwrap();
    let e = run.energies();
    assert!(e.windows(2).all(|w| w[1] < w[0]));
    assert!(run.lambdas().iter().all(|&l| l > 0.0));
}

#[test]
fn superlinear_nonlinearity_converges_where_picard_oscillates() {
    let s = reference();
    let nl = Nonlinearity::neglogcube(2.0);
    let run = solve(&s, &nl, &sine(&s, 10.0), &rest(&s), &SolverConfig::default()).unwrap();
    assert!(run.final_e() <= 1e-14 * run.e0);
}

#[test]
fn newton_has_quadratic_tail_for_small_residuals() {
    let s = setup(31);
    let nl = Nonlinearity::sine(20.0);
    let run = newton_iterate(&s, &nl, &sine(&s, 3.0), &rest(&s), &SolverConfig::default()).unwrap();
    assert!(run.converged(), "{:?}", run.failure);
    let orders = convergence_order(&run.energies());
    assert!(!orders.is_empty());
    assert!(orders.iter().all(|o| o.p >= 1.7), "{orders:?}");
}

#[test]
fn newton_on_large_data_is_recorded_not_fixed() {
    let s = setup(31);
    let nl = Nonlinearity::sine(5.0);
    let cfg = SolverConfig { max_iters: 10, ..SolverConfig::default() };
    let run = newton_iterate(&s, &nl, &sine(&s, 20.0), &rest(&s), &cfg).unwrap();
    assert!(!run.records.is_empty());
    assert!(run.lambdas().iter().all(|&l| l == 1.0));
}

#[test]
fn newton_step_is_the_unit_step_update() {
    let s = setup(15);
    let nl = Nonlinearity::sine(1.0);
    let cfg = SolverConfig::default();
    let pair = make_initial_pair(&s, &nl, &sine(&s, 1.0), &rest(&s), &cfg).unwrap();
    let out = newton_step(&s, &nl, &pair, &cfg).unwrap();
    let r = residual(&s, &nl, &pair);
    let dir = descent_pair(&s, &nl, &pair, &r, &cfg).unwrap();
    assert_eq!(out.pair, update(&pair, &dir, 1.0));
}

#[test]
fn diagnostics_on_the_reference_run() {
    let s = reference();
    let nl = Nonlinearity::sine(5.0);
    let run = solve(&s, &nl, &sine(&s, 1.0), &rest(&s), &SolverConfig::default()).unwrap();
    let c_emp = calibrate_c_emp(&run.records);
    assert!(c_emp > 0.0 && c_emp.is_finite());
    let floor = ORDER_FLOOR.max(run.final_e());
    let report = decay_bound_check(&run.records, &nl, c_emp, 2.0, floor);
    assert_eq!(report.rows.len(), run.lambdas().len());
    assert!(report.all_hold(), "{:?}", report.rows);
    // a smaller constant must break the bound somewhere, or C_emp is not minimal
    let smaller = decay_bound_check(&run.records, &nl, 0.5 * c_emp, 2.0, 0.0);
    assert!(smaller.rows.iter().any(|r| !r.holds) || smaller.rows.iter().all(|r| r.bound >= r.e_next));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn derivative_identity_holds_for_random_data(amp in 0.2f64..3.0, a in 0.5f64..6.0, k in 1u32..4) {
        let s = setup(15);
        let nl = Nonlinearity::sine(a);
        let cfg = SolverConfig::default();
        let init = StateSlice::from_fns(&s, |x| amp * (k as f64 * std::f64::consts::PI * x).sin(), |_| 0.0);
        let pair = make_initial_pair(&s, &nl, &init, &rest(&s), &cfg).unwrap();
        let r = residual(&s, &nl, &pair);
        let dir = descent_pair(&s, &nl, &pair, &r, &cfg).unwrap();
        let d = linearized_residual(&s, &nl, &pair, &dir);
        prop_assert!(directional_derivative_identity(&s, &r, &d) <= 1e-6);
        // a positive step always decreases E for small lambda
        let e0 = error_of_residual(&s, &r);
        let e_small = error_functional(&s, &nl, &update(&pair, &dir, 1e-3));
        prop_assert!(e_small < e0);
    }
}
