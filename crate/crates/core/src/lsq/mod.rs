//! Least-squares functional `E(y, f) = 1/2 |y_tt - y_xx + g(y) - f 1_omega|^2`
//! over controlled pairs, and the damped-Newton descent that drives it to zero.
//!
//! A pair `(y, f)` belongs to the admissible set when `y` starts at `(u0, u1)`
//! and ends at `(z0, z1)`. On the grid, the endpoint velocities are the
//! Taylor-consistent ones of the leapfrog solver evaluated with the reaction
//! `g(y)` and the source `f 1_omega`; since `y` is pinned at both ends, this
//! keeps the set affine. The residual is computed with the same stencil as the
//! solver, so a pair is a discrete controlled solution exactly when `E = 0`.

mod diagnostics;
mod line_search;

pub use diagnostics::{
    calibrate_c_emp, convergence_order, decay_bound_check, DecayReport, DecayRow, OrderEstimate,
    ORDER_FLOOR,
};
pub use line_search::{expansion_objective, line_search, LineSearch};

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hum::{steer, CgOptions, LinearControlProblem};
use crate::nonlinearity::Nonlinearity;
use crate::wave::{
    end_velocity, inner, readout_velocity, semilinear_forward, start_velocity, v_norm,
    wave_operator, window_inner, DiscreteSetup, SpaceTimeField, StateSlice,
};

/// `|y|_inf` above which the iteration is aborted.
pub const BLOW_UP_GUARD: f64 = 1e8;

/// Number of random step lengths at which the line-search expansion is
/// compared against a direct residual evaluation.
pub const EXPANSION_PROBES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Upper end of the line-search interval, `m >= 1`.
    pub m: f64,
    /// Relative stopping level: stop once `E_k <= tol_e (1 + E_0)`.
    pub tol_e: f64,
    pub max_iters: usize,
    pub cg: CgOptions,
    /// Final bracket width of the golden-section search.
    pub ls_tol: f64,
    /// Seed of the step lengths used to verify the line-search expansion.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            m: 2.0,
            tol_e: 1e-16,
            max_iters: 50,
            cg: CgOptions::default(),
            ls_tol: 1e-4,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.m >= 1.0 && self.m.is_finite()) {
            return Err(Error::validation("solver.m", "must be finite and >= 1"));
        }
        if !(self.tol_e > 0.0) {
            return Err(Error::validation("solver.tol_e", "must be positive"));
        }
        if !(self.cg.tol > 0.0) {
            return Err(Error::validation("solver.cg_tol", "must be positive"));
        }
        if self.cg.max_iter == 0 {
            return Err(Error::validation("solver.cg_maxit", "must be positive"));
        }
        if !(self.ls_tol > 0.0) {
            return Err(Error::validation("solver.ls_tol", "must be positive"));
        }
        Ok(())
    }
}

/// A trajectory and control with the endpoint data they are meant to join.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlledPair {
    pub y: SpaceTimeField,
    /// Control, zero on nodes outside the window.
    pub f: SpaceTimeField,
    pub init: StateSlice,
    pub target: StateSlice,
}

impl ControlledPair {
    /// Distances in `V` between the pair's endpoint states and its endpoint data.
    pub fn endpoint_mismatch(&self, setup: &DiscreteSetup, nl: &Nonlinearity) -> (f64, f64) {
        let nt = setup.nt();
        let fm = self.f.masked(setup);
        let g0: Vec<f64> = self.y.level(0).iter().map(|&v| nl.g(v)).collect();
        let gn: Vec<f64> = self.y.level(nt).iter().map(|&v| nl.g(v)).collect();
        let start = StateSlice::new(
            self.y.level(0).to_vec(),
            start_velocity(setup, &self.y, &g0, fm.level(0)),
        );
        let end = StateSlice::new(
            self.y.level(nt).to_vec(),
            end_velocity(setup, &self.y, &gn, fm.level(nt)),
        );
        (
            v_norm(setup, &start.sub(&self.init)),
            v_norm(setup, &end.sub(&self.target)),
        )
    }

    pub fn y_inf(&self) -> f64 {
        self.y.max_abs()
    }
}

/// `y_tt - y_xx + g(y) - f 1_omega` on every level.
pub fn residual(setup: &DiscreteSetup, nl: &Nonlinearity, pair: &ControlledPair) -> SpaceTimeField {
    let mut r = wave_operator(setup, &pair.y, &pair.init.velocity, &pair.target.velocity);
    r.axpy(1.0, &nl.eval_g(&pair.y));
    r.axpy(-1.0, &pair.f.masked(setup));
    r
}

pub fn error_of_residual(setup: &DiscreteSetup, r: &SpaceTimeField) -> f64 {
    0.5 * inner(setup, r, r)
}

pub fn error_functional(setup: &DiscreteSetup, nl: &Nonlinearity, pair: &ControlledPair) -> f64 {
    error_of_residual(setup, &residual(setup, nl, pair))
}

/// Discrete `H` norm of a pair: `|y|^2 + |(y, y_t)(0)|_V^2 + |y_tt - y_xx|^2 + |f|^2_{q_T}`.
pub fn h_norm(
    setup: &DiscreteSetup,
    y: &SpaceTimeField,
    f: &SpaceTimeField,
    v_start: &[f64],
    v_end: &[f64],
) -> f64 {
    let op = wave_operator(setup, y, v_start, v_end);
    let start = StateSlice::new(y.level(0).to_vec(), v_start.to_vec());
    let vs = v_norm(setup, &start);
    (inner(setup, y, y) + vs * vs + inner(setup, &op, &op) + window_inner(setup, f, f)).sqrt()
}

/// `max_n |(Y^n, Y_t^n)|_V` with the kinematic velocity readout.
pub fn linf_v(setup: &DiscreteSetup, y: &SpaceTimeField) -> f64 {
    (0..=setup.nt())
        .map(|n| {
            let state = StateSlice::new(y.level(n).to_vec(), readout_velocity(setup, y, n));
            v_norm(setup, &state)
        })
        .fold(0.0, f64::max)
}

/// Endpoint source of the starting pair: `-g(u0)` at the first level and
/// `-g(z0)` at the last, zero elsewhere.
fn endpoint_source(
    setup: &DiscreteSetup,
    nl: &Nonlinearity,
    init: &StateSlice,
    target: &StateSlice,
) -> SpaceTimeField {
    let mut b = SpaceTimeField::zeros(setup);
    let nt = setup.nt();
    for (o, &v) in b.level_mut(0).iter_mut().zip(&init.position) {
        *o = -nl.g(v);
    }
    for (o, &v) in b.level_mut(nt).iter_mut().zip(&target.position) {
        *o = -nl.g(v);
    }
    b
}

/// Minimal-norm controlled pair of the equation without nonlinear term.
///
/// The endpoint source compensates `g` in the endpoint velocities, so that the
/// pair is admissible for `nl`; the interior levels carry the plain linear
/// control problem.
pub fn make_initial_pair(
    setup: &DiscreteSetup,
    nl: &Nonlinearity,
    init: &StateSlice,
    target: &StateSlice,
    cfg: &SolverConfig,
) -> Result<ControlledPair> {
    check_slices(setup, init, target)?;
    let zero = SpaceTimeField::zeros(setup);
    let source = endpoint_source(setup, nl, init, target);
    let sol = steer(setup, &zero, &source, init, target, &cfg.cg)?;
    Ok(ControlledPair {
        y: sol.trajectory,
        f: sol.control,
        init: init.clone(),
        target: target.clone(),
    })
}

fn check_slices(setup: &DiscreteSetup, init: &StateSlice, target: &StateSlice) -> Result<()> {
    for (name, s) in [("init", init), ("target", target)] {
        if s.nx() != setup.nx() || s.velocity.len() != setup.nx() {
            return Err(Error::validation(name, format!("expected {} nodes", setup.nx())));
        }
        if !s.is_finite() {
            return Err(Error::validation(name, "values must be finite"));
        }
    }
    Ok(())
}

/// Null-controlled solution `(Y, F)` of the linearized equation
/// `Y_tt - Y_xx + g'(y) Y = F 1_omega + r` with zero data at both ends.
#[derive(Debug, Clone)]
pub struct DescentPair {
    pub y: SpaceTimeField,
    pub f: SpaceTimeField,
    pub cg_iters: usize,
    pub cg_residual: f64,
    /// Replayed distance of the final state from rest.
    pub deviation: f64,
    pub tol_deviation: f64,
}

pub fn descent_pair(
    setup: &DiscreteSetup,
    nl: &Nonlinearity,
    pair: &ControlledPair,
    r: &SpaceTimeField,
    cfg: &SolverConfig,
) -> Result<DescentPair> {
    let potential = nl.eval_gprime(&pair.y);
    let rest = StateSlice::zeros(setup.nx());
    let problem = LinearControlProblem {
        setup,
        potential: &potential,
        source: r,
        init: &rest,
        target: &rest,
    };
    let sol = crate::hum::solve_null_control(&problem, &cfg.cg)?;
    Ok(DescentPair {
        y: sol.trajectory,
        f: sol.control,
        cg_iters: sol.cg_iters,
        cg_residual: sol.cg_residual,
        deviation: sol.final_deviation,
        tol_deviation: sol.tol_deviation,
    })
}

/// Residual of the linearized equation along `(Y, F)`:
/// `Y_tt - Y_xx + g'(y) Y - F 1_omega`, with zero endpoint velocities.
pub fn linearized_residual(
    setup: &DiscreteSetup,
    nl: &Nonlinearity,
    pair: &ControlledPair,
    dir: &DescentPair,
) -> SpaceTimeField {
    let zeros = vec![0.0; setup.nx()];
    let mut d = wave_operator(setup, &dir.y, &zeros, &zeros);
    let gp = nl.eval_gprime(&pair.y);
    d.axpy(1.0, &gp.zip_map(&dir.y, |a, b| a * b));
    d.axpy(-1.0, &dir.f.masked(setup));
    d
}

/// `|E'(y,f).(Y,F) - 2E| / max(E, 1e-30)` with `E'(y,f).(Y,F) = (r, d)`.
pub fn directional_derivative_identity(setup: &DiscreteSetup, r: &SpaceTimeField, d: &SpaceTimeField) -> f64 {
    let e = error_of_residual(setup, r);
    if e == 0.0 {
        return 0.0;
    }
    (inner(setup, r, d) - 2.0 * e).abs() / e.max(1e-30)
}

/// `(y, f) - lambda (Y, F)`
pub fn update(pair: &ControlledPair, dir: &DescentPair, lambda: f64) -> ControlledPair {
    let mut y = pair.y.clone();
    y.axpy(-lambda, &dir.y);
    let mut f = pair.f.clone();
    f.axpy(-lambda, &dir.f);
    ControlledPair {
        y,
        f,
        init: pair.init.clone(),
        target: pair.target.clone(),
    }
}

/// How the step length is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    LineSearch,
    Fixed(f64),
}

/// Everything measured along one descent step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub lambda: f64,
    /// `H` norm of `(Y, F)`.
    pub dir_norm: f64,
    pub deriv_err: f64,
    pub cg_iters: usize,
    pub cg_res: f64,
    /// `|g'(y_k)|_inf`
    pub gprime_inf: f64,
    /// `|Y|_inf`
    pub dir_y_inf: f64,
    /// `|Y|_{L^inf(V)} + |F|_{q_T}`
    pub dir_state_norm: f64,
    /// `| |Y|^{1+s} |_2 / |Y|_inf^{1+s}`
    pub dir_shape: f64,
    pub descent_deviation: f64,
    pub descent_tol: f64,
    /// Largest relative gap between the line-search expansion and a direct
    /// residual evaluation over the probe step lengths.
    pub expansion_err: f64,
    pub e_next: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub e: f64,
    pub y_inf: f64,
    /// Seconds since the start of the run.
    pub wall_time: f64,
    /// `None` on the terminal record.
    pub step: Option<StepRecord>,
}

pub struct StepOutcome {
    pub pair: ControlledPair,
    pub direction: DescentPair,
    pub record: StepRecord,
}

/// One descent step from `pair` with residual `r`.
pub fn step(
    setup: &DiscreteSetup,
    nl: &Nonlinearity,
    pair: &ControlledPair,
    r: &SpaceTimeField,
    cfg: &SolverConfig,
    rule: StepRule,
    rng: &mut ChaCha8Rng,
) -> Result<StepOutcome> {
    let dir = descent_pair(setup, nl, pair, r, cfg)?;
    let d = linearized_residual(setup, nl, pair, &dir);
    let lambda = match rule {
        StepRule::LineSearch => line_search(nl, pair, &dir, r, &d, setup, cfg.m, cfg.ls_tol).lambda,
        StepRule::Fixed(l) => l,
    };
    let next = update(pair, &dir, lambda);
    let e_next = error_functional(setup, nl, &next);

    let mut expansion_err = 0.0f64;
    for _ in 0..EXPANSION_PROBES {
        let l = rng.gen_range(0.0..=cfg.m);
        let predicted = expansion_objective(setup, nl, &pair.y, &dir.y, r, &d, l);
        let direct = error_functional(setup, nl, &update(pair, &dir, l));
        let scale = direct.abs().max(predicted.abs()).max(1e-300);
        expansion_err = expansion_err.max((predicted - direct).abs() / scale);
    }

    let s = nl.s();
    let dir_y_inf = dir.y.max_abs();
    let dir_shape = if dir_y_inf > 0.0 {
        let p = dir.y.map(|v| (v.abs() / dir_y_inf).powf(1.0 + s));
        inner(setup, &p, &p).sqrt()
    } else {
        0.0
    };
    let zeros = vec![0.0; setup.nx()];
    let record = StepRecord {
        lambda,
        dir_norm: h_norm(setup, &dir.y, &dir.f, &zeros, &zeros),
        deriv_err: directional_derivative_identity(setup, r, &d),
        cg_iters: dir.cg_iters,
        cg_res: dir.cg_residual,
        gprime_inf: nl.eval_gprime(&pair.y).max_abs(),
        dir_y_inf,
        dir_state_norm: linf_v(setup, &dir.y) + window_inner(setup, &dir.f, &dir.f).sqrt(),
        dir_shape,
        descent_deviation: dir.deviation,
        descent_tol: dir.tol_deviation,
        expansion_err,
        e_next,
    };
    Ok(StepOutcome {
        pair: next,
        direction: dir,
        record,
    })
}

/// Result of an iteration, including the log when it fails.
#[derive(Debug)]
pub struct LsqRun {
    pub pair: ControlledPair,
    pub records: Vec<IterationRecord>,
    pub e0: f64,
    pub stop_level: f64,
    pub failure: Option<Error>,
}

impl LsqRun {
    pub fn converged(&self) -> bool {
        self.failure.is_none()
    }

    pub fn final_e(&self) -> f64 {
        self.records.last().map(|r| r.e).unwrap_or(self.e0)
    }

    pub fn into_result(mut self) -> Result<LsqRun> {
        match self.failure.take() {
            None => Ok(self),
            Some(err) => Err(err),
        }
    }

    /// Step lengths of the completed steps.
    pub fn lambdas(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.step.as_ref().map(|s| s.lambda)).collect()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.e).collect()
    }
}

/// Runs the descent from `start` until `E` drops below the stopping level,
/// keeping the log on failure.
pub fn iterate_from(
    setup: &DiscreteSetup,
    nl: &Nonlinearity,
    start: ControlledPair,
    cfg: &SolverConfig,
    rule: StepRule,
) -> LsqRun {
    iterate_observed(setup, nl, start, cfg, rule, |_, _| {})
}

/// As [`iterate_from`], handing every iterate `(k, pair_k)` to `observe`.
pub fn iterate_observed(
    setup: &DiscreteSetup,
    nl: &Nonlinearity,
    start: ControlledPair,
    cfg: &SolverConfig,
    rule: StepRule,
    mut observe: impl FnMut(usize, &ControlledPair),
) -> LsqRun {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut pair = start;
    let mut r = residual(setup, nl, &pair);
    let e0 = error_of_residual(setup, &r);
    let stop_level = cfg.tol_e * (1.0 + e0);
    let mut records = Vec::new();
    let mut e = e0;
    let mut k = 0;
    let failure = loop {
        observe(k, &pair);
        let y_inf = pair.y_inf();
        let mut rec = IterationRecord {
            k,
            e,
            y_inf,
            wall_time: clock.elapsed().as_secs_f64(),
            step: None,
        };
        if !e.is_finite() || y_inf > BLOW_UP_GUARD || !y_inf.is_finite() {
            records.push(rec);
            break Some(Error::BlowUp { k, y_inf });
        }
        if e <= stop_level {
            records.push(rec);
            break None;
        }
        if k == cfg.max_iters {
            records.push(rec);
            break Some(Error::MaxIter {
                max_iters: cfg.max_iters,
                last_value: e,
            });
        }
        let out = match step(setup, nl, &pair, &r, cfg, rule, &mut rng) {
            Ok(o) => o,
            Err(err) => {
                records.push(rec);
                break Some(err);
            }
        };
        let e_next = out.record.e_next;
        rec.step = Some(out.record);
        rec.wall_time = clock.elapsed().as_secs_f64();
        records.push(rec);
        if rule == StepRule::LineSearch && !(e_next < e) {
            let y_inf = out.pair.y_inf();
            records.push(IterationRecord {
                k: k + 1,
                e: e_next,
                y_inf,
                wall_time: clock.elapsed().as_secs_f64(),
                step: None,
            });
            pair = out.pair;
            break Some(Error::Stagnation {
                k,
                previous: e,
                next: e_next,
            });
        }
        pair = out.pair;
        r = residual(setup, nl, &pair);
        e = error_of_residual(setup, &r);
        k += 1;
    };
    LsqRun {
        pair,
        records,
        e0,
        stop_level,
        failure,
    }
}

/// Builds the starting pair and runs the line-search descent.
pub fn iterate(
    setup: &DiscreteSetup,
    nl: &Nonlinearity,
    init: &StateSlice,
    target: &StateSlice,
    cfg: &SolverConfig,
) -> Result<LsqRun> {
    cfg.validate()?;
    let start = make_initial_pair(setup, nl, init, target, cfg)?;
    Ok(iterate_from(setup, nl, start, cfg, StepRule::LineSearch))
}

/// As [`iterate`], failing unless the stopping level is reached.
pub fn solve(
    setup: &DiscreteSetup,
    nl: &Nonlinearity,
    init: &StateSlice,
    target: &StateSlice,
    cfg: &SolverConfig,
) -> Result<LsqRun> {
    iterate(setup, nl, init, target, cfg)?.into_result()
}

/// Replays the control through the semilinear equation from `init` and
/// returns the `V` distance of the final state to `target`.
pub fn replay_deviation(setup: &DiscreteSetup, nl: &Nonlinearity, pair: &ControlledPair) -> Result<f64> {
    let source = pair.f.masked(setup);
    let y = semilinear_forward(setup, |v| nl.g(v), &source, &pair.init)?;
    let nt = setup.nt();
    let gn: Vec<f64> = y.level(nt).iter().map(|&v| nl.g(v)).collect();
    let reached = StateSlice::new(
        y.level(nt).to_vec(),
        end_velocity(setup, &y, &gn, source.level(nt)),
    );
    Ok(v_norm(setup, &reached.sub(&pair.target)))
}
