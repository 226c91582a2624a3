//! Minimal `L^2(q_T)` controls of the linear wave equation with potential
//! (Hilbert Uniqueness Method).
//!
//! Given a potential `A`, a source `B` and initial data `(z0, z1)`, the
//! minimal-norm null control is `u = phi 1_omega`, where `phi` solves the
//! homogeneous adjoint equation from the seed `(phi0, phi1)` at `t = 0` and
//! the seed minimizes the dual functional
//! `J = 1/2 |phi|^2_{q_T} + (B, phi)_{Q_T} - (<z0, phi1> - (z1, phi0))`.
//! The seed solves `Lambda seed = rhs`, with the Gramian `Lambda` applied
//! matrix-free by one forward and one backward wave solve.
//!
//! The endpoint conventions of the leapfrog solver make the discrete
//! summation-by-parts identity exact, so `Lambda` is symmetric and the
//! returned control steers the discrete system exactly, up to the CG
//! tolerance.

mod cg;
mod seed;

pub use cg::{gramian_cg, CgOptions, CgOutcome, FILTER_KEEP_FRACTION};
pub use seed::AdjointSeed;

use crate::error::{Error, Result};
use crate::wave::{
    final_slice, initial_slice, inner, v_norm, wave_backward, wave_forward, window_inner,
    DiscreteSetup, SpaceTimeField, StateSlice,
};

/// Factor between the CG tolerance and the accepted final-state deviation.
pub const DEVIATION_FACTOR: f64 = 100.0;

/// Data of a linear control problem `z_tt - z_xx + A z = u 1_omega + B`.
#[derive(Debug, Clone, Copy)]
pub struct LinearControlProblem<'a> {
    pub setup: &'a DiscreteSetup,
    pub potential: &'a SpaceTimeField,
    pub source: &'a SpaceTimeField,
    pub init: &'a StateSlice,
    pub target: &'a StateSlice,
}

/// Result of a HUM solve.
#[derive(Debug, Clone)]
pub struct HumSolution {
    /// Control on every level, zero on nodes outside the window.
    pub control: SpaceTimeField,
    pub trajectory: SpaceTimeField,
    pub seed: AdjointSeed,
    pub cg_iters: usize,
    pub cg_residual: f64,
    /// `V`-distance between the replayed final state and the target.
    pub final_deviation: f64,
    pub tol_deviation: f64,
}

impl HumSolution {
    pub fn within_tolerance(&self) -> bool {
        self.final_deviation <= self.tol_deviation
    }

    pub fn control_norm(&self, setup: &DiscreteSetup) -> f64 {
        window_inner(setup, &self.control, &self.control).sqrt()
    }
}

pub fn tol_deviation(setup: &DiscreteSetup, tol: f64, init: &StateSlice, target: &StateSlice) -> f64 {
    DEVIATION_FACTOR * tol * (1.0 + v_norm(setup, init) + v_norm(setup, target))
}

/// Adjoint state: the homogeneous solution with potential `A` started from `seed`.
pub fn adjoint_state(
    setup: &DiscreteSetup,
    potential: &SpaceTimeField,
    seed: &AdjointSeed,
) -> Result<SpaceTimeField> {
    let init = StateSlice {
        position: seed.phi0.clone(),
        velocity: seed.phi1.clone(),
    };
    wave_forward(setup, potential, &SpaceTimeField::zeros(setup), &init)
}

/// Value of the dual functional at `seed` for null controllability of `problem`.
pub fn dual_functional(problem: &LinearControlProblem<'_>, seed: &AdjointSeed) -> Result<f64> {
    let setup = problem.setup;
    let phi = adjoint_state(setup, problem.potential, seed)?;
    let dx = setup.dx();
    let z = problem.init;
    let pairing = dx
        * (z.position.iter().zip(&seed.phi1).map(|(a, b)| a * b).sum::<f64>()
            - z.velocity.iter().zip(&seed.phi0).map(|(a, b)| a * b).sum::<f64>());
    Ok(0.5 * window_inner(setup, &phi, &phi) + inner(setup, problem.source, &phi) - pairing)
}

/// Initial-time trace `(-psi_t(0), psi(0))` of the backward solution driven
/// by `source` with zero final data.
fn backward_trace(
    setup: &DiscreteSetup,
    potential: &SpaceTimeField,
    source: &SpaceTimeField,
) -> Result<AdjointSeed> {
    let psi = wave_backward(setup, potential, source, &StateSlice::zeros(setup.nx()))?;
    let start = initial_slice(setup, &psi, potential, source);
    Ok(AdjointSeed {
        phi0: start.velocity.iter().map(|v| -v).collect(),
        phi1: start.position,
    })
}

/// Applies the controllability Gramian to a seed.
///
/// The output is a dual element: `<Lambda a, b> = (phi_a, phi_b)_{L^2(q_T)}`.
pub fn gramian_apply(
    setup: &DiscreteSetup,
    potential: &SpaceTimeField,
    seed: &AdjointSeed,
) -> Result<AdjointSeed> {
    let phi = adjoint_state(setup, potential, seed)?;
    backward_trace(setup, potential, &phi.masked(setup))
}

/// Right-hand side of the Gramian system for null controllability.
pub fn null_control_rhs(problem: &LinearControlProblem<'_>) -> Result<AdjointSeed> {
    let trace = backward_trace(problem.setup, problem.potential, problem.source)?;
    // trace = (-zeta_t(0), zeta(0)); rhs = (zeta_t(0) - z1, z0 - zeta(0))
    let z = problem.init;
    Ok(AdjointSeed {
        phi0: trace
            .phi0
            .iter()
            .zip(&z.velocity)
            .map(|(a, v)| -a - v)
            .collect(),
        phi1: z
            .position
            .iter()
            .zip(&trace.phi1)
            .map(|(p, a)| p - a)
            .collect(),
    })
}

/// Minimal-norm control driving `problem.init` to rest at `t = T`.
pub fn solve_null_control(problem: &LinearControlProblem<'_>, opts: &CgOptions) -> Result<HumSolution> {
    let setup = problem.setup;
    if setup.horizon() <= setup.omega().critical_time() {
        return Err(Error::Geometry("horizon below the controllability time".into()));
    }
    if !problem.target.is_zero() {
        return Err(Error::validation(
            "target",
            "null control requires a zero target; use `steer`",
        ));
    }
    let rhs = null_control_rhs(problem)?;
    let outcome = gramian_cg(setup, problem.potential, &rhs, opts)?;
    finish(problem, outcome, opts.tol)
}

fn finish(problem: &LinearControlProblem<'_>, outcome: CgOutcome, tol: f64) -> Result<HumSolution> {
    let setup = problem.setup;
    let phi = adjoint_state(setup, problem.potential, &outcome.seed)?;
    let control = phi.restricted_to_window(setup);
    let trajectory = replay(setup, problem.potential, problem.source, &control, problem.init)?;
    let full_source = driven_source(setup, problem.source, &control);
    let reached = final_slice(setup, &trajectory, problem.potential, &full_source);
    Ok(HumSolution {
        final_deviation: v_norm(setup, &reached.sub(problem.target)),
        tol_deviation: tol_deviation(setup, tol, problem.init, problem.target),
        control,
        trajectory,
        seed: outcome.seed,
        cg_iters: outcome.iterations,
        cg_residual: outcome.relative_residual,
    })
}

/// `B + m u`: the source seen by the state equation.
pub fn driven_source(setup: &DiscreteSetup, source: &SpaceTimeField, control: &SpaceTimeField) -> SpaceTimeField {
    let mut s = control.masked(setup);
    s.axpy(1.0, source);
    s
}

/// Forward solve of the controlled linear equation.
pub fn replay(
    setup: &DiscreteSetup,
    potential: &SpaceTimeField,
    source: &SpaceTimeField,
    control: &SpaceTimeField,
    init: &StateSlice,
) -> Result<SpaceTimeField> {
    wave_forward(setup, potential, &driven_source(setup, source, control), init)
}

/// Minimal-norm control steering `init` to `target`.
///
/// Reduces to null control: with `yt` the uncontrolled solution ending at
/// `target`, the deficit `w = y - yt` starts from `init - yt(0)` and has no
/// source.
pub fn steer(
    setup: &DiscreteSetup,
    potential: &SpaceTimeField,
    source: &SpaceTimeField,
    init: &StateSlice,
    target: &StateSlice,
    opts: &CgOptions,
) -> Result<HumSolution> {
    let free = wave_backward(setup, potential, source, target)?;
    let free_start = initial_slice(setup, &free, potential, source);
    let deficit = init.sub(&free_start);
    let zero_source = SpaceTimeField::zeros(setup);
    let zero_target = StateSlice::zeros(setup.nx());
    let reduced = LinearControlProblem {
        setup,
        potential,
        source: &zero_source,
        init: &deficit,
        target: &zero_target,
    };
    let w = solve_null_control(&reduced, opts)?;

    let mut trajectory = w.trajectory;
    trajectory.axpy(1.0, &free);
    let check = replay(setup, potential, source, &w.control, init)?;
    let reached = final_slice(setup, &check, potential, &driven_source(setup, source, &w.control));
    Ok(HumSolution {
        final_deviation: v_norm(setup, &reached.sub(target)),
        tol_deviation: tol_deviation(setup, opts.tol, init, target),
        control: w.control,
        trajectory,
        seed: w.seed,
        cg_iters: w.cg_iters,
        cg_residual: w.cg_residual,
    })
}

#[cfg(test)]
mod tests;
