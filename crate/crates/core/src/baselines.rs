//! Iterations the least-squares descent is compared against: Picard
//! (fixed point of the control map `K`), undamped Newton, and the variant
//! that takes full controlled pairs of the linearized equation. Also a
//! sampling probe of the Lipschitz constant of `K`.
//!
//! Divergence is reported, never damped.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hum::{steer, CgOptions};
use crate::lsq::{self, ControlledPair, SolverConfig, StepOutcome, StepRule, BLOW_UP_GUARD};
use crate::nonlinearity::Nonlinearity;
use crate::wave::{DiscreteSetup, SpaceTimeField, StateSlice};

/// Sine modes in space of the random probe fields.
pub const PROBE_SPACE_MODES: usize = 8;
/// Cosine modes in time of the random probe fields.
pub const PROBE_TIME_MODES: usize = 4;

/// An increment this many times the smallest one seen so far counts as
/// divergence.
pub const DIVERGENCE_RATIO: f64 = 1e3;

/// Source `A(xi) p - g(p)` with `p = xi` inside and `p` pinned to the
/// endpoint positions on the first and last levels, so that the linear
/// trajectory is admissible for `g`. `interior` overrides the value on the
/// inner levels.
fn linearization_source(
    setup: &DiscreteSetup,
    nl: &Nonlinearity,
    potential: &SpaceTimeField,
    xi: &SpaceTimeField,
    init: &StateSlice,
    target: &StateSlice,
    interior: Option<f64>,
) -> SpaceTimeField {
    let nt = setup.nt();
    let mut b = match interior {
        Some(v) => SpaceTimeField::constant(setup, v),
        None => potential.zip_map(xi, |a, p| a * p - nl.g(p)),
    };
    for (n, pinned) in [(0, &init.position), (nt, &target.position)] {
        let a = potential.level(n).to_vec();
        for ((o, &p), a) in b.level_mut(n).iter_mut().zip(pinned).zip(a) {
            *o = a * p - nl.g(p);
        }
    }
    b
}

/// Result of one application of a linear control map.
#[derive(Debug, Clone)]
pub struct BaselineStep {
    pub pair: ControlledPair,
    pub cg_iters: usize,
    pub cg_residual: f64,
    pub deviation: f64,
    pub tol_deviation: f64,
}

/// `K(xi)`: minimal-norm controlled pair of the equation with potential
/// `g_hat(xi)` and source `-g(0)`.
pub fn picard_step(
    setup: &DiscreteSetup,
    nl: &Nonlinearity,
    xi: &SpaceTimeField,
    init: &StateSlice,
    target: &StateSlice,
    cg: &CgOptions,
) -> Result<BaselineStep> {
    let potential = nl.eval_hatg(xi);
    let source = linearization_source(setup, nl, &potential, xi, init, target, Some(-nl.g0()));
    controlled(setup, &potential, &source, init, target, cg)
}

/// Minimal-norm controlled pair for the potential `g'(y_k)` and source
/// `g'(y_k) y_k - g(y_k)`.
pub fn variant_step(
    setup: &DiscreteSetup,
    nl: &Nonlinearity,
    y_prev: &SpaceTimeField,
    init: &StateSlice,
    target: &StateSlice,
    cg: &CgOptions,
) -> Result<BaselineStep> {
    let potential = nl.eval_gprime(y_prev);
    let source = linearization_source(setup, nl, &potential, y_prev, init, target, None);
    controlled(setup, &potential, &source, init, target, cg)
}

fn controlled(
    setup: &DiscreteSetup,
    potential: &SpaceTimeField,
    source: &SpaceTimeField,
    init: &StateSlice,
    target: &StateSlice,
    cg: &CgOptions,
) -> Result<BaselineStep> {
    let sol = steer(setup, potential, source, init, target, cg)?;
    Ok(BaselineStep {
        pair: ControlledPair {
            y: sol.trajectory,
            f: sol.control,
            init: init.clone(),
            target: target.clone(),
        },
        cg_iters: sol.cg_iters,
        cg_residual: sol.cg_residual,
        deviation: sol.final_deviation,
        tol_deviation: sol.tol_deviation,
    })
}

/// The least-squares update with the step length forced to 1.
pub fn newton_step(
    setup: &DiscreteSetup,
    nl: &Nonlinearity,
    pair: &ControlledPair,
    cfg: &SolverConfig,
) -> Result<StepOutcome> {
    let r = lsq::residual(setup, nl, pair);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    lsq::step(setup, nl, pair, &r, cfg, StepRule::Fixed(1.0), &mut rng)
}

/// Undamped Newton from the linear controlled pair. No monotonicity is
/// enforced; the log shows whatever `E` does.
pub fn newton_iterate(
    setup: &DiscreteSetup,
    nl: &Nonlinearity,
    init: &StateSlice,
    target: &StateSlice,
    cfg: &SolverConfig,
) -> Result<lsq::LsqRun> {
    cfg.validate()?;
    let start = lsq::make_initial_pair(setup, nl, init, target, cfg)?;
    Ok(lsq::iterate_from(setup, nl, start, cfg, StepRule::Fixed(1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixedPointMethod {
    Picard,
    Variant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineRecord {
    pub k: usize,
    /// Least-squares error of `y_k`; `None` for the zero start `y_0`.
    pub e: Option<f64>,
    /// `|y_{k+1} - y_k|_inf`; `None` on the terminal record.
    pub increment: Option<f64>,
    pub y_inf: f64,
    pub cg_iters: usize,
    pub cg_res: f64,
}

#[derive(Debug)]
pub struct BaselineRun {
    pub pair: Option<ControlledPair>,
    pub records: Vec<BaselineRecord>,
    pub failure: Option<Error>,
}

impl BaselineRun {
    pub fn increments(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.increment).collect()
    }
}

/// Iterates `y_{k+1} = K(y_k)` (Picard) or the variant map from `y_0 = 0`
/// until the increment drops below `tol_increment`.
///
/// Stops with [`Error::Divergence`] when `|y|_inf` passes the blow-up guard or
/// an increment exceeds [`DIVERGENCE_RATIO`] times the smallest one so far,
/// and with [`Error::MaxIter`] when `max_iters` maps are spent.
#[allow(clippy::too_many_arguments)]
pub fn fixed_point_iterate(
    method: FixedPointMethod,
    setup: &DiscreteSetup,
    nl: &Nonlinearity,
    init: &StateSlice,
    target: &StateSlice,
    cg: &CgOptions,
    max_iters: usize,
    tol_increment: f64,
    mut observe: impl FnMut(usize, &ControlledPair),
) -> BaselineRun {
    let mut xi = SpaceTimeField::zeros(setup);
    let mut records = Vec::new();
    let mut pair: Option<ControlledPair> = None;
    let mut smallest = f64::INFINITY;
    let mut k = 0;
    let failure = loop {
        let out = match method {
            FixedPointMethod::Picard => picard_step(setup, nl, &xi, init, target, cg),
            FixedPointMethod::Variant => variant_step(setup, nl, &xi, init, target, cg),
        };
        let out = match out {
            Ok(o) => o,
            Err(Error::Stability { .. }) => {
                break Some(Error::Divergence {
                    k,
                    reason: "linear solve blew up".into(),
                })
            }
            Err(e) => break Some(e),
        };
        let mut diff = out.pair.y.clone();
        diff.axpy(-1.0, &xi);
        let increment = diff.max_abs();
        records.push(BaselineRecord {
            k,
            e: pair.as_ref().map(|p| lsq::error_functional(setup, nl, p)),
            increment: Some(increment),
            y_inf: xi.max_abs(),
            cg_iters: out.cg_iters,
            cg_res: out.cg_residual,
        });
        observe(k + 1, &out.pair);
        let y_inf = out.pair.y_inf();
        xi = out.pair.y.clone();
        pair = Some(out.pair);
        smallest = smallest.min(increment);
        k += 1;
        if !increment.is_finite() || y_inf > BLOW_UP_GUARD {
            break Some(Error::Divergence {
                k,
                reason: format!("|y|_inf = {y_inf:e}"),
            });
        }
        if increment <= tol_increment {
            break None;
        }
        if increment > DIVERGENCE_RATIO * smallest {
            break Some(Error::Divergence {
                k,
                reason: format!("increment {increment:e} against a smallest of {smallest:e}"),
            });
        }
        if k >= max_iters {
            break Some(Error::MaxIter {
                max_iters,
                last_value: increment,
            });
        }
    };
    if let Some(p) = &pair {
        records.push(BaselineRecord {
            k,
            e: Some(lsq::error_functional(setup, nl, p)),
            increment: None,
            y_inf: p.y_inf(),
            cg_iters: 0,
            cg_res: 0.0,
        });
    }
    BaselineRun {
        pair,
        records,
        failure,
    }
}

pub fn picard_iterate(
    setup: &DiscreteSetup,
    nl: &Nonlinearity,
    init: &StateSlice,
    target: &StateSlice,
    cg: &CgOptions,
    max_iters: usize,
    tol_increment: f64,
) -> BaselineRun {
    fixed_point_iterate(
        FixedPointMethod::Picard,
        setup,
        nl,
        init,
        target,
        cg,
        max_iters,
        tol_increment,
        |_, _| {},
    )
}

/// Band-limited random field with `|xi|_inf = radius`.
pub fn probe_field(setup: &DiscreteSetup, rng: &mut ChaCha8Rng, radius: f64) -> SpaceTimeField {
    let mut coeffs = [[0.0; PROBE_TIME_MODES]; PROBE_SPACE_MODES];
    for row in coeffs.iter_mut() {
        for c in row.iter_mut() {
            *c = rng.gen_range(-1.0..1.0);
        }
    }
    let t_max = setup.horizon();
    let field = SpaceTimeField::from_fn(setup, |x, t| {
        let mut v = 0.0;
        for (j, row) in coeffs.iter().enumerate() {
            let sx = ((j + 1) as f64 * std::f64::consts::PI * x).sin();
            for (k, c) in row.iter().enumerate() {
                v += c * sx * (k as f64 * std::f64::consts::PI * t / t_max).cos();
            }
        }
        v
    });
    let peak = field.max_abs();
    if peak == 0.0 {
        return field;
    }
    field.map(|v| v * radius / peak)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionTrial {
    /// `|K(xi2) - K(xi1)|_inf / |xi2 - xi1|_inf`
    pub ratio: f64,
    /// `|g_hat(xi2) - g_hat(xi1)|_inf`
    pub potential_gap: f64,
    /// `|K(xi2) - K(xi1)|_inf`
    pub state_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    pub trials: Vec<ContractionTrial>,
    pub rho_max: f64,
    /// Least-squares slope through the origin of `state_gap` on `potential_gap`.
    pub gap_slope: f64,
    /// Uncentered coefficient of determination of that fit.
    pub gap_r2: f64,
}

/// Samples pairs of band-limited fields in the `L^inf` ball of radius
/// `m_ball` and measures how much `K` contracts their distance.
///
/// Trial `i` draws from its own stream of the seeded generator, so results do
/// not depend on scheduling.
#[allow(clippy::too_many_arguments)]
pub fn contraction_probe(
    setup: &DiscreteSetup,
    nl: &Nonlinearity,
    init: &StateSlice,
    target: &StateSlice,
    m_ball: f64,
    trials: usize,
    seed: u64,
    cg: &CgOptions,
) -> Result<ContractionReport> {
    if !(m_ball > 0.0 && m_ball.is_finite()) {
        return Err(Error::validation("probe.m_ball", "must be positive"));
    }
    let results: Vec<Result<ContractionTrial>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let r1 = m_ball * rng.gen_range(0.0..=1.0);
            let r2 = m_ball * rng.gen_range(0.0..=1.0);
            let xi1 = probe_field(setup, &mut rng, r1);
            let xi2 = probe_field(setup, &mut rng, r2);
            let k1 = picard_step(setup, nl, &xi1, init, target, cg)?;
            let k2 = picard_step(setup, nl, &xi2, init, target, cg)?;
            let mut dk = k2.pair.y.clone();
            dk.axpy(-1.0, &k1.pair.y);
            let mut dxi = xi2.clone();
            dxi.axpy(-1.0, &xi1);
            let mut dg = nl.eval_hatg(&xi2);
            dg.axpy(-1.0, &nl.eval_hatg(&xi1));
            let state_gap = dk.max_abs();
            let denom = dxi.max_abs();
            Ok(ContractionTrial {
                ratio: if denom > 0.0 { state_gap / denom } else { 0.0 },
                potential_gap: dg.max_abs(),
                state_gap,
            })
        })
        .collect();
    let trials = results.into_iter().collect::<Result<Vec<_>>>()?;
    let rho_max = trials.iter().map(|t| t.ratio).fold(0.0, f64::max);
    let sxx: f64 = trials.iter().map(|t| t.potential_gap * t.potential_gap).sum();
    let sxy: f64 = trials.iter().map(|t| t.potential_gap * t.state_gap).sum();
    let syy: f64 = trials.iter().map(|t| t.state_gap * t.state_gap).sum();
    let gap_slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let ss_res: f64 = trials
        .iter()
        .map(|t| (t.state_gap - gap_slope * t.potential_gap).powi(2))
        .sum();
    let gap_r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(ContractionReport {
        trials,
        rho_max,
        gap_slope,
        gap_r2,
    })
}
