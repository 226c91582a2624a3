//! Post-hoc diagnostics of a descent run: observed convergence order, an
//! empirical observability constant, and the per-step decay bound.

use super::IterationRecord;
use crate::nonlinearity::{rate_constant, Nonlinearity};

/// Lowest `E` regarded as above roundoff when estimating orders.
pub const ORDER_FLOOR: f64 = 1e-24;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderEstimate {
    /// Index of the middle iterate.
    pub k: usize,
    pub p: f64,
}

/// `p_k = ln(e_{k+1}/e_k) / ln(e_k/e_{k-1})` with `e_k = sqrt(E_k)`, over
/// consecutive triples that all stay above `10^3` times the fixed-grid floor
/// `max(1e-24, final E)`.
pub fn convergence_order(energies: &[f64]) -> Vec<OrderEstimate> {
    let Some(&last) = energies.last() else {
        return Vec::new();
    };
    let floor = ORDER_FLOOR.max(last);
    let e: Vec<f64> = energies.iter().map(|v| v.sqrt()).collect();
    (1..e.len().saturating_sub(1))
        .filter(|&k| energies[k - 1..=k + 1].iter().all(|&v| v > 1e3 * floor))
        .filter_map(|k| {
            let denom = (e[k] / e[k - 1]).ln();
            if denom == 0.0 {
                return None;
            }
            Some(OrderEstimate {
                k,
                p: (e[k + 1] / e[k]).ln() / denom,
            })
        })
        .collect()
}

/// Smallest `C > 0` with `C e^{C sqrt(G)} >= q` (bisection; `h` is increasing).
fn invert_observability(q: f64, g: f64) -> f64 {
    if !(q > 0.0) {
        return 0.0;
    }
    let h = |c: f64| c * (c * g.sqrt()).exp();
    let (mut lo, mut hi) = (0.0, q.max(1.0));
    while h(hi) < q {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) >= q {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    hi
}

/// Smallest constant `C` such that, on every step of the run,
/// `|Y|_inf`, the `H` norm of `(Y, F)` and `|Y|_{L^inf(V)} + |F|` are all at
/// most `C e^{C sqrt(|g'(y_k)|_inf)} sqrt(E_k)`, and `sqrt(2) C` dominates the
/// shape factor `| |Y|^{1+s} |_2 / |Y|_inf^{1+s}`.
pub fn calibrate_c_emp(records: &[IterationRecord]) -> f64 {
    let mut c = 0.0f64;
    for rec in records {
        let Some(step) = &rec.step else { continue };
        if !(rec.e > 0.0) {
            continue;
        }
        let root = rec.e.sqrt();
        let q = step.dir_y_inf.max(step.dir_norm).max(step.dir_state_norm) / root;
        c = c
            .max(invert_observability(q, step.gprime_inf))
            .max(step.dir_shape / 2f64.sqrt());
    }
    c
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayRow {
    pub k: usize,
    pub e: f64,
    pub e_next: f64,
    /// `min_{lambda in [0,m]} (|1-lambda| + lambda^{1+s} K E^{s/2})^2 E`
    pub bound: f64,
    pub holds: bool,
    pub lambda_measured: f64,
    /// Minimizer of the bound.
    pub lambda_predicted: f64,
    /// `(1+s)^{1/s} c^{1/s} sqrt(E_k) < 1`: the rate-constant test for a unit step.
    pub unit_step_predicted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub c_emp: f64,
    /// Rate constant with the empirical `C` and the observed `M`.
    pub c: f64,
    pub m_obs: f64,
    pub rows: Vec<DecayRow>,
}

impl DecayReport {
    pub fn all_hold(&self) -> bool {
        self.rows.iter().all(|r| r.holds)
    }
}

/// Minimizer over `[0, m]` of `p(lambda) = |1 - lambda| + a lambda^{1+s}`.
fn bound_minimizer(a: f64, s: f64, m: f64) -> f64 {
    if a <= 0.0 {
        return 1.0f64.min(m);
    }
    if s <= 0.0 {
        return if a < 1.0 { 1.0f64.min(m) } else { 0.0 };
    }
    ((1.0 + s) * a).powf(-1.0 / s).min(1.0).min(m)
}

/// Checks `E_{k+1} <= min_lambda (|1-lambda| + lambda^{1+s} K_k E_k^{s/2})^2 E_k`
/// on every step, with `K_k = C [g']_s (C e^{C sqrt(|g'(y_k)|_inf)})^{1+s}`.
///
/// `floor` is an absolute allowance for roundoff in the measured `E_{k+1}`.
pub fn decay_bound_check(
    records: &[IterationRecord],
    nl: &Nonlinearity,
    c_emp: f64,
    m: f64,
    floor: f64,
) -> DecayReport {
    let s = nl.s();
    let m_obs = records.iter().map(|r| r.y_inf).fold(0.0, f64::max);
    let c = rate_constant(nl, c_emp, m_obs);
    let rows = records
        .iter()
        .filter_map(|rec| {
            let step = rec.step.as_ref()?;
            let obs = c_emp * (c_emp * step.gprime_inf.sqrt()).exp();
            let k_const = c_emp * nl.holder_seminorm() * obs.powf(1.0 + s);
            let a = k_const * rec.e.powf(0.5 * s);
            let lambda = bound_minimizer(a, s, m);
            let p = (1.0 - lambda).abs() + a * lambda.powf(1.0 + s);
            let bound = p * p * rec.e;
            let unit = if s > 0.0 {
                (1.0 + s).powf(1.0 / s) * c.powf(1.0 / s) * rec.e.sqrt() < 1.0
            } else {
                c < 1.0
            };
            Some(DecayRow {
                k: rec.k,
                e: rec.e,
                e_next: step.e_next,
                bound,
                holds: step.e_next <= bound * (1.0 + 1e-9) + floor,
                lambda_measured: step.lambda,
                lambda_predicted: lambda,
                unit_step_predicted: unit,
            })
        })
        .collect();
    DecayReport {
        c_emp,
        c,
        m_obs,
        rows,
    }
}
