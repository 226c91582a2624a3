use super::{ControlledPair, DescentPair};
use crate::nonlinearity::Nonlinearity;
use crate::wave::{DiscreteSetup, SpaceTimeField};

/// Points of the coarse scan over `[0, m]`.
pub const SCAN_POINTS: usize = 17;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearch {
    pub lambda: f64,
    /// Objective at `lambda`, from the expansion.
    pub value: f64,
}

/// `E((y,f) - lambda (Y,F)) = 1/2 |r - lambda d + l(lambda)|^2`, where
/// `l(lambda) = g(y - lambda Y) - g(y) + lambda g'(y) Y` and `d` is the
/// linearized residual along the direction. Only pointwise evaluations of `g`.
pub fn expansion_objective(
    setup: &DiscreteSetup,
    nl: &Nonlinearity,
    y: &SpaceTimeField,
    dir_y: &SpaceTimeField,
    r: &SpaceTimeField,
    d: &SpaceTimeField,
    lambda: f64,
) -> f64 {
    let dx = setup.dx();
    let mut total = 0.0;
    for n in 0..=setup.nt() {
        let (yl, yyl, rl, dl) = (y.level(n), dir_y.level(n), r.level(n), d.level(n));
        let mut s = 0.0;
        for i in 0..yl.len() {
            let ell = nl.g(yl[i] - lambda * yyl[i]) - nl.g(yl[i]) + lambda * nl.gprime(yl[i]) * yyl[i];
            let v = rl[i] - lambda * dl[i] + ell;
            s += v * v;
        }
        total += setup.time_weight(n) * dx * s;
    }
    0.5 * total
}

/// Minimizes the expansion over `[0, m]`: a coarse scan, golden-section
/// refinement around the best scan point down to width `tol`, and a direct
/// probe of `lambda = 1`, which wins ties.
#[allow(clippy::too_many_arguments)]
pub fn line_search(
    nl: &Nonlinearity,
    pair: &ControlledPair,
    dir: &DescentPair,
    r: &SpaceTimeField,
    d: &SpaceTimeField,
    setup: &DiscreteSetup,
    m: f64,
    tol: f64,
) -> LineSearch {
    let obj = |l: f64| expansion_objective(setup, nl, &pair.y, &dir.y, r, d, l);
    minimize_on_interval(obj, m, tol)
}

pub(crate) fn minimize_on_interval(obj: impl Fn(f64) -> f64, m: f64, tol: f64) -> LineSearch {
    let h = m / (SCAN_POINTS - 1) as f64;
    let scan: Vec<f64> = (0..SCAN_POINTS).map(|j| obj(j as f64 * h)).collect();
    let mut j_best = 0;
    for (j, v) in scan.iter().enumerate() {
        if *v < scan[j_best] {
            j_best = j;
        }
    }
    let mut best = LineSearch {
        lambda: j_best as f64 * h,
        value: scan[j_best],
    };

    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = (j_best as f64 - 1.0).max(0.0) * h;
    let mut b = ((j_best + 1) as f64 * h).min(m);
    let mut c = b - r * (b - a);
    let mut e = a + r * (b - a);
    let (mut fc, mut fe) = (obj(c), obj(e));
    while b - a > tol {
        if fc < fe {
            b = e;
            e = c;
            fe = fc;
            c = b - r * (b - a);
            fc = obj(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + r * (b - a);
            fe = obj(e);
        }
    }
    for (l, v) in [(c, fc), (e, fe)] {
        if v < best.value {
            best = LineSearch { lambda: l, value: v };
        }
    }
    if m >= 1.0 {
        let one = obj(1.0);
        if one <= best.value {
            best = LineSearch {
                lambda: 1.0,
                value: one,
            };
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_picks_one() {
        let out = minimize_on_interval(|l| (1.0 - l) * (1.0 - l), 2.0, 1e-4);
        assert_eq!(out.lambda, 1.0);
        assert_eq!(out.value, 0.0);
    }

    #[test]
    fn interior_minimum_is_bracketed() {
        let out = minimize_on_interval(|l| (l - 0.3141).powi(2) + 1.0, 2.0, 1e-6);
        assert!((out.lambda - 0.3141).abs() < 1e-5);
    }

    #[test]
    fn scan_escapes_local_minimum() {
        // shallow well near 0.4, deep one near 1.7
        let f = |l: f64| -0.2 * (-(l - 0.4f64).powi(2) / 0.01).exp() - (-(l - 1.7f64).powi(2) / 0.01).exp();
        let out = minimize_on_interval(f, 2.0, 1e-6);
        assert!((out.lambda - 1.7).abs() < 1e-4, "{out:?}");
    }

    #[test]
    fn minimum_at_the_cap() {
        let out = minimize_on_interval(|l| -l, 2.0, 1e-6);
        assert!((out.lambda - 2.0).abs() < 1e-6);
    }
}
