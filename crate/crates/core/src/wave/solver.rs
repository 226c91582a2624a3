//! Explicit leapfrog for `y_tt - y_xx + R(y) = S` with homogeneous Dirichlet
//! conditions, plus the discrete readouts that go with it.
//!
//! The scheme at interior levels is
//! `y^{n+1} = 2 y^n - y^{n-1} + dt^2 (Lap y^n - R^n + S^n)`.
//! The first step is the second-order Taylor start
//! `y^1 = y^0 + dt v^0 + dt^2/2 (Lap y^0 - R^0 + S^0)`, and the velocity
//! reported at `t = T` inverts the mirrored relation at the last level. With
//! those endpoint conventions the scheme is exactly reversible and the
//! summation-by-parts identity behind the HUM duality holds on the grid.

use super::field::{SpaceTimeField, StateSlice};
use super::grid::DiscreteSetup;
use crate::error::{Error, Result};

/// Magnitude above which a trajectory is declared unstable.
pub const BLOW_UP_LIMIT: f64 = 1e12;

/// `out = Lap_h u` with zero Dirichlet values outside the interior nodes.
pub fn apply_laplacian(u: &[f64], dx: f64, out: &mut [f64]) {
    let n = u.len();
    let inv = 1.0 / (dx * dx);
    for i in 0..n {
        let left = if i > 0 { u[i - 1] } else { 0.0 };
        let right = if i + 1 < n { u[i + 1] } else { 0.0 };
        out[i] = (left - 2.0 * u[i] + right) * inv;
    }
}

pub fn laplacian(u: &[f64], dx: f64) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    apply_laplacian(u, dx, &mut out);
    out
}

/// Solves `-Lap_h z = w` (Thomas algorithm on the constant SPD tridiagonal).
pub fn neg_laplacian_solve(setup: &DiscreteSetup, w: &[f64]) -> Vec<f64> {
    neg_laplacian_solve_dx(w, setup.dx())
}

pub(crate) fn neg_laplacian_solve_dx(w: &[f64], dx: f64) -> Vec<f64> {
    let n = w.len();
    if n == 0 {
        return Vec::new();
    }
    let h2 = dx * dx;
    // matrix (1/h^2) tridiag(-1, 2, -1); scale the rhs instead
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = 2.0;
    c[0] = -1.0 / denom;
    d[0] = w[0] * h2 / denom;
    for i in 1..n {
        denom = 2.0 + c[i - 1];
        c[i] = -1.0 / denom;
        d[i] = (w[i] * h2 + d[i - 1]) / denom;
    }
    let mut z = vec![0.0; n];
    z[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        z[i] = d[i] - c[i] * z[i + 1];
    }
    z
}

fn guard(level: usize, values: &[f64]) -> Result<()> {
    for &v in values {
        if !v.is_finite() || v.abs() > BLOW_UP_LIMIT {
            return Err(Error::Stability {
                level,
                magnitude: v.abs(),
            });
        }
    }
    Ok(())
}

/// Generic forward march. `reaction(n, y_n, out)` writes `R^n` given `y^n`.
pub(crate) fn march<F>(
    setup: &DiscreteSetup,
    init: &StateSlice,
    source: &SpaceTimeField,
    mut reaction: F,
) -> Result<SpaceTimeField>
where
    F: FnMut(usize, &[f64], &mut [f64]),
{
    let nx = setup.nx();
    let nt = setup.nt();
    let dt = setup.dt();
    let dt2 = dt * dt;
    debug_assert!(source.matches(setup));
    debug_assert_eq!(init.nx(), nx);

    let mut y = SpaceTimeField::zeros(setup);
    let mut lap = vec![0.0; nx];
    let mut react = vec![0.0; nx];

    y.level_mut(0).copy_from_slice(&init.position);
    guard(0, y.level(0))?;

    apply_laplacian(y.level(0), setup.dx(), &mut lap);
    reaction(0, y.level(0), &mut react);
    let s0 = source.level(0);
    let mut next = vec![0.0; nx];
    for i in 0..nx {
        next[i] = init.position[i]
            + dt * init.velocity[i]
            + 0.5 * dt2 * (lap[i] - react[i] + s0[i]);
    }
    y.level_mut(1).copy_from_slice(&next);
    guard(1, &next)?;

    for n in 1..nt {
        {
            let cur = y.level(n);
            apply_laplacian(cur, setup.dx(), &mut lap);
            reaction(n, cur, &mut react);
            let prev = y.level(n - 1);
            let s = source.level(n);
            for i in 0..nx {
                next[i] = 2.0 * cur[i] - prev[i] + dt2 * (lap[i] - react[i] + s[i]);
            }
        }
        guard(n + 1, &next)?;
        y.level_mut(n + 1).copy_from_slice(&next);
    }
    Ok(y)
}

/// Solves `y_tt - y_xx + A y = S` forward from `init`.
pub fn wave_forward(
    setup: &DiscreteSetup,
    potential: &SpaceTimeField,
    source: &SpaceTimeField,
    init: &StateSlice,
) -> Result<SpaceTimeField> {
    march(setup, init, source, |n, y, out| {
        for ((o, &a), &v) in out.iter_mut().zip(potential.level(n)).zip(y) {
            *o = a * v;
        }
    })
}

/// Solves `y_tt - y_xx + A y = S` backward from the state at `t = T`.
pub fn wave_backward(
    setup: &DiscreteSetup,
    potential: &SpaceTimeField,
    source: &SpaceTimeField,
    final_state: &StateSlice,
) -> Result<SpaceTimeField> {
    let flipped = StateSlice {
        position: final_state.position.clone(),
        velocity: final_state.velocity.iter().map(|v| -v).collect(),
    };
    let y = wave_forward(
        setup,
        &potential.time_reversed(),
        &source.time_reversed(),
        &flipped,
    )?;
    Ok(y.time_reversed())
}

/// Solves `y_tt - y_xx + g(y) = S` forward from `init`.
pub fn semilinear_forward(
    setup: &DiscreteSetup,
    g: impl Fn(f64) -> f64,
    source: &SpaceTimeField,
    init: &StateSlice,
) -> Result<SpaceTimeField> {
    march(setup, init, source, |_, y, out| {
        for (o, &v) in out.iter_mut().zip(y) {
            *o = g(v);
        }
    })
}

/// Velocity at `t = 0` consistent with the Taylor start, for reaction `R^0`
/// and source `S^0`.
pub fn start_velocity(
    setup: &DiscreteSetup,
    y: &SpaceTimeField,
    reaction0: &[f64],
    source0: &[f64],
) -> Vec<f64> {
    let dt = setup.dt();
    let lap = laplacian(y.level(0), setup.dx());
    (0..setup.nx())
        .map(|i| {
            (y.get(1, i) - y.get(0, i)) / dt - 0.5 * dt * (lap[i] - reaction0[i] + source0[i])
        })
        .collect()
}

/// Velocity at `t = T`: the time-mirrored Taylor relation at the last level.
pub fn end_velocity(
    setup: &DiscreteSetup,
    y: &SpaceTimeField,
    reaction_end: &[f64],
    source_end: &[f64],
) -> Vec<f64> {
    let dt = setup.dt();
    let nt = setup.nt();
    let lap = laplacian(y.level(nt), setup.dx());
    (0..setup.nx())
        .map(|i| {
            (y.get(nt, i) - y.get(nt - 1, i)) / dt
                + 0.5 * dt * (lap[i] - reaction_end[i] + source_end[i])
        })
        .collect()
}

fn product(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

/// Initial state of a trajectory of the linear equation with potential `A`.
pub fn initial_slice(
    setup: &DiscreteSetup,
    y: &SpaceTimeField,
    potential: &SpaceTimeField,
    source: &SpaceTimeField,
) -> StateSlice {
    let react = product(potential.level(0), y.level(0));
    StateSlice {
        position: y.level(0).to_vec(),
        velocity: start_velocity(setup, y, &react, source.level(0)),
    }
}

/// Final state of a trajectory of the linear equation with potential `A`.
pub fn final_slice(
    setup: &DiscreteSetup,
    y: &SpaceTimeField,
    potential: &SpaceTimeField,
    source: &SpaceTimeField,
) -> StateSlice {
    let nt = setup.nt();
    let react = product(potential.level(nt), y.level(nt));
    StateSlice {
        position: y.level(nt).to_vec(),
        velocity: end_velocity(setup, y, &react, source.level(nt)),
    }
}

/// Discrete `y_tt - y_xx` on every level, with the endpoint rows written in
/// terms of the prescribed velocities `v_start`, `v_end`.
///
/// For a trajectory produced by [`march`] with reaction `R` and source `S`
/// whose endpoint velocities are `v_start`, `v_end`, this returns `S - R`
/// on every level.
pub fn wave_operator(
    setup: &DiscreteSetup,
    y: &SpaceTimeField,
    v_start: &[f64],
    v_end: &[f64],
) -> SpaceTimeField {
    let nx = setup.nx();
    let nt = setup.nt();
    let dt = setup.dt();
    let inv_dt2 = 1.0 / (dt * dt);
    let mut out = SpaceTimeField::zeros(setup);
    let mut lap = vec![0.0; nx];

    apply_laplacian(y.level(0), setup.dx(), &mut lap);
    {
        let row = out.level_mut(0);
        for i in 0..nx {
            row[i] = 2.0 / dt * ((y.get(1, i) - y.get(0, i)) / dt - v_start[i]) - lap[i];
        }
    }
    for n in 1..nt {
        apply_laplacian(y.level(n), setup.dx(), &mut lap);
        let (prev, cur, next) = (y.level(n - 1), y.level(n), y.level(n + 1));
        let row = out.level_mut(n);
        for i in 0..nx {
            row[i] = (next[i] - 2.0 * cur[i] + prev[i]) * inv_dt2 - lap[i];
        }
    }
    apply_laplacian(y.level(nt), setup.dx(), &mut lap);
    {
        let row = out.level_mut(nt);
        for i in 0..nx {
            row[i] = 2.0 / dt * ((y.get(nt - 1, i) - y.get(nt, i)) / dt + v_end[i]) - lap[i];
        }
    }
    out
}

/// Kinematic velocity readout: centered difference at interior levels,
/// one-sided second order at the two ends.
pub fn readout_velocity(setup: &DiscreteSetup, y: &SpaceTimeField, n: usize) -> Vec<f64> {
    let nt = setup.nt();
    let dt = setup.dt();
    let nx = setup.nx();
    (0..nx)
        .map(|i| {
            if nt < 2 {
                (y.get(nt, i) - y.get(0, i)) / dt
            } else if n == 0 {
                (-3.0 * y.get(0, i) + 4.0 * y.get(1, i) - y.get(2, i)) / (2.0 * dt)
            } else if n == nt {
                (3.0 * y.get(nt, i) - 4.0 * y.get(nt - 1, i) + y.get(nt - 2, i)) / (2.0 * dt)
            } else {
                (y.get(n + 1, i) - y.get(n - 1, i)) / (2.0 * dt)
            }
        })
        .collect()
}

/// `sum_edges dx (D+ a)(D+ b)` with zero boundary values: the discrete
/// `H^1_0` inner product.
pub fn gradient_product(a: &[f64], b: &[f64], dx: f64) -> f64 {
    let n = a.len();
    let mut sum = 0.0;
    for j in 0..=n {
        let a_hi = if j < n { a[j] } else { 0.0 };
        let a_lo = if j > 0 { a[j - 1] } else { 0.0 };
        let b_hi = if j < n { b[j] } else { 0.0 };
        let b_lo = if j > 0 { b[j - 1] } else { 0.0 };
        sum += (a_hi - a_lo) * (b_hi - b_lo);
    }
    sum / dx
}

pub fn l2_product(a: &[f64], b: &[f64], dx: f64) -> f64 {
    dx * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
}

/// Energy `1/2 (|y_t|^2 + |y_x|^2)` at one level, with the kinematic velocity.
pub fn energy(setup: &DiscreteSetup, y: &SpaceTimeField, level: usize) -> f64 {
    let v = readout_velocity(setup, y, level);
    let u = y.level(level);
    let dx = setup.dx();
    0.5 * (l2_product(&v, &v, dx) + gradient_product(u, u, dx))
}

/// Quadratic form conserved by the free leapfrog between levels `n` and `n+1`.
pub fn conserved_energy(setup: &DiscreteSetup, y: &SpaceTimeField, n: usize) -> f64 {
    let dx = setup.dx();
    let dt = setup.dt();
    let (a, b) = (y.level(n), y.level(n + 1));
    let v: Vec<f64> = a.iter().zip(b).map(|(p, q)| (q - p) / dt).collect();
    0.5 * (l2_product(&v, &v, dx) + gradient_product(b, a, dx))
}

/// `V = H^1_0 x L^2` norm of a state.
pub fn v_norm(setup: &DiscreteSetup, state: &StateSlice) -> f64 {
    let dx = setup.dx();
    (gradient_product(&state.position, &state.position, dx)
        + l2_product(&state.velocity, &state.velocity, dx))
    .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wave::grid::Interval;
    use std::f64::consts::PI;

    fn setup(nx: usize, t: f64) -> DiscreteSetup {
        DiscreteSetup::new(nx, t, Interval::new(0.2, 0.8).unwrap(), 0.9).unwrap()
    }

    #[test]
    fn zero_data_gives_zero_field() {
        let s = setup(15, 2.0);
        let z = SpaceTimeField::zeros(&s);
        let y = wave_forward(&s, &z, &z, &StateSlice::zeros(15)).unwrap();
        assert_eq!(y.max_abs(), 0.0);
        let y = wave_backward(&s, &z, &z, &StateSlice::zeros(15)).unwrap();
        assert_eq!(y.max_abs(), 0.0);
    }

    #[test]
    fn laplacian_solve_inverts_eigenfunction() {
        let s = setup(63, 2.0);
        let w: Vec<f64> = s.nodes().map(|x| PI * PI * (PI * x).sin()).collect();
        let z = neg_laplacian_solve(&s, &w);
        let err = s
            .nodes()
            .zip(&z)
            .map(|(x, v)| (v - (PI * x).sin()).abs())
            .fold(0.0, f64::max);
        // discrete eigenvalue differs from pi^2 by pi^4 dx^2 / 12
        assert!(err < PI * PI * s.dx() * s.dx(), "err = {err}");
        assert!(neg_laplacian_solve(&s, &vec![0.0; 63]).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn laplacian_solve_roundtrip() {
        let s = setup(20, 2.0);
        let w: Vec<f64> = (0..20).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        let z = neg_laplacian_solve(&s, &w);
        let back = laplacian(&z, s.dx());
        for (a, b) in back.iter().zip(&w) {
            assert!((-a - b).abs() < 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn unstable_growth_is_reported() {
        let s = setup(15, 2.0);
        let a = SpaceTimeField::constant(&s, -1e9);
        let z = SpaceTimeField::zeros(&s);
        let init = StateSlice::from_fns(&s, |x| (PI * x).sin(), |_| 0.0);
        let err = wave_forward(&s, &a, &z, &init).unwrap_err();
        assert!(matches!(err, Error::Stability { .. }));
    }

    #[test]
    fn wave_operator_returns_source_minus_reaction() {
        let s = setup(15, 1.5);
        let a = SpaceTimeField::from_fn(&s, |x, t| 1.0 + x * t);
        let src = SpaceTimeField::from_fn(&s, |x, t| (3.0 * x).cos() * t);
        let init = StateSlice::from_fns(&s, |x| (PI * x).sin(), |x| x * (1.0 - x));
        let y = wave_forward(&s, &a, &src, &init).unwrap();
        let fin = final_slice(&s, &y, &a, &src);
        let op = wave_operator(&s, &y, &init.velocity, &fin.velocity);
        for n in 0..=s.nt() {
            for i in 0..s.nx() {
                let expect = src.get(n, i) - a.get(n, i) * y.get(n, i);
                assert!((op.get(n, i) - expect).abs() < 1e-9, "level {n}");
            }
        }
    }
}
