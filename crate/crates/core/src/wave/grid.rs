use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stability margin: time steps are chosen so that `dt/dx <= 1 - CFL_MARGIN`.
pub const CFL_MARGIN: f64 = 0.05;

/// Open control interval `(left, right)` inside `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub left: f64,
    pub right: f64,
}

impl Interval {
    pub fn new(left: f64, right: f64) -> Result<Self> {
        if !(left.is_finite() && right.is_finite()) || left < 0.0 || right > 1.0 || left >= right {
            return Err(Error::Geometry(format!(
                "control interval ({left}, {right}) must satisfy 0 <= l1 < l2 <= 1"
            )));
        }
        Ok(Interval { left, right })
    }

    pub fn len(&self) -> f64 {
        self.right - self.left
    }

    /// Smallest horizon for which the interval controls the whole string.
    pub fn critical_time(&self) -> f64 {
        2.0 * self.left.max(1.0 - self.right)
    }
}

/// Uniform space-time grid on `(0,1) x (0,T)` with a control window.
///
/// Interior nodes are `x_i = i dx`, `i = 1..=nx`, with `dx = 1/(nx+1)`;
/// Dirichlet values at `x = 0, 1` are implicit zeros. Time levels are
/// `t_n = n dt`, `n = 0..=nt`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSetup {
    nx: usize,
    nt: usize,
    horizon: f64,
    dx: f64,
    dt: f64,
    omega: Interval,
    omega_mask: Vec<f64>,
}

impl DiscreteSetup {
    /// Builds the grid, choosing the smallest `nt` with `dt/dx <= cfl_target`.
    ///
    /// `cfl_target` above `1 - CFL_MARGIN` is clamped to that margin.
    pub fn new(nx: usize, horizon: f64, omega: Interval, cfl_target: f64) -> Result<Self> {
        if !(cfl_target > 0.0 && cfl_target < 1.0) {
            return Err(Error::Resolution(format!(
                "cfl target {cfl_target} must lie in (0, 1)"
            )));
        }
        let cfl = cfl_target.min(1.0 - CFL_MARGIN);
        Self::check(nx, horizon, &omega)?;
        let dx = 1.0 / (nx as f64 + 1.0);
        // tolerate representation error in the quotient before rounding up
        let raw = horizon / (cfl * dx);
        let nt = ((raw - 1e-9).ceil() as usize).max(1);
        Self::with_steps(nx, nt, horizon, omega)
    }

    /// Builds the grid with an explicit number of time steps.
    pub fn with_steps(nx: usize, nt: usize, horizon: f64, omega: Interval) -> Result<Self> {
        Self::check(nx, horizon, &omega)?;
        let dx = 1.0 / (nx as f64 + 1.0);
        if nt == 0 {
            return Err(Error::Resolution("nt must be positive".into()));
        }
        let dt = horizon / nt as f64;
        if dt / dx > 1.0 - CFL_MARGIN + 1e-12 {
            return Err(Error::Resolution(format!(
                "dt/dx = {:.4} exceeds the stability bound {}",
                dt / dx,
                1.0 - CFL_MARGIN
            )));
        }
        let omega_mask = (1..=nx)
            .map(|i| {
                let x = i as f64 * dx;
                let lo = (x - 0.5 * dx).max(omega.left);
                let hi = (x + 0.5 * dx).min(omega.right);
                ((hi - lo) / dx).clamp(0.0, 1.0)
            })
            .collect();
        Ok(DiscreteSetup {
            nx,
            nt,
            horizon,
            dx,
            dt,
            omega,
            omega_mask,
        })
    }

    fn check(nx: usize, horizon: f64, omega: &Interval) -> Result<()> {
        let omega = Interval::new(omega.left, omega.right)?;
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::Geometry(format!("horizon T = {horizon} must be positive")));
        }
        if horizon <= omega.critical_time() {
            return Err(Error::Geometry(format!(
                "T = {horizon} does not exceed 2 max(l1, 1 - l2) = {}",
                omega.critical_time()
            )));
        }
        if nx < 4 {
            return Err(Error::Resolution(format!("nx = {nx} is below the minimum of 4")));
        }
        Ok(())
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn cfl(&self) -> f64 {
        self.dt / self.dx
    }

    pub fn omega(&self) -> Interval {
        self.omega
    }

    /// Covered fraction of each node's dual cell by the control interval.
    pub fn omega_mask(&self) -> &[f64] {
        &self.omega_mask
    }

    pub fn x(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.dx
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.nx).map(move |i| self.x(i))
    }

    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    /// Trapezoidal weight of time level `n`.
    pub fn time_weight(&self, n: usize) -> f64 {
        if n == 0 || n == self.nt {
            0.5 * self.dt
        } else {
            self.dt
        }
    }

    pub fn levels(&self) -> usize {
        self.nt + 1
    }
}
