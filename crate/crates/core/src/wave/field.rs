use serde::{Deserialize, Serialize};

use super::grid::DiscreteSetup;

/// Scalar field sampled on every interior node and every time level.
///
/// Storage is level-major: `values[n * nx + i]` holds node `i` at level `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    nx: usize,
    nt: usize,
    values: Vec<f64>,
}

impl SpaceTimeField {
    pub fn zeros(setup: &DiscreteSetup) -> Self {
        Self::zeros_dims(setup.nx(), setup.nt())
    }

    pub(crate) fn zeros_dims(nx: usize, nt: usize) -> Self {
        SpaceTimeField {
            nx,
            nt,
            values: vec![0.0; nx * (nt + 1)],
        }
    }

    pub fn constant(setup: &DiscreteSetup, value: f64) -> Self {
        let mut f = Self::zeros(setup);
        f.values.fill(value);
        f
    }

    /// Samples `func(x, t)` on the grid.
    pub fn from_fn(setup: &DiscreteSetup, func: impl Fn(f64, f64) -> f64) -> Self {
        let mut f = Self::zeros(setup);
        for n in 0..=setup.nt() {
            let t = setup.t(n);
            for (i, v) in f.level_mut(n).iter_mut().enumerate() {
                *v = func(setup.x(i), t);
            }
        }
        f
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn matches(&self, setup: &DiscreteSetup) -> bool {
        self.nx == setup.nx() && self.nt == setup.nt()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn level(&self, n: usize) -> &[f64] {
        &self.values[n * self.nx..(n + 1) * self.nx]
    }

    pub fn level_mut(&mut self, n: usize) -> &mut [f64] {
        &mut self.values[n * self.nx..(n + 1) * self.nx]
    }

    pub fn get(&self, n: usize, i: usize) -> f64 {
        self.values[n * self.nx + i]
    }

    pub fn map(&self, func: impl Fn(f64) -> f64) -> Self {
        SpaceTimeField {
            nx: self.nx,
            nt: self.nt,
            values: self.values.iter().map(|&v| func(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, func: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.values.len(), other.values.len());
        SpaceTimeField {
            nx: self.nx,
            nt: self.nt,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| func(a, b))
                .collect(),
        }
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &Self) {
        debug_assert_eq!(self.values.len(), other.values.len());
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.values.iter_mut().for_each(|v| *v *= alpha);
    }

    /// Multiplies every level pointwise by the control mask.
    pub fn masked(&self, setup: &DiscreteSetup) -> Self {
        let mut out = self.clone();
        let mask = setup.omega_mask();
        for n in 0..=self.nt {
            for (v, m) in out.level_mut(n).iter_mut().zip(mask) {
                *v *= m;
            }
        }
        out
    }

    /// Zeroes the field on nodes the control window does not touch.
    pub fn restricted_to_window(&self, setup: &DiscreteSetup) -> Self {
        let mut out = self.clone();
        let mask = setup.omega_mask();
        for n in 0..=self.nt {
            for (v, m) in out.level_mut(n).iter_mut().zip(mask) {
                if *m == 0.0 {
                    *v = 0.0;
                }
            }
        }
        out
    }

    /// Field with time levels in reverse order.
    pub fn time_reversed(&self) -> Self {
        let mut out = Self::zeros_dims(self.nx, self.nt);
        for n in 0..=self.nt {
            out.level_mut(self.nt - n).copy_from_slice(self.level(n));
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Position and velocity on the interior nodes at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSlice {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
}

impl StateSlice {
    pub fn zeros(nx: usize) -> Self {
        StateSlice {
            position: vec![0.0; nx],
            velocity: vec![0.0; nx],
        }
    }

    pub fn new(position: Vec<f64>, velocity: Vec<f64>) -> Self {
        debug_assert_eq!(position.len(), velocity.len());
        StateSlice { position, velocity }
    }

    /// Samples position and velocity profiles on the interior nodes.
    pub fn from_fns(
        setup: &DiscreteSetup,
        position: impl Fn(f64) -> f64,
        velocity: impl Fn(f64) -> f64,
    ) -> Self {
        StateSlice {
            position: setup.nodes().map(position).collect(),
            velocity: setup.nodes().map(velocity).collect(),
        }
    }

    pub fn nx(&self) -> usize {
        self.position.len()
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().chain(&self.velocity).all(|v| v.is_finite())
    }

    pub fn sub(&self, other: &StateSlice) -> StateSlice {
        StateSlice {
            position: self.position.iter().zip(&other.position).map(|(a, b)| a - b).collect(),
            velocity: self.velocity.iter().zip(&other.velocity).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn add(&self, other: &StateSlice) -> StateSlice {
        StateSlice {
            position: self.position.iter().zip(&other.position).map(|(a, b)| a + b).collect(),
            velocity: self.velocity.iter().zip(&other.velocity).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scaled(&self, alpha: f64) -> StateSlice {
        StateSlice {
            position: self.position.iter().map(|v| alpha * v).collect(),
            velocity: self.velocity.iter().map(|v| alpha * v).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.position.iter().chain(&self.velocity).all(|&v| v == 0.0)
    }
}
