use crate::wave::{laplacian, neg_laplacian_solve_dx, spectral};

/// Initial data `(phi0, phi1)` of the adjoint state.
///
/// `phi1` is stored by its nodal values; its `H^{-1}` size is measured with
/// the discrete inverse Laplacian. The same shape also stores dual elements
/// (outputs of the Gramian, right-hand sides), which act on seeds through
/// [`AdjointSeed::pairing`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointSeed {
    pub phi0: Vec<f64>,
    pub phi1: Vec<f64>,
}

impl AdjointSeed {
    pub fn zeros(nx: usize) -> Self {
        AdjointSeed {
            phi0: vec![0.0; nx],
            phi1: vec![0.0; nx],
        }
    }

    pub fn nx(&self) -> usize {
        self.phi0.len()
    }

    pub fn is_finite(&self) -> bool {
        self.phi0.iter().chain(&self.phi1).all(|v| v.is_finite())
    }

    /// Canonical basis element `j` of the `2 nx` dimensional seed space.
    pub fn unit(nx: usize, j: usize) -> Self {
        let mut s = Self::zeros(nx);
        if j < nx {
            s.phi0[j] = 1.0;
        } else {
            s.phi1[j - nx] = 1.0;
        }
        s
    }

    pub fn component(&self, j: usize) -> f64 {
        let nx = self.nx();
        if j < nx {
            self.phi0[j]
        } else {
            self.phi1[j - nx]
        }
    }

    /// Duality pairing `(a0, b0)_{L^2} + <a1, b1>`.
    pub fn pairing(&self, other: &AdjointSeed, dx: f64) -> f64 {
        let s0: f64 = self.phi0.iter().zip(&other.phi0).map(|(a, b)| a * b).sum();
        let s1: f64 = self.phi1.iter().zip(&other.phi1).map(|(a, b)| a * b).sum();
        dx * (s0 + s1)
    }

    /// `L^2 x H^{-1}` inner product.
    pub fn h_inner(&self, other: &AdjointSeed, dx: f64) -> f64 {
        let s0: f64 = self.phi0.iter().zip(&other.phi0).map(|(a, b)| a * b).sum();
        let inv = neg_laplacian_solve_dx(&self.phi1, dx);
        let s1: f64 = inv.iter().zip(&other.phi1).map(|(a, b)| a * b).sum();
        dx * (s0 + s1)
    }

    pub fn h_norm(&self, dx: f64) -> f64 {
        self.h_inner(self, dx).max(0.0).sqrt()
    }

    /// Riesz map of a dual element into the seed space under the `H` inner
    /// product: `(l0, -Lap l1)`.
    pub fn riesz(&self, dx: f64) -> AdjointSeed {
        AdjointSeed {
            phi0: self.phi0.clone(),
            phi1: laplacian(&self.phi1, dx).into_iter().map(|v| -v).collect(),
        }
    }

    pub fn axpy(&mut self, alpha: f64, other: &AdjointSeed) {
        for (a, b) in self.phi0.iter_mut().zip(&other.phi0) {
            *a += alpha * b;
        }
        for (a, b) in self.phi1.iter_mut().zip(&other.phi1) {
            *a += alpha * b;
        }
    }

    /// `self = other + beta * self`
    pub fn xpby(&mut self, other: &AdjointSeed, beta: f64) {
        for (a, b) in self.phi0.iter_mut().zip(&other.phi0) {
            *a = b + beta * *a;
        }
        for (a, b) in self.phi1.iter_mut().zip(&other.phi1) {
            *a = b + beta * *a;
        }
    }

    pub fn low_pass(&self, keep: usize) -> AdjointSeed {
        AdjointSeed {
            phi0: spectral::low_pass(&self.phi0, keep),
            phi1: spectral::low_pass(&self.phi1, keep),
        }
    }
}
