use super::{gramian_apply, AdjointSeed};
use crate::error::{Error, Result};
use crate::wave::{DiscreteSetup, SpaceTimeField};

/// Share of the sine modes kept when the spectral filter is on.
pub const FILTER_KEEP_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Relative tolerance on the `H`-norm of the Riesz residual.
    pub tol: f64,
    pub max_iter: usize,
    /// Jacobi scaling from the assembled Gramian diagonal in place of the
    /// Riesz map. Costs `2 nx` extra Gramian applications.
    pub diagonal_scaling: bool,
    /// Restricts the seed to the lowest sine modes.
    pub spectral_filter: bool,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions {
            tol: 1e-10,
            max_iter: 2000,
            diagonal_scaling: false,
            spectral_filter: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub seed: AdjointSeed,
    pub iterations: usize,
    pub relative_residual: f64,
}

enum Preconditioner {
    Riesz,
    Jacobi(Vec<f64>),
}

impl Preconditioner {
    fn apply(&self, r: &AdjointSeed, dx: f64) -> AdjointSeed {
        match self {
            Preconditioner::Riesz => r.riesz(dx),
            Preconditioner::Jacobi(diag) => {
                let nx = r.nx();
                AdjointSeed {
                    phi0: r.phi0.iter().zip(diag).map(|(v, d)| v / d).collect(),
                    phi1: r.phi1.iter().zip(&diag[nx..]).map(|(v, d)| v / d).collect(),
                }
            }
        }
    }
}

/// Solves `Lambda seed = rhs` by conjugate gradients.
///
/// The stopping test measures the residual in the `H` norm of its Riesz
/// representative, relative to that of `rhs`. A zero right-hand side returns
/// the zero seed after no iterations.
pub fn gramian_cg(
    setup: &DiscreteSetup,
    potential: &SpaceTimeField,
    rhs: &AdjointSeed,
    opts: &CgOptions,
) -> Result<CgOutcome> {
    let dx = setup.dx();
    let nx = setup.nx();
    let keep = ((FILTER_KEEP_FRACTION * nx as f64).ceil() as usize).clamp(1, nx);
    let project = |s: AdjointSeed| {
        if opts.spectral_filter {
            s.low_pass(keep)
        } else {
            s
        }
    };
    let residual_norm = |r: &AdjointSeed| r.pairing(&r.riesz(dx), dx).max(0.0).sqrt();

    let mut r = project(rhs.clone());
    let r0 = residual_norm(&r);
    let mut x = AdjointSeed::zeros(nx);
    if r0 == 0.0 {
        return Ok(CgOutcome {
            seed: x,
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    if !r0.is_finite() {
        return Err(Error::Convergence {
            iterations: 0,
            residual: r0,
        });
    }

    let precond = if opts.diagonal_scaling {
        let diag = (0..2 * nx)
            .map(|j| {
                let e = AdjointSeed::unit(nx, j);
                gramian_apply(setup, potential, &e).map(|v| v.component(j))
            })
            .collect::<Result<Vec<f64>>>()?;
        if diag.iter().any(|&d| !(d > 0.0)) {
            Preconditioner::Riesz
        } else {
            Preconditioner::Jacobi(diag)
        }
    } else {
        Preconditioner::Riesz
    };

    let mut z = project(precond.apply(&r, dx));
    let mut p = z.clone();
    let mut rz = r.pairing(&z, dx);
    let mut rel = 1.0;
    for it in 1..=opts.max_iter {
        let q = project(gramian_apply(setup, potential, &p)?);
        let curvature = p.pairing(&q, dx);
        if !(curvature > 0.0) || !curvature.is_finite() {
            return Err(Error::Convergence {
                iterations: it,
                residual: rel,
            });
        }
        let alpha = rz / curvature;
        x.axpy(alpha, &p);
        r.axpy(-alpha, &q);
        rel = residual_norm(&r) / r0;
        if rel <= opts.tol {
            return Ok(CgOutcome {
                seed: x,
                iterations: it,
                relative_residual: rel,
            });
        }
        z = project(precond.apply(&r, dx));
        let rz_next = r.pairing(&z, dx);
        p.xpby(&z, rz_next / rz);
        rz = rz_next;
    }
    Err(Error::Convergence {
        iterations: opts.max_iter,
        residual: rel,
    })
}
