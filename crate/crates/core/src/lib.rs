//! Exact controls for the semilinear 1D wave equation
//! `y_tt - y_xx + g(y) = f 1_omega` on `(0,1) x (0,T)`.
//!
//! The crate is organized bottom-up:
//!
//! * [`wave`]: grid, fields and the leapfrog solver everything else runs on.
//! * [`hum`]: minimal-norm controls of the linearized equation by conjugate
//!   gradient on the dual functional.
//! * [`nonlinearity`]: the nonlinear term, its Hölder data and the growth and
//!   threshold formulas.
//! * [`lsq`]: the least-squares functional and the damped-Newton descent that
//!   drives it to zero, with convergence diagnostics.
//! * [`baselines`]: Picard, undamped Newton and the fixed-point variant.
//! * [`io`]: configuration, batch runs, sweeps and their on-disk formats.

pub mod baselines;
pub mod error;
pub mod hum;
pub mod io;
pub mod lsq;
pub mod nonlinearity;
pub mod wave;

pub use error::{Error, Result};
