//! Space-time grid, fields, and the leapfrog wave solver.

mod field;
mod grid;
mod norms;
mod solver;
pub mod spectral;

pub use field::{SpaceTimeField, StateSlice};
pub use grid::{DiscreteSetup, Interval, CFL_MARGIN};
pub use norms::{inner, norms, window_inner, Norms};
pub use solver::{
    apply_laplacian, conserved_energy, end_velocity, energy, final_slice, gradient_product,
    initial_slice, l2_product, laplacian, neg_laplacian_solve, readout_velocity,
    semilinear_forward, start_velocity, v_norm, wave_backward, wave_forward, wave_operator,
    BLOW_UP_LIMIT,
};
pub(crate) use solver::neg_laplacian_solve_dx;
