//! Dense linear-algebra kernels: matrix exponential, exact ZOH
//! discretization, eigenvalue-based stability checks and the H-infinity
//! norm of a stable state-space plant.

mod eigen;
mod expm;
mod hinf;
mod matrix;

pub use eigen::{eigenvalues, is_hurwitz, spectral_abscissa, symmetric_eigenvalues};
pub use expm::{mat_exp, zoh_discretize};
pub use hinf::{
    complex_sigma_max, frequency_sweep_peak, hinf_norm, StateSpacePlant, DEFAULT_HINF_TOL,
};
pub use matrix::Matrix;
