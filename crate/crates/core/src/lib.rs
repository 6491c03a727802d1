pub mod ansatz;
pub mod bounds;
pub mod cli;
pub mod error;
pub mod grad;
pub mod lattice;
pub mod pauli;
pub mod rng;
pub mod spectral;
pub mod statevec;
pub mod vqe;

#[cfg(test)]
mod oracle;

pub use ansatz::{apply_circuit, neel_state, sample_params, xyz_hva, HvaSpec, InitScheme, ParamSet};
pub use bounds::{
    fm_approx_verify, fm_error_bound, fm_order_n0, k_norm_bound, norm_bounds, omega_bound, speed_limit_tc, theorem_constants,
    FmParameters, FmVerification, NormBounds, TheoremConstants,
};
pub use error::{HvaError, Result};
pub use grad::{exact_gradient, grad_variance_scan, shot_gradient, GradScanResult, GradientMode, GradientVector};
pub use lattice::{Lattice, LatticeKind};
pub use pauli::{validate_layer, LayerValidationReport, LocalHamiltonian, Pauli, PauliString, Term};
pub use rng::RngStream;
pub use spectral::{
    eigendecompose, f_h_lower_bound, haar_unitary, otoc, random_k_local_hamiltonian, time_average_grad_sq, EigenSystem,
    FhBound, FhReport, RandomHamiltonianSpec, Rho0,
};
pub use vqe::{adam_step, run_vqe, run_vqe_constrained_ansatz, AdamState, TrainingRecord, VqeOptions};
pub use statevec::{estimate_pauli_pair, sample_bitstrings, MeasurementBasis, StateVector};

pub use nalgebra::Complex as NComplex;
pub type Complex64 = nalgebra::Complex<f64>;

/// Largest site count accepted by statevector routines.
pub const MAX_SITES: usize = 26;
/// Largest site count for which dense matrices are built.
pub const DENSE_MAX_SITES: usize = 12;
