//! Truncated Fock-space linear algebra.
//!
//! States, operators and spectral tools that every other module builds on.
//! All objects live in a `dim`-dimensional number-state basis `|0>, ..., |dim-1>`.

mod eig;
mod fidelity;
mod ket;
mod operator;
pub mod serial;
mod spec;
mod states;

pub use eig::{
    eig_hermitian, eig_hermitian_matrix, eigh, max_eigen_bound, psd_sqrt, EigenDecomposition,
    MaxEigenBound, DEGENERACY_GAP,
};
pub use fidelity::fidelity;
pub use spec::{State, StateSpec};
pub use ket::{inner, Ket};
pub use operator::{
    hermiticity_defect, DensityMatrix, HermitianOperator, StateRef, HERMITIAN_TOL, STATE_TOL,
};
pub use states::{
    annihilation, coherent_state, displaced_thermal, number_operator, quadrature_operator,
    thermal_state, Truncated, TRACE_LOSS_WARN, TRUNCATION_WARN,
};

pub(crate) use ket::check_dims;
pub(crate) use states::coherent_amplitudes;

/// Complex scalar used throughout.
pub type C64 = nalgebra::Complex<f64>;

/// Default Fock truncation.
pub const DEFAULT_DIM: usize = 32;
