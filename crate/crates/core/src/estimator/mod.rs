//! Reconstruction engines.
//!
//! * orthogonal closed form for projective number-state data
//! * pure-state maximum likelihood in the span of the detected kets
//! * the two-detection closed form, used as an oracle for the iteration
//! * unconstrained linear inversion, the baseline that can leave the state space

mod analytic;
mod ascent;
mod compare;
mod gram;
mod inversion;
mod mle;
mod orthogonal;

pub use analytic::{estimate_double_analytic, estimate_double_analytic_on};
pub use compare::{likelihood_compare, render_table, Candidate, ComparisonRow};
pub use gram::{gram_eigenproblem, GramProblem, GramSolution, GRAM_SINGULAR_TOL};
pub use inversion::{
    clip_to_density, estimate_inversion, InversionSolution, InversionSolver, NEGATIVITY_TOL, RANK_TOL,
};
pub use mle::{estimate_mle_pure, MleOptions, MleSolution};
pub use orthogonal::estimate_orthogonal;
