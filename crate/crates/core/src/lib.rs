//! Second-order moment machinery for multi-qubit (and, where exact, multi-qudit) states.
//!
//! The crate covers the generalized Bloch-tensor representation of a density matrix,
//! exact marginal second-order moments and their relation to marginal purities, a
//! simulator for the randomized-measurement protocol that estimates those moments,
//! local-unitary (LU) certificates built from Bloch rotations, and the two-qubit
//! entanglement measures needed to tell apart states whose moments all coincide.
//!
//! The [`counterexamples`] module builds a separable state and a family of entangled
//! states that share every global and marginal second-order moment.

pub mod bloch;
pub mod cli;
pub mod counterexamples;
pub mod entanglement;
pub mod error;
pub mod luequiv;
pub mod moments;
pub mod operators;
pub mod sampling;
pub mod states;
pub mod subset;

pub use bloch::{BlochTensor, CorrelationMatrix, MarginalVector};
pub use error::{Error, Result};
pub use moments::MomentSet;
pub use states::{DensityMatrix, Spectrum};
pub use subset::Subset;

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Dense complex matrix used for states and operators.
pub type CMatrix = DMatrix<Complex64>;

/// Global tolerance for trace, Hermiticity and positivity checks.
pub const STATE_TOL: f64 = 1e-10;
