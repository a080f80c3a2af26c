//! Quantum measurement retrodiction under the minimum-change principle.
//!
//! The crate computes quantum Bayesian inverses, the symmetric retrodictive joint distribution
//! of two POVMs, mutual retrodictability, and three entropic uncertainty bounds, and provides
//! the Monte-Carlo harness that benchmarks those bounds against each other.
//!
//! Modules, bottom-up:
//! - [`linalg`]: Hermitian eigendecomposition, matrix functions, Schatten norms, polar unitary.
//! - [`objects`]: validated density matrices and POVMs, random ensembles, MUBs.
//! - [`divergences`]: entropies and the quantum relative-entropy families.
//! - [`retrodiction`]: Bayesian inverse, forward cq state, retrodictive joint.
//! - [`eur`]: the three uncertainty bounds and the instrument states.
//! - [`verify`]: numerical oracle for the minimizer of the minimum-change problem.
//! - [`harness`]: benchmark runs, MUB scans and single-instance reports.
//! - [`json`]: on-disk format for states and POVMs.

#![forbid(unsafe_code)]

pub mod divergences;
pub mod error;
pub mod eur;
pub mod harness;
pub mod json;
pub mod linalg;
pub mod objects;
pub mod retrodiction;
pub mod verify;

pub use divergences::{Divergence, ProbVector};
pub use error::{Error, Result};
pub use eur::{Eur3Form, EurRecord};
pub use linalg::{CMatrix, EigenDecomposition, HermitianOperator};
pub use objects::{DensityMatrix, Povm, RngStream, StateEnsemble};
pub use retrodiction::{CqState, RetroJoint};
