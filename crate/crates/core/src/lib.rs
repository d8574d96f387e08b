//! Dense simulation of open quantum systems governed by Lindblad master
//! equations.
//!
//! The crate is organised around a handful of value types:
//!
//! - [`Operator`], [`Ket`] and [`DensityMatrix`] live on a [`HilbertSpace`]
//!   that remembers its tensor-factor structure;
//! - [`SuperOp`] is a matrix acting on row-major vectorised operators and
//!   houses Liouvillians, dissipators, measurement maps and cycle maps;
//! - [`LindbladModel`] (a Hamiltonian plus `(rate, jump)` pairs) drives both
//!   the deterministic integrators in [`dynamics`] and the stochastic
//!   unravelings in [`trajectories`].
//!
//! Qubit factors order `|↑⟩` (excited, logical `1`) before `|↓⟩`, so that
//! `σz = diag(+1, −1)`. Bosonic factors use ascending Fock order.

pub mod algebra;
pub mod dynamics;
mod error;
pub mod linalg;
pub mod measurement;
pub mod qec;
pub mod random;
pub mod superop;
pub mod trajectories;

pub use algebra::{DensityMatrix, HilbertSpace, Ket, Operator};
pub use error::{Error, Result};
pub use superop::{LindbladModel, Spectrum, SuperOp};

pub use num_complex::Complex64 as C64;
