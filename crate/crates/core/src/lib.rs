//! Variational simulation of Markovian open quantum systems.
//!
//! A density matrix is carried as an outer-product expansion
//! `ρ = Σ_jk B_jk |ψ_j⟩⟨ψ_k|` over states prepared by parametrized circuits.
//! The coefficient matrix `B` and the circuit parameters `z` are advanced
//! with McLachlan equations of motion whose matrix elements come from an
//! [`estimator::Estimator`], either exactly or with emulated shot noise.
//! A dense Lindblad integrator ([`lindblad`]) serves as the reference.
//!
//! The crate is `no_std` and needs only `alloc`; file formats and the
//! command-line driver live in the `opendyn` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod circuit;
pub mod dense;
pub mod error;
pub mod estimator;
pub mod lindblad;
pub mod model;
pub mod models;
pub mod ode;
pub mod pauli;
pub mod tdvp;

pub use num_complex::Complex64;

pub use circuit::{Circuit, Gate, Sign};
pub use dense::{CMatrix, RegularizedSolve};
pub use error::{Error, Result};
pub use estimator::{Estimator, EstimatorMode, Label};
pub use lindblad::DensityMatrix;
pub use model::{Jump, LindbladModel};
pub use models::Scenario;
pub use ode::Integrator;
pub use pauli::{Pauli, PauliSum, PauliWord};
pub use tdvp::{AnsatzState, EomMatrices, StepDiagnostics, TdvpConfig, TdvpSolver};
