//! Evolutionary design of quantum feature-map kernels.
//!
//! The crate is organised bottom-up:
//!
//! * [`quantum_sim`] dense statevector simulation and state fidelity,
//! * [`featuremap`] bit-string genomes decoded into parameterized circuits,
//! * [`kernel`] quantum and classical Gram matrices,
//! * [`svm`] soft-margin SVM trained on a precomputed kernel (SMO),
//! * [`nsga2`] three-objective NSGA-II over genomes,
//! * [`separability`] SI / HMI / DSI data-separability indexes,
//! * [`data`] CSV ingestion, scaling, splitting and feature-combo sampling.

pub mod data;
pub mod error;
pub mod featuremap;
pub mod kernel;
pub mod nsga2;
pub mod quantum_sim;
pub mod separability;
pub mod svm;

pub use error::{Error, LoadError, Result};
