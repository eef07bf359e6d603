//! Desk-scale numerical laboratory for the infrared behaviour of the cutoff
//! Nelson model: a quantum particle in an external potential coupled to a
//! massless scalar Bose field between an infrared cutoff kappa and an
//! ultraviolet cutoff Lambda.
//!
//! The pipeline discretizes the particle on a Dirichlet box, the field on a
//! quadrature momentum shell with a truncated occupation-number Fock space,
//! computes ground states by sparse Lanczos iteration, and measures every
//! quantitative ingredient of the soft-boson analysis: pull-through residuals,
//! the dipole (J1/J2) decomposition, the exact number identity, the
//! logarithmic divergence bracket, self-energy and binding-energy brackets,
//! and spatial-localization bounds.

pub mod atomic;
pub mod cache;
pub mod config;
pub mod error;
pub mod field;
pub mod ircheck;
pub mod model;
pub mod sparse;
pub mod spectral;

pub use error::{Error, Result};
