//! Group classification toolkit for nonlinear Schrödinger equations
//! `i ψ_t + Δψ + F(ψ, ψ*) = 0`.
//!
//! The crate encodes the known classification of admissible Lie symmetry
//! extensions and certifies every generator independently: symbolic and
//! sampled invariance residuals, a full second-prolongation oracle,
//! Lie-bracket closure, and the classifying-equation rank analysis.

pub mod classify;
pub mod equivalence;
pub mod error;
pub mod invariance;
pub mod liefield;
pub mod symexpr;

pub use error::{Error, Result};
