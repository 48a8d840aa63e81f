//! Spectral solver workbench for 1D periodic nonlinear dispersive PDEs.
//!
//! The crate provides a pseudo-spectral core, classical and resonance-based
//! low-regularity time integrators, a latent neural defect corrector with a
//! hybrid alternating stepper (HIN-LRI), reverse-mode differentiation
//! through the unrolled solver for solver-in-the-loop training, and a
//! diagnostics harness for order collapse, algebraic rigidity, averaging
//! mismatch, CFL behaviour and invariant drift.

pub mod checkpoint;
pub mod config;
pub mod corrector;
pub mod diagnostics;
pub mod equations;
pub mod error;
pub mod hinlri;
pub mod integrators;
pub mod pipeline;
pub mod rng;
pub mod results;
pub mod rough;
pub mod spectral;
pub mod tape;
pub mod training;

pub mod testutil;

pub use error::{CoreError, Result};
