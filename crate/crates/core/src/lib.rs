//! Spectral solver and certificate suite for stochastic semilinear
//! dissipative equations on an interval, with maximal monotone drift.
//!
//! The pieces fit together as a pipeline: [`monotone`] provides the drift
//! graph calculus (resolvent, Yosida approximation, convex potential and
//! conjugate), [`semigroup`] the Dirichlet heat semigroup in its sine
//! eigenbasis, [`noise`] exact sampling of the additive stochastic
//! convolution, [`solver`] the regularized time steppers and the
//! vanishing-regularization continuation, and [`diagnostics`] the a
//! posteriori certificates (energy balance, a priori bounds, graph
//! membership, uniform integrability, uniqueness brackets).

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod monotone;
pub mod noise;
pub mod semigroup;
pub mod solver;
pub mod validation;

pub use error::{Error, Result};
