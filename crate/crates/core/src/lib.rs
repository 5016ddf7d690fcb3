//! Spectral and scattering theory of full-line Jacobi operators.
//!
//! The crate computes half-line Weyl m-functions, diagonal and off-diagonal
//! Green's functions, the two-channel scattering matrix of the pair
//! `(J, J_0)` (with `J_0` the operator decoupled at a site), Jost solutions
//! and reflection probabilities, and cross-checks the measure-theoretic,
//! spectral, stationary and dynamical notions of reflectionlessness on
//! energy grids.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod floquet;
pub mod herglotz;
pub mod jost;
pub mod linalg;
pub mod model;
pub mod scattering;

pub use error::{Error, Result};
pub use model::{Approach, Background, BoundaryPoint, JacobiSpec, Perturbation, Side, TruncatedOperator};
