//! Numerical laboratory for geodesic-flow rigidity machinery: operator
//! Jacobi fields, stable/unstable matrix Riccati limits, and Anosov
//! certificates, all checked against closed-form model geometries.
//!
//! The core is generic over the scalar type through [`scalar::Real`]
//! (`f32` or `f64`); the shipped tolerances assume `f64`, and the aliases
//! at the crate root fix that choice for ordinary use.

pub mod analysis;
pub mod jacobi;
pub mod mat;
pub mod models;
pub mod riccati;
pub mod scalar;
pub mod symop;

pub use scalar::Real;

/// Dense matrix over `f64`.
pub type Mat64 = mat::Mat<f64>;
/// Symmetric operator over `f64`.
pub type SymOp64 = symop::SymOp<f64>;
/// Curvature model over `f64`.
pub type CurvatureModel64 = models::CurvatureModel<f64>;
/// Jacobi path over `f64`.
pub type JacobiPath64 = jacobi::JacobiPath<f64>;
/// Riccati result over `f64`.
pub type RiccatiResult64 = riccati::RiccatiResult<f64>;
/// Anosov certificate report over `f64`.
pub type AnosovReport64 = analysis::AnosovReport<f64>;
