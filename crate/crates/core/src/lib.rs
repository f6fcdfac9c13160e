//! Semigroup-accelerated fixed-point iterations for structured matrix
//! equations.

pub mod dare;
pub mod engine;
pub mod instances;
pub mod matrixkit;
pub mod nme;
pub mod pencil;
pub mod scalar;
pub mod stein;
