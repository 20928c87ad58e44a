//! Trotter-step compilation and resource analysis for 2-local power-law
//! Hamiltonians.
//!
//! Coefficient-level algebra (matrices, norms, decompositions, truncated
//! SVDs) is generic over [`scalar::Real`]; the aliases below fix the
//! precision. Circuit simulation and block encodings work in `f64` complex
//! arithmetic.

pub mod blockenc;
pub mod bounds;
pub mod chem;
pub mod circuit;
pub mod compilers;
pub mod costmodel;
pub mod decomp;
pub mod error;
pub mod hamlib;
pub mod lowrank;
pub mod scalar;
pub mod trotter;

pub use error::{Error, Result};
pub use scalar::Real;

pub type CoeffMatrix64 = hamlib::CoeffMatrix<f64>;
pub type CoeffMatrix32 = hamlib::CoeffMatrix<f32>;
pub type HamiltonianSpec64 = hamlib::HamiltonianSpec<f64>;
pub type HamiltonianSpec32 = hamlib::HamiltonianSpec<f32>;
pub type DenseMatrix64 = lowrank::DenseMatrix<f64>;
pub type DenseMatrix32 = lowrank::DenseMatrix<f32>;
pub type RankProfile64 = lowrank::RankProfile<f64>;
pub type RankProfile32 = lowrank::RankProfile<f32>;
pub type TruncatedFactor64 = lowrank::TruncatedFactor<f64>;
pub type TruncatedFactor32 = lowrank::TruncatedFactor<f32>;
