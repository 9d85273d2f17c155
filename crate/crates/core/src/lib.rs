//! Periodic orbits of convex Lagrangian systems on flat tori, their Morse
//! and Maslov-type indices, and the behaviour of those indices under iteration.
//!
//! The symplectic kernels are generic over [`Scalar`] (`f32` or `f64`); the
//! index, loop-space and duality layers work in `f64`.

pub mod duality;
pub mod error;
pub mod fields;
pub mod iteration;
pub mod linalg;
pub mod loops;
pub mod maslov;
pub mod models;
pub mod scalar;
pub mod schema;
pub mod spectral;
pub mod symplectic;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Schema tag written into every JSON document.
pub const SCHEMA: &str = "sil/1";

pub type SymplecticPathF64 = symplectic::SymplecticPath<f64>;
pub type SymplecticPathF32 = symplectic::SymplecticPath<f32>;
pub type CoefficientF64 = symplectic::Coefficient<f64>;
pub type BlocksF64 = symplectic::Blocks<f64>;
