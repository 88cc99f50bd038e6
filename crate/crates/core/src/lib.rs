//! Exact algebra and numerics for Koopman–von Neumann mechanics.
//!
//! The symbolic side (`grassmann`, `superops`, `superfield`, `symmetries`)
//! works over exact complex rationals so every identity check is an exact
//! zero test. The numeric side (`propagator`) transports wavefunctions on a
//! one-degree-of-freedom phase-space grid.

pub mod error;
pub mod grassmann;
pub mod model;
pub mod poly;
pub mod propagator;
pub mod scalar;
pub mod superfield;
pub mod superops;
pub mod superspace;
pub mod symmetries;

pub use error::{Error, Result};
pub use model::PhaseSpaceModel;
pub use poly::Poly;
pub use scalar::Scalar;
