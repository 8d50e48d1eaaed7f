//! Numerical laboratory for front motion in a radially symmetric
//! aggregation-diffusion model with degenerate diffusion.
//!
//! The density equation is recast through its mass accumulation function w,
//! which turns the free boundary into a level-set question: the support edge
//! of the density is the point where w reaches its boundary value mu R^n.
//! Everything here works on that transformed picture. The crate provides
//! the critical tail coefficients separating shrinking from expanding
//! supports, exact initial-datum construction, certified comparison
//! families bracketing the solution from either side, an explicit solver
//! for the regularized equation, and front extraction with classification
//! against the certified envelopes.

pub mod comparison;
pub mod config;
pub mod error;
pub mod front;
pub mod model;
pub mod profiles;
pub mod report;
pub mod residual;
pub mod run;
pub mod solver;

pub use error::{Error, Result};
