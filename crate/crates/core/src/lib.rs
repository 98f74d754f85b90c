//! Subordinate CIR (SubCIR) default-intensity model.
//!
//! A CIR diffusion with killing rate `k(x) = x` is time-changed by an
//! independent Lévy subordinator. The crate evaluates the resulting survival
//! probabilities, credit spreads and claim prices by eigenfunction expansion,
//! computes the jump process's local characteristics, and simulates the
//! time-changed pair by Monte Carlo to cross-check the analytics.

pub mod cir;
pub mod error;
pub mod mc;
pub mod pricing;
pub mod quad;
pub mod specfun;
pub mod subcir;
pub mod subordinators;

pub use error::{Result, SubCirError};
