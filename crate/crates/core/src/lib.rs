//! A 1D laboratory for the free-boundary compressible Euler equations with a physical vacuum.
//!
//! The gas occupies `Ω = (Γ₋, Γ₊)` where the defining function `r = ((κ+1)/κ)ρ^κ` is
//! positive; `r` vanishes simply at the free boundary. The evolution is
//! `D_t r = -κ r ∂v`, `D_t v = -∂r` with `D_t = ∂_t + v∂`.

pub mod error;
pub mod grid;
pub mod wspace;
pub mod calculus;
pub mod operators;
pub mod kernels;
pub mod energy;
pub mod distance;
pub mod oracle;
pub mod stepper;
pub mod cli;

pub use error::{FbeError, Result};
