//! Heat equation driven by a two-threshold relay, `Δu - ∂ₜu = h[u]`.
//!
//! The crate integrates the equation on 1D/2D structured grids, extracts the
//! free boundary (down-jumps at `alpha`, up-jumps at `beta`, and vertical
//! walls inside the band) and measures regularity diagnostics around it.

pub mod commands;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod free_boundary;
pub mod grid;
pub mod io;
pub mod relay;
pub mod solver;

pub use error::{Error, Result};
