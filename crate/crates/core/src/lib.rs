//! Symbolic-jet geometry toolkit for harmonic and biharmonic maps and
//! Riemannian submersions.

pub mod classify;
pub mod config;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod jet;
pub mod map;
pub mod report;
pub mod submersion;
pub mod validate;
pub mod zoo;

pub use error::{Error, Result};
