//! Cut-cell discontinuous Galerkin solver for the first-order acoustic wave
//! equation with domain-of-dependence stabilization of small cut cells.

pub mod basis;
pub mod dg;
pub mod diagnostics;
pub mod dod;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod time;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::Point;
