//! Divergence-conforming interior-penalty finite elements for the Stokes
//! problem on closed surfaces (the ellipsoid family), with a discrete Stokes
//! eigensolver and automatic filtering of Killing fields.

pub mod assembly;
pub mod dense;
pub mod dual;
pub mod error;
pub mod geometry;
pub mod killing;
pub mod linalg;
pub mod mesh;
pub mod experiments;
pub mod fem;
pub mod quadrature;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};
