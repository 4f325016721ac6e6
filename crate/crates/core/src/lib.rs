//! Numerical toolkit for Busemann geometry, Patterson-Sullivan densities,
//! barycenters of boundary measures, and natural maps for measurable cocycles
//! on hyperbolic model spaces and their products.

pub mod cocycles;
pub mod error;
pub mod fixtures;
pub mod barycenter;
pub mod cli;
pub mod geometry;
pub mod measures;
pub mod natural_map;
pub mod volume;

pub use error::{Error, Result};
