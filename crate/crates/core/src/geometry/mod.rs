//! Concrete Hadamard model spaces: closed-form distance, geodesics, Busemann
//! functions with derivatives, isometries and Patterson-Sullivan densities.

pub mod factor;
pub mod isometry;
pub mod point;
pub mod quadrature;
pub mod space;

#[cfg(test)]
pub(crate) mod testutil;

pub use isometry::Isometry;
pub use point::{IdealPoint, ModelPoint, TangentVector};
pub use quadrature::{boundary_quadrature, BoundaryQuadrature};
pub use space::ModelSpace;
