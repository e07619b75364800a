//! Isometric first-order deformations of polygons in the Euclidean plane,
//! the sphere, the hyperbolic plane and the de Sitter plane, together with
//! the quadratic invariant `b`, maximal-area polygons with prescribed edge
//! lengths, infinitesimal rigidity of convex polyhedra and metrics on
//! moduli of polygons.

pub mod error;
pub mod tolerance;
pub mod geometry;
pub mod linalg;
pub mod polygon;
pub mod random;
pub mod deformation;
pub mod binvariant;
pub mod isoperimetric;
pub mod hull;
pub mod rigidity;
pub mod metrics;
pub mod io;
pub mod cli;

pub use error::{Error, Result};
pub use geometry::{ComplexMeasure, Geometry, Vec3};
pub use polygon::Polygon;
