//! Lattice Jellium energies in the plane: Epstein zeta functions by Ewald
//! summation, periodic Coulomb energies on tori, finite Jellium in polygonal
//! domains, energy minimization on tori and on the sphere, and the
//! renormalized-energy constants derived from them.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod boundary;
pub mod epstein;
pub mod error;
pub mod geometry;
pub mod greens;
pub mod jellium_finite;
pub mod lattice;
pub mod optimize;
pub mod periodic;
pub mod quad;
pub mod renorm;
pub mod specfun;
pub mod validate;

pub use epstein::EwaldParams;
pub use error::{Error, Result};
pub use geometry::{Point2, Polygon, Vec2};
pub use greens::{PeriodicGreen, Torus};
pub use jellium_finite::{ChargeBlock, PolygonalDomain, SmearedCharge};
pub use lattice::Lattice;
pub use optimize::{OptimizerOptions, SphereConfiguration};
pub use periodic::{EnergyReport, PointConfiguration};
pub use renorm::BoundTable;
