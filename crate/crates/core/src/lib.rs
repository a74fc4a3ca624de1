pub mod cli;
pub mod distributions;
pub mod error;
pub mod geometry;
pub mod paleywiener;
pub mod quadrature;
pub mod special;
pub mod spherical;
pub mod transform;

pub use error::{Error, Result};
pub use geometry::{Factor, FactorKind, SpaceDescriptor, SpectralPoint, Weight};
