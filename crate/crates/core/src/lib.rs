pub mod conformal;
pub mod count;
pub mod domain;
pub mod error;
pub mod dirac;
pub mod field;
pub mod fourier;
pub mod gauge;
pub mod hardy;
pub mod index;
pub mod linalg;
pub mod mesh;
pub mod planar;
pub mod quadrature;
pub mod radial;
pub mod routes;
pub mod scenario;
pub mod semiclassical;

pub use error::{Error, Result};
