//! Self-similar blowup of the radial quadratic wave equation in seven
//! dimensions, analysed in hyperboloidal similarity coordinates.

pub mod error;
pub mod evolution;
pub mod geometry;
pub mod jet;
pub mod polyalg;
pub mod profiles;
pub mod resolvent;
pub mod spectral;

pub use error::{Error, Result};
