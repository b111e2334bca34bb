pub mod crossed;
pub mod error;
pub mod gasket;
pub mod lattice;
pub mod operator;
pub mod rotation;
pub mod spectral;
pub mod torus;
pub mod uhf;

pub use error::{Error, Result};
