pub mod analysis;
pub mod data;
pub mod error;
pub mod feature_maps;
pub mod filters;
pub mod harness;
pub mod quadrature;

pub use error::{Error, Result};
