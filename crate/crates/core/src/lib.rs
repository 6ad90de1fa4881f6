pub mod assembly;
pub mod cli;
pub mod coeff;
pub mod elliptic;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod parabolic;
pub mod quadrature;
pub mod reflect;

pub use error::{Error, Result};
