pub mod error;
pub mod grid;
pub mod nonlinearity;
pub mod paths;
pub mod pohozaev;
pub mod quad;
pub mod solver;
pub mod transform;

pub use error::{Error, Result};
