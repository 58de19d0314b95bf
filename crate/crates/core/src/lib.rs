pub mod autodiff;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod model;
pub mod synthetic;
pub mod training;

pub use error::{Error, Result};
