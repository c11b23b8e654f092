pub mod ensembles;
pub mod exclusion;
pub mod error;
pub mod experiment;
pub mod ontic;
pub mod orbit;
pub mod qcore;
pub mod sphere;

pub use error::{Error, Result};
