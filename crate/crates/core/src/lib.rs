pub mod container;
pub mod error;
pub mod harness;
pub mod krylov;
pub mod linops;
pub mod mesh;
pub mod model;
pub mod steppers;
pub mod trisk_ops;

pub use error::{Error, Result};
