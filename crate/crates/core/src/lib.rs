pub mod amr;
pub mod cli;
pub mod error;
pub mod estimator;
pub mod expr;
pub mod fem;
pub mod io;
pub mod marking;
pub mod mesh;
pub mod model;
pub mod problems;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};
