//! Generators, file formats and the experiment harness around `avgstretch`.

pub mod error;
pub mod experiment;
pub mod fit;
pub mod generators;
pub mod io;
pub mod props;

pub use error::{Error, Result};
