//! Sparse geometric graphs whose average stretch factor tends to one.
//!
//! The construction clusters the input with a k-partition derived from a
//! fair-split tree, joins all points with a 2-spanner ("roads"), joins one
//! hub per cluster with a finer spanner ("highways"), and wires each
//! cluster to a representative point of a dense nearby region.

pub mod construct;
pub mod error;
pub mod evaluate;
pub mod fairsplit;
pub mod geometry;
pub mod graph;
mod kdtree;
pub mod rangetree;
pub mod spanners;

pub use error::{Error, Result};
pub use geometry::{AABox, Ball, PointSet};
pub use graph::Graph;
