//! Differentially private persistence diagrams built on distance-to-measure
//! filtrations, with the supporting geometry, persistence and matching code.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod complex;
pub mod dtm;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod io;
pub mod mechanism;
pub mod metric;
pub mod persistence;
pub mod pipeline;
pub mod sensitivity;

pub use error::{Error, Result};
