//! Exact-rational bubble transform for piecewise polynomial differential forms.

pub mod chains;
pub mod error;
pub mod exec;
pub mod form;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod operators;
pub mod poly;
pub mod polyform;
pub mod random;
pub mod rational;
pub mod report;
pub mod simplex;
pub mod transform;
pub mod verify;
pub mod weights;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use rational::Q;
