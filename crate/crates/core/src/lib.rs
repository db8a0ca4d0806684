//! Simple-primitive compositional recognition with cross-branch semantic
//! attention and adversarial knowledge disentanglement, over fixed feature
//! vectors.

mod error;

pub mod analysis;
pub mod data;
pub mod eval;
pub mod losses;
pub mod model;
pub mod trainer;

pub use error::{Error, Result};
