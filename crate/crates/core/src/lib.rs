//! Port-Hamiltonian finite elements for Mindlin plates and Timoshenko beams.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod boundary;
pub mod check;
pub mod error;
pub mod integrate;
pub mod linalg;
pub mod material;
pub mod mesh;
pub mod phcore;
pub mod ports;
pub mod signal;
pub mod spectral;
pub mod timoshenko;

pub use error::{Error, ErrorCategory, Result};
