//! Structure-preserving solver for nonisothermal multi-species Richards
//! flow with cross diffusion.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod constitutive;
pub mod diagnostics;
pub mod discretization;
pub mod error;
pub mod io;
pub mod linalg;
pub mod scalar;
pub mod scheme;

pub use constitutive::{Model, ModelParams};
pub use error::{Error, Result};
