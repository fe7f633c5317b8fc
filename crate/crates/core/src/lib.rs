//! Exact arithmetic for short character sums at binary quadratic forms modulo
//! prime powers: p-adic kernels, Dirichlet characters, smooth weights, the
//! Weyl/Poisson pipeline, complete exponential sums, multiplicity audits and
//! exponent bookkeeping.

pub mod bounds;
pub mod characters;
pub mod expsums;
pub mod multiplicity;
pub mod error;
pub mod padic;
pub mod pipeline;
pub mod par;
pub mod poly;
pub mod weights;

pub use error::{Error, Result};
pub use par::Exec;
