//! Evaluators and identity checks for every step from the two-variable sum
//! `S_Q` down to complete exponential sums: quadratic completion, the
//! residue split, the additive representation of the character, Weyl
//! differencing with Taylor-difference functions, and Poisson summation.

pub mod form;
pub mod poisson;
pub mod split;
pub mod taylor;
pub mod weyl;

pub use form::{quadratic_completion, sum_sq, sum_sq1, sum_sq2, Completion, QuadraticForm, SumParams};
pub use split::{residue_split, sum_sigma, sum_t, PhaseFunction, ResidueClass};
pub use taylor::{certify_taylor_identities, DifferenceFunction, TaylorExpansion};
pub use poisson::{poisson_expansion, poisson_identity, ExpansionCheck, ExpansionSpec, PoissonCheck};
pub use weyl::{weyl_step, WeylReport};
