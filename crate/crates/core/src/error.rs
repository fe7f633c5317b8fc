use thiserror::Error;

/// Errors raised by the arithmetic kernels, evaluators and audits.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{value} is not invertible modulo {modulus}")]
    NotInvertible { value: i128, modulus: u128 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{value} is not a quadratic residue modulo {p}")]
    NonResidue { value: i128, p: u64 },

    #[error("character index {index} modulo {modulus} is not primitive")]
    NotPrimitive { index: u64, modulus: u64 },

    #[error("verification failed: {0}")]
    VerificationFailed(String),

    #[error("tolerance not met: {0}")]
    ToleranceNotMet(String),

    #[error("bad quadratic form: {0}")]
    BadForm(String),

    #[error("precision loss: {0}")]
    PrecisionLoss(String),

    #[error("denominator vanishes identically modulo {p}")]
    DegenerateDenominator { p: u64 },

    #[error("denominator vanishes modulo {p} at {at}")]
    DenominatorVanishes { p: u64, at: i128 },

    #[error("hypothesis m >= t + 2 violated (m = {m}, t = {t})")]
    HypothesisViolated { m: u32, t: i64 },

    #[error("parameter violation: {0}")]
    ParamViolation(String),

    #[error("claim violated: {0}")]
    ClaimViolated(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("operands carry different (p, prec)")]
    PrecisionMismatch,

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
