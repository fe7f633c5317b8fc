//! Integer polynomials and rational functions with exact coefficients.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::padic::{inv_mod, mul_mod, ord_p_int, reduce, Valuation};

/// Polynomial with `i128` coefficients in ascending degree, trailing zeros
/// trimmed. Arithmetic panics on overflow rather than wrapping.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize)]
pub struct IntPolynomial {
    coeffs: Vec<i128>,
}

impl IntPolynomial {
    pub fn new(mut coeffs: Vec<i128>) -> Self {
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        IntPolynomial { coeffs }
    }

    pub fn zero() -> Self {
        IntPolynomial { coeffs: Vec::new() }
    }

    pub fn constant(c: i128) -> Self {
        Self::new(vec![c])
    }

    /// `a + b x`.
    pub fn linear(a: i128, b: i128) -> Self {
        Self::new(vec![a, b])
    }

    pub fn monomial(c: i128, k: usize) -> Self {
        let mut v = vec![0; k + 1];
        v[k] = c;
        Self::new(v)
    }

    pub fn coeffs(&self) -> &[i128] {
        &self.coeffs
    }

    /// Coefficient of `x^k` (zero past the degree).
    pub fn coeff(&self, k: usize) -> i128 {
        self.coeffs.get(k).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Self::new(
            (0..n)
                .map(|i| self.coeff(i).checked_add(rhs.coeff(i)).expect("coefficient overflow"))
                .collect(),
        )
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.scale(-1))
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::zero();
        }
        let mut out = vec![0i128; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                let t = a.checked_mul(b).expect("coefficient overflow");
                out[i + j] = out[i + j].checked_add(t).expect("coefficient overflow");
            }
        }
        Self::new(out)
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::constant(1), |acc, _| acc.mul(self))
    }

    pub fn scale(&self, c: i128) -> Self {
        Self::new(
            self.coeffs.iter().map(|&a| a.checked_mul(c).expect("coefficient overflow")).collect(),
        )
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &a)| a.checked_mul(i as i128).expect("coefficient overflow"))
                .collect(),
        )
    }

    /// `self(inner(x))`.
    pub fn compose(&self, inner: &Self) -> Self {
        self.coeffs
            .iter()
            .rev()
            .fold(Self::zero(), |acc, &c| acc.mul(inner).add(&Self::constant(c)))
    }

    /// Exact division by `d`; `None` if some coefficient is not divisible.
    pub fn div_exact(&self, d: i128) -> Option<Self> {
        self.coeffs
            .iter()
            .map(|&a| (a % d == 0).then(|| a / d))
            .collect::<Option<Vec<_>>>()
            .map(Self::new)
    }

    pub fn eval(&self, x: i128) -> i128 {
        self.coeffs.iter().rev().fold(0i128, |acc, &c| {
            acc.checked_mul(x).and_then(|v| v.checked_add(c)).expect("evaluation overflow")
        })
    }

    pub fn eval_mod(&self, x: i128, m: u128) -> u128 {
        let xr = reduce(x, m);
        self.coeffs
            .iter()
            .rev()
            .fold(0u128, |acc, &c| (mul_mod(acc, xr, m) + reduce(c, m)) % m)
    }

    /// Fast evaluation for moduli below `2^32`, with coefficients already
    /// reduced by [`IntPolynomial::reduced_u64`].
    #[inline]
    pub fn eval_reduced_u64(coeffs: &[u64], x: u64, m: u64) -> u64 {
        coeffs.iter().rev().fold(0u64, |acc, &c| (acc * x + c) % m)
    }

    pub fn reduced_u64(&self, m: u64) -> Vec<u64> {
        self.coeffs.iter().map(|&c| reduce(c, m as u128) as u64).collect()
    }

    /// Coefficients reduced into `[0, m)`.
    pub fn reduce_mod(&self, m: u128) -> Self {
        Self::new(self.coeffs.iter().map(|&c| reduce(c, m) as i128).collect())
    }

    /// Minimum coefficient valuation; infinite for zero.
    pub fn ord_p(&self, p: u64) -> Valuation {
        self.coeffs
            .iter()
            .map(|&c| ord_p_int(c, p))
            .min()
            .unwrap_or(Valuation::Infinite)
    }

    /// Removes the `p`-power content.
    pub fn strip_content(&self, p: u64) -> (u32, Self) {
        match self.ord_p(p) {
            Valuation::Infinite => (0, self.clone()),
            Valuation::Finite(k) => {
                let d = (p as i128).pow(k);
                (k, self.div_exact(d).expect("content divides every coefficient"))
            }
        }
    }

    /// Coefficients mod `p` as a polynomial over `F_p`.
    pub fn to_fp(&self, p: u64) -> FpPoly {
        FpPoly::new(p, self.coeffs.iter().map(|&c| reduce(c, p as u128) as u64).collect())
    }
}

impl fmt::Display for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            let sign = if c < 0 { "-" } else { "+" };
            if first {
                if c < 0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let a = c.unsigned_abs();
            match (i, a) {
                (0, _) => write!(f, "{a}")?,
                (1, 1) => write!(f, "x")?,
                (1, _) => write!(f, "{a}x")?,
                (_, 1) => write!(f, "x^{i}")?,
                _ => write!(f, "{a}x^{i}")?,
            }
        }
        Ok(())
    }
}

/// Polynomial over `F_p`, coefficients in `[0, p)`, trimmed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FpPoly {
    p: u64,
    coeffs: Vec<u64>,
}

impl FpPoly {
    pub fn new(p: u64, coeffs: Vec<u64>) -> Self {
        let mut coeffs: Vec<u64> = coeffs.into_iter().map(|c| c % p).collect();
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        FpPoly { p, coeffs }
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, x: u64) -> u64 {
        let p = self.p;
        self.coeffs.iter().rev().fold(0u64, |acc, &c| ((acc as u128 * x as u128 + c as u128) % p as u128) as u64)
    }

    /// Quotient by `x - a` when `a` is a root.
    fn deflate(&self, a: u64) -> Option<FpPoly> {
        if self.is_zero() || self.eval(a) != 0 {
            return None;
        }
        let p = self.p as u128;
        let n = self.coeffs.len();
        let mut q = vec![0u64; n - 1];
        let mut carry = 0u128;
        for i in (1..n).rev() {
            carry = (carry * a as u128 + self.coeffs[i] as u128) % p;
            q[i - 1] = carry as u64;
        }
        Some(FpPoly::new(self.p, q))
    }

    /// Multiplicity of `a` as a root, by repeated synthetic division.
    pub fn root_multiplicity(&self, a: u64) -> u32 {
        let mut cur = self.clone();
        let mut k = 0;
        while let Some(q) = cur.deflate(a % self.p) {
            k += 1;
            cur = q;
        }
        k
    }
}

/// Rational function `num / den` over the integers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RationalFunc {
    pub num: IntPolynomial,
    pub den: IntPolynomial,
}

impl RationalFunc {
    pub fn new(num: IntPolynomial, den: IntPolynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::InvalidInput("zero denominator".into()));
        }
        Ok(RationalFunc { num, den })
    }

    pub fn polynomial(num: IntPolynomial) -> Self {
        RationalFunc { num, den: IntPolynomial::constant(1) }
    }

    /// `(N'D - ND') / D^2`, without cancellation.
    pub fn derivative(&self) -> Self {
        let num = self.num.derivative().mul(&self.den).sub(&self.num.mul(&self.den.derivative()));
        RationalFunc { num, den: self.den.mul(&self.den) }
    }

    /// `ord_p(num) - ord_p(den)`; `None` when the numerator is zero.
    pub fn ord_p(&self, p: u64) -> Option<i64> {
        let n = self.num.ord_p(p).finite()?;
        let d = self.den.ord_p(p).finite().expect("denominator is nonzero");
        Some(n as i64 - d as i64)
    }

    pub fn add(&self, rhs: &Self) -> Self {
        if self.den == rhs.den {
            return RationalFunc { num: self.num.add(&rhs.num), den: self.den.clone() };
        }
        RationalFunc {
            num: self.num.mul(&rhs.den).add(&rhs.num.mul(&self.den)),
            den: self.den.mul(&rhs.den),
        }
    }

    pub fn scale(&self, c: i128) -> Self {
        RationalFunc { num: self.num.scale(c), den: self.den.clone() }
    }

    /// `f(x) mod m`; the denominator must be a unit mod `m`.
    pub fn eval_mod(&self, x: i128, m: u128) -> Result<u128> {
        let d = self.den.eval_mod(x, m);
        let inv = inv_mod(d as i128, m).map_err(|_| Error::DenominatorVanishes {
            p: smallest_prime_factor(m),
            at: x,
        })?;
        Ok(mul_mod(self.num.eval_mod(x, m), inv, m))
    }
}

impl fmt::Display for RationalFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == IntPolynomial::constant(1) {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({}) / ({})", self.num, self.den)
        }
    }
}

fn smallest_prime_factor(m: u128) -> u64 {
    (2..).find(|&d| m % d as u128 == 0).unwrap_or(1)
}
