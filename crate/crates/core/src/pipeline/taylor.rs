//! p-adic Taylor expansion of `F` and the difference functions built from it.
//!
//! With `T = v + p w` and `D = β + T^2` (a unit), `F(w) = a0 log(D) + const`,
//! so `F(w + Δ) - F(w) = Σ_j c_j(w) Δ^j` with
//!
//! `c_j = a0 Σ_{m=ceil(j/2)}^{j} (-1)^(m+1) C(m, j-m) 2^(2m-j) (p^j / m) T^(2m-j) / D^m`.
//!
//! Every `c_j` is p-integral and `ord_p(c_j) >= j - floor(log_p j)`, which
//! fixes where the series may be cut at a given precision.

use serde::Serialize;

use super::split::PhaseFunction;
use crate::error::{Error, Result};
use crate::padic::{add_mod, inv_mod, mul_mod, pow_mod, pow_u128, reduce, split_p_power, sub_mod};
use crate::poly::{IntPolynomial, RationalFunc};

const MAX_TERMS: u32 = 200;

fn binom(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// `floor(log_p j)`.
fn floor_log(p: u64, j: u32) -> u32 {
    let mut e = 0;
    let mut pw = p;
    while pw <= j as u64 {
        pw *= p;
        e += 1;
    }
    e
}

/// Lower bound for `ord_p(c_j)`.
pub fn coefficient_order(p: u64, j: u32) -> u32 {
    j - floor_log(p, j)
}

/// Largest `j` whose term can still fall below valuation `target`, when the
/// `j`-th term carries `coefficient_order(j) + slope * j - offset` powers of `p`.
fn last_term(p: u64, target: u32, slope: u32, offset: u32) -> Result<u32> {
    if slope == 0 {
        return Err(Error::Domain("shift exponents must be at least 1".into()));
    }
    let mut j = 1;
    let mut last = 1;
    while j <= MAX_TERMS {
        let v = (coefficient_order(p, j) + slope * j).saturating_sub(offset);
        if v < target {
            last = j;
        } else if j > last + 2 * p as u32 {
            return Ok(last);
        }
        j += 1;
    }
    Err(Error::PrecisionLoss(format!(
        "Taylor series needs more than {MAX_TERMS} terms to reach valuation {target}"
    )))
}

/// Exact coefficients `κ_{j,m}` and evaluation of `c_j` for one phase
/// function, modulo `p^n`.
#[derive(Debug, Clone)]
pub struct TaylorExpansion {
    pub p: u64,
    pub n: u32,
    pub modulus: u128,
    a0: u128,
    beta: u128,
    v: u128,
}

impl TaylorExpansion {
    pub fn new(f: &PhaseFunction) -> Self {
        TaylorExpansion { p: f.p, n: f.n, modulus: f.modulus, a0: f.a0, beta: f.beta, v: f.v }
    }

    /// `a0 (-1)^(m+1) C(m, j-m) 2^(2m-j) p^j / m mod p^n`.
    fn kappa(&self, j: u32, m: u32) -> u128 {
        let md = self.modulus;
        let (e, unit) = split_p_power(m as u64, self.p);
        let shift = j - e;
        if shift >= self.n {
            return 0;
        }
        let mut c = pow_u128(self.p, shift).unwrap();
        c = mul_mod(c, binom(m as u64, (j - m) as u64) % md, md);
        c = mul_mod(c, pow_mod(2, (2 * m - j) as u128, md), md);
        c = mul_mod(c, inv_mod(unit as i128, md).expect("unit"), md);
        c = mul_mod(c, self.a0 % md, md);
        if m % 2 == 0 {
            sub_mod(0, c, md)
        } else {
            c
        }
    }

    /// `c_j(w) mod p^n`.
    pub fn coefficient(&self, j: u32, w: i128) -> u128 {
        let md = self.modulus;
        let t = add_mod(self.v, mul_mod(self.p as u128, reduce(w, md), md), md);
        let d = add_mod(self.beta, mul_mod(t, t, md), md);
        let dinv = inv_mod(d as i128, md).expect("D is a unit");
        let mut acc = 0;
        for m in j.div_ceil(2)..=j {
            let k = self.kappa(j, m);
            if k == 0 {
                continue;
            }
            let term = mul_mod(
                mul_mod(k, pow_mod(t, (2 * m - j) as u128, md), md),
                pow_mod(dinv, m as u128, md),
                md,
            );
            acc = add_mod(acc, term, md);
        }
        acc
    }

    /// `F'(w) = c_1(w)`.
    pub fn f_prime(&self, w: i128) -> u128 {
        self.coefficient(1, w)
    }

    /// `F''(w) = 2 c_2(w)`.
    pub fn f_second(&self, w: i128) -> u128 {
        mul_mod(2, self.coefficient(2, w), self.modulus)
    }

    /// `G_h1(w) = Σ_{j>=2} c_j h1^(j-1) p^(k1(j-2))`, so that
    /// `F(w + p^k1 h1) - F(w) = p^k1 h1 (F'(w) + p^k1 G_h1(w))`.
    pub fn g1(&self, k1: u32, h1: i128, w: i128) -> Result<u128> {
        let md = self.modulus;
        let jmax = last_term(self.p, self.n + 2 * k1, k1, 0)?;
        let h = reduce(h1, md);
        let pk = pow_mod(self.p as u128, k1 as u128, md);
        let mut acc = 0;
        for j in 2..=jmax {
            let f = mul_mod(pow_mod(h, (j - 1) as u128, md), pow_mod(pk, (j - 2) as u128, md), md);
            acc = add_mod(acc, mul_mod(self.coefficient(j, w), f, md), md);
        }
        Ok(acc)
    }

    /// `G_{h1,h2}(w) = Σ_{j>=3} c_j Σ_{a=1}^{j-1} C(j,a) Δ1^(a-1) Δ2^(j-a-1) / p^k`
    /// with `Δi = p^ki hi` and `k = min(k1, k2)`.
    pub fn g2(&self, k1: u32, k2: u32, h1: i128, h2: i128, w: i128) -> Result<u128> {
        let md = self.modulus;
        let k = k1.min(k2);
        let jmax = last_term(self.p, self.n + 2 * k, k, 0)?;
        let wide = pow_u128(self.p, self.n + k).ok_or_else(|| Error::Domain("modulus too large".into()))?;
        let pk = pow_u128(self.p, k).unwrap();
        let d1 = mul_mod(pow_u128(self.p, k1).unwrap() % wide, reduce(h1, wide), wide);
        let d2 = mul_mod(pow_u128(self.p, k2).unwrap() % wide, reduce(h2, wide), wide);
        let mut acc = 0;
        for j in 3..=jmax {
            let mut inner = 0u128;
            for a in 1..j {
                let t = mul_mod(pow_mod(d1, (a - 1) as u128, wide), pow_mod(d2, (j - a - 1) as u128, wide), wide);
                inner = add_mod(inner, mul_mod(binom(j as u64, a as u64) % wide, t, wide), wide);
            }
            debug_assert_eq!(inner % pk, 0);
            let inner = (inner / pk) % md;
            acc = add_mod(acc, mul_mod(self.coefficient(j, w), inner, md), md);
        }
        Ok(acc)
    }

    /// `c_j` as a rational function of `w` over the common denominator
    /// `D^den_power`, coefficients reduced modulo `modulus` (a divisor of `p^n`).
    fn coefficient_rational(&self, j: u32, den_power: u32, modulus: u128) -> IntPolynomial {
        let t = IntPolynomial::linear(self.v as i128, self.p as i128);
        let d = poly_add_mod(&IntPolynomial::constant(self.beta as i128), &poly_mul_mod(&t, &t, modulus), modulus);
        let mut num = IntPolynomial::zero();
        for m in j.div_ceil(2)..=j {
            let k = self.kappa(j, m) % modulus;
            if k == 0 {
                continue;
            }
            let tp = poly_pow_mod(&t, 2 * m - j, modulus);
            let dp = poly_pow_mod(&d, den_power - m, modulus);
            let term = poly_scale_mod(&poly_mul_mod(&tp, &dp, modulus), k, modulus);
            num = poly_add_mod(&num, &term, modulus);
        }
        num
    }

    fn denominator(&self, power: u32, modulus: u128) -> IntPolynomial {
        let t = IntPolynomial::linear(self.v as i128, self.p as i128);
        let d = poly_add_mod(&IntPolynomial::constant(self.beta as i128), &poly_mul_mod(&t, &t, modulus), modulus);
        poly_pow_mod(&d, power, modulus)
    }

    /// `f1 = g1 (F' + p^k1 G_{p^l1 g1}) = Σ_j c_j g1^j p^((k1+l1)(j-1))` as a
    /// rational function modulo `p^s1`, `s1 = n - k1 - l1`.
    pub fn f1(&self, k1: u32, l1: u32, g1: i128) -> Result<DifferenceFunction> {
        let v = k1 + l1;
        if k1 == 0 || v >= self.n {
            return Err(Error::Domain(format!("need k1 >= 1 and k1 + l1 < n (k1 = {k1}, l1 = {l1})")));
        }
        let s = self.n - v;
        let ms = pow_u128(self.p, s).unwrap();
        let jmax = last_term(self.p, s, v, v)?;
        let mut num = IntPolynomial::zero();
        let pv = pow_u128(self.p, v).unwrap() % ms;
        let g = reduce(g1, ms);
        for j in 1..=jmax {
            let factor = mul_mod(pow_mod(g, j as u128, ms), pow_mod(pv, (j - 1) as u128, ms), ms);
            if factor == 0 {
                continue;
            }
            let cj = self.coefficient_rational(j, jmax, ms);
            num = poly_add_mod(&num, &poly_scale_mod(&cj, factor, ms), ms);
        }
        let den = self.denominator(jmax, ms);
        Ok(DifferenceFunction { f: RationalFunc::new(num, den)?, s, terms: jmax })
    }

    /// `f2 = g1 g2 (F'' + p^k G_{h1,h2})
    ///     = Σ_j c_j Σ_{a=1}^{j-1} C(j,a) g1^a g2^(j-a) P1^(a-1) P2^(j-a-1)`
    /// with `Pi = p^(ki+li)`, modulo `p^s2`, `s2 = n - (k1+k2+l1+l2)`.
    pub fn f2(&self, k1: u32, k2: u32, l1: u32, l2: u32, g1: i128, g2: i128) -> Result<DifferenceFunction> {
        let (v1, v2) = (k1 + l1, k2 + l2);
        if k1 == 0 || k2 == 0 || v1 + v2 >= self.n {
            return Err(Error::Domain(format!(
                "need k1, k2 >= 1 and k1 + k2 + l1 + l2 < n (got {k1}, {k2}, {l1}, {l2})"
            )));
        }
        let s = self.n - v1 - v2;
        let ms = pow_u128(self.p, s).unwrap();
        let slope = v1.min(v2);
        let jmax = last_term(self.p, s, slope, 2 * slope)?.max(2);
        let p1 = pow_u128(self.p, v1).unwrap() % ms;
        let p2 = pow_u128(self.p, v2).unwrap() % ms;
        let (g1, g2) = (reduce(g1, ms), reduce(g2, ms));
        let mut num = IntPolynomial::zero();
        for j in 2..=jmax {
            let mut factor = 0u128;
            for a in 1..j {
                let t = [
                    binom(j as u64, a as u64) % ms,
                    pow_mod(g1, a as u128, ms),
                    pow_mod(g2, (j - a) as u128, ms),
                    pow_mod(p1, (a - 1) as u128, ms),
                    pow_mod(p2, (j - a - 1) as u128, ms),
                ]
                .into_iter()
                .fold(1u128, |acc, x| mul_mod(acc, x, ms));
                factor = add_mod(factor, t, ms);
            }
            if factor == 0 {
                continue;
            }
            let cj = self.coefficient_rational(j, jmax, ms);
            num = poly_add_mod(&num, &poly_scale_mod(&cj, factor, ms), ms);
        }
        let den = self.denominator(jmax, ms);
        Ok(DifferenceFunction { f: RationalFunc::new(num, den)?, s, terms: jmax })
    }

    /// `G_h1` as a rational function modulo `p^n`.
    pub fn g1_rational(&self, k1: u32, h1: i128) -> Result<RationalFunc> {
        let md = self.modulus;
        let jmax = last_term(self.p, self.n + 2 * k1, k1, 0)?;
        let h = reduce(h1, md);
        let pk = pow_mod(self.p as u128, k1 as u128, md);
        let mut num = IntPolynomial::zero();
        for j in 2..=jmax {
            let f = mul_mod(pow_mod(h, (j - 1) as u128, md), pow_mod(pk, (j - 2) as u128, md), md);
            num = poly_add_mod(&num, &poly_scale_mod(&self.coefficient_rational(j, jmax, md), f, md), md);
        }
        RationalFunc::new(num, self.denominator(jmax, md))
    }
}

/// `f_i` together with its modulus exponent `s_i` and the number of Taylor
/// terms kept.
#[derive(Debug, Clone, Serialize)]
pub struct DifferenceFunction {
    pub f: RationalFunc,
    pub s: u32,
    pub terms: u32,
}

/// Direct difference `F(w + Δ) - F(w)` divided by `p^(k1+l1)`, mod `p^s1`.
pub fn direct_f1(f: &PhaseFunction, k1: u32, l1: u32, g1: i128, w: i128) -> u128 {
    let v = k1 + l1;
    let pv = pow_u128(f.p, v).unwrap();
    let delta = pv as i128 * g1;
    let diff = sub_mod(f.eval(w + delta), f.eval(w), f.modulus);
    debug_assert_eq!(diff % pv, 0);
    diff / pv
}

/// Direct four-term difference divided by `p^(k1+k2+l1+l2)`, mod `p^s2`.
pub fn direct_f2(f: &PhaseFunction, k1: u32, k2: u32, l1: u32, l2: u32, g1: i128, g2: i128, w: i128) -> u128 {
    let m = f.modulus;
    let d1 = pow_u128(f.p, k1 + l1).unwrap() as i128 * g1;
    let d2 = pow_u128(f.p, k2 + l2).unwrap() as i128 * g2;
    let four = add_mod(
        sub_mod(sub_mod(f.eval(w + d1 + d2), f.eval(w + d1), m), f.eval(w + d2), m),
        f.eval(w),
        m,
    );
    let pv = pow_u128(f.p, k1 + k2 + l1 + l2).unwrap();
    debug_assert_eq!(four % pv, 0);
    four / pv
}

/// Verifies both difference identities at `w`:
/// `F(w + p^k1 h1) - F(w) = p^k1 h1 (F'(w) + p^k1 G_h1(w))` and
/// `F(w+Δ1+Δ2) - F(w+Δ1) - F(w+Δ2) + F(w) = p^(k1+k2) h1 h2 (F''(w) + p^k G_{h1,h2}(w))`.
pub fn certify_taylor_identities(
    f: &PhaseFunction,
    k1: u32,
    k2: u32,
    h1: i128,
    h2: i128,
    w: i128,
) -> Result<()> {
    let te = TaylorExpansion::new(f);
    let m = f.modulus;
    let p = f.p as u128;
    let pk1 = pow_mod(p, k1 as u128, m);
    let pk2 = pow_mod(p, k2 as u128, m);
    let d1 = pk1 as i128 * h1;
    let d2 = pk2 as i128 * h2;

    let lhs1 = sub_mod(f.eval(w + d1), f.eval(w), m);
    let inner1 = add_mod(te.f_prime(w), mul_mod(pk1, te.g1(k1, h1, w)?, m), m);
    let rhs1 = mul_mod(mul_mod(pk1, reduce(h1, m), m), inner1, m);
    if lhs1 != rhs1 {
        return Err(Error::VerificationFailed(format!(
            "first difference identity fails: w = {w}, k1 = {k1}, h1 = {h1}: {lhs1} != {rhs1}"
        )));
    }

    let lhs2 = add_mod(
        sub_mod(sub_mod(f.eval(w + d1 + d2), f.eval(w + d1), m), f.eval(w + d2), m),
        f.eval(w),
        m,
    );
    let pk = pow_mod(p, k1.min(k2) as u128, m);
    let inner2 = add_mod(te.f_second(w), mul_mod(pk, te.g2(k1, k2, h1, h2, w)?, m), m);
    let rhs2 = [mul_mod(pk1, pk2, m), reduce(h1, m), reduce(h2, m), inner2]
        .into_iter()
        .fold(1u128, |acc, x| mul_mod(acc, x, m));
    if lhs2 != rhs2 {
        return Err(Error::VerificationFailed(format!(
            "second difference identity fails: w = {w}, k = ({k1}, {k2}), h = ({h1}, {h2}): {lhs2} != {rhs2}"
        )));
    }
    Ok(())
}

/// Checks `f_i(r)` against the direct differences for every `r mod p^s_i`.
pub fn certify_difference_function(
    f: &PhaseFunction,
    df: &DifferenceFunction,
    direct: impl Fn(i128) -> u128,
) -> Result<()> {
    let ms = pow_u128(f.p, df.s).unwrap();
    for r in 0..ms as i128 {
        let a = df.f.eval_mod(r, ms)?;
        let b = direct(r) % ms;
        if a != b {
            return Err(Error::VerificationFailed(format!(
                "difference function disagrees with direct differencing at r = {r}: {a} != {b}"
            )));
        }
    }
    Ok(())
}

fn poly_add_mod(a: &IntPolynomial, b: &IntPolynomial, m: u128) -> IntPolynomial {
    let n = a.coeffs().len().max(b.coeffs().len());
    IntPolynomial::new(
        (0..n)
            .map(|i| add_mod(reduce(a.coeff(i), m), reduce(b.coeff(i), m), m) as i128)
            .collect(),
    )
}

fn poly_mul_mod(a: &IntPolynomial, b: &IntPolynomial, m: u128) -> IntPolynomial {
    if a.is_zero() || b.is_zero() {
        return IntPolynomial::zero();
    }
    let mut out = vec![0u128; a.coeffs().len() + b.coeffs().len() - 1];
    for (i, &x) in a.coeffs().iter().enumerate() {
        for (j, &y) in b.coeffs().iter().enumerate() {
            out[i + j] = add_mod(out[i + j], mul_mod(reduce(x, m), reduce(y, m), m), m);
        }
    }
    IntPolynomial::new(out.into_iter().map(|c| c as i128).collect())
}

fn poly_pow_mod(a: &IntPolynomial, k: u32, m: u128) -> IntPolynomial {
    (0..k).fold(IntPolynomial::constant(1 % m as i128), |acc, _| poly_mul_mod(&acc, a, m))
}

fn poly_scale_mod(a: &IntPolynomial, c: u128, m: u128) -> IntPolynomial {
    IntPolynomial::new(a.coeffs().iter().map(|&x| mul_mod(reduce(x, m), c, m) as i128).collect())
}
