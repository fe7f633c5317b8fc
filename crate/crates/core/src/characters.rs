//! Dirichlet characters modulo `p^n` in generator + index form, exact phases,
//! and recovery of the Postnikov constant `a0` with
//! `chi(1 + p t) = e(a0 log_p(1 + p t) / p^n)`.

use std::fmt;
use std::ops::Mul;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::padic::{self, inv_mod, is_prime, padic_log, pow_u64, PAdicInt};

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// The root of unity `e(num / den)`, stored in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct UnitPhase {
    num: u64,
    den: u64,
}

impl UnitPhase {
    pub fn new(num: i128, den: u64) -> Self {
        assert!(den > 0, "phase denominator must be positive");
        let n = num.rem_euclid(den as i128) as u64;
        let g = gcd(n, den);
        UnitPhase { num: n / g, den: den / g }
    }

    pub fn one() -> Self {
        UnitPhase { num: 0, den: 1 }
    }

    pub fn numerator(&self) -> u64 {
        self.num
    }

    pub fn denominator(&self) -> u64 {
        self.den
    }

    /// Numerator over a denominator `d` that this phase's denominator divides.
    pub fn numerator_over(&self, d: u64) -> Option<u64> {
        (d % self.den == 0).then(|| self.num * (d / self.den))
    }

    pub fn conj(&self) -> Self {
        UnitPhase::new(-(self.num as i128), self.den)
    }

    pub fn pow(&self, k: i128) -> Self {
        let e = k.rem_euclid(self.den as i128);
        UnitPhase::new(self.num as i128 * e, self.den)
    }

    pub fn to_complex(&self) -> Complex64 {
        phase_complex(self.num as u128, self.den as u128)
    }
}

impl Mul for UnitPhase {
    type Output = UnitPhase;

    fn mul(self, rhs: UnitPhase) -> UnitPhase {
        let g = gcd(self.den, rhs.den);
        let l = self.den / g * rhs.den;
        let a = self.num as u128 * (l / self.den) as u128 + rhs.num as u128 * (l / rhs.den) as u128;
        UnitPhase::new((a % l as u128) as i128, l)
    }
}

impl fmt::Display for UnitPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e({}/{})", self.num, self.den)
    }
}

/// `e(num / den)` as a complex float.
pub fn phase_complex(num: u128, den: u128) -> Complex64 {
    let x = (num % den) as f64 / den as f64;
    let (s, c) = (std::f64::consts::TAU * x).sin_cos();
    Complex64::new(c, s)
}

/// Discrete-log table for `(Z/p^n Z)^*` with respect to its smallest
/// primitive root. Shared by all characters of the same modulus.
#[derive(Debug)]
pub struct DiscreteLogTable {
    p: u64,
    n: u32,
    modulus: u64,
    phi: u64,
    generator: u64,
    dlog: Vec<u32>,
}

const NOT_A_UNIT: u32 = u32::MAX;

impl DiscreteLogTable {
    pub fn new(p: u64, n: u32) -> Result<Arc<Self>> {
        if p <= 3 || !is_prime(p) {
            return Err(Error::Domain(format!("p = {p} must be a prime > 3")));
        }
        if n == 0 {
            return Err(Error::Domain("exponent n must be positive".into()));
        }
        let modulus = p
            .checked_pow(n)
            .filter(|&m| m < u32::MAX as u64)
            .ok_or_else(|| Error::Domain(format!("{p}^{n} is too large for a lookup table")))?;
        let phi = modulus / p * (p - 1);
        let generator = smallest_primitive_root(p);
        let mut dlog = vec![NOT_A_UNIT; modulus as usize];
        let mut x = 1u64;
        for k in 0..phi {
            if dlog[x as usize] != NOT_A_UNIT {
                return Err(Error::VerificationFailed(format!(
                    "{generator} has order {k} < {phi} modulo {modulus}"
                )));
            }
            dlog[x as usize] = k as u32;
            x = x * generator % modulus;
        }
        if x != 1 {
            return Err(Error::VerificationFailed(format!(
                "{generator}^{phi} != 1 modulo {modulus}"
            )));
        }
        Ok(Arc::new(DiscreteLogTable { p, n, modulus, phi, generator, dlog }))
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn phi(&self) -> u64 {
        self.phi
    }

    pub fn generator(&self) -> u64 {
        self.generator
    }

    /// Discrete log of `x` base the generator; `None` when `p | x`.
    #[inline]
    pub fn dlog(&self, x: u64) -> Option<u64> {
        match self.dlog[(x % self.modulus) as usize] {
            NOT_A_UNIT => None,
            k => Some(k as u64),
        }
    }
}

/// Smallest primitive root modulo every power of the odd prime `p`.
pub fn smallest_primitive_root(p: u64) -> u64 {
    let phi = p - 1;
    let mut factors = Vec::new();
    let mut m = phi;
    let mut d = 2;
    while d * d <= m {
        if m % d == 0 {
            factors.push(d);
            while m % d == 0 {
                m /= d;
            }
        }
        d += 1;
    }
    if m > 1 {
        factors.push(m);
    }
    let p2 = (p as u128) * (p as u128);
    (2..p)
        .find(|&g| {
            let g = g as u128;
            factors.iter().all(|&q| padic::pow_mod(g, (phi / q) as u128, p as u128) != 1)
                && padic::pow_mod(g, phi as u128, p2) != 1
        })
        .expect("every odd prime has a primitive root")
}

/// A Dirichlet character modulo `p^n` with `chi(g) = e(index / phi(p^n))`.
#[derive(Debug, Clone)]
pub struct DirichletCharacter {
    table: Arc<DiscreteLogTable>,
    index: u64,
    values: Arc<OnceLock<Vec<Complex64>>>,
}

impl DirichletCharacter {
    /// Any character (primitive or not) of the table's modulus.
    pub fn from_table(table: Arc<DiscreteLogTable>, index: u64) -> Self {
        let index = index % table.phi;
        DirichletCharacter { table, index, values: Arc::new(OnceLock::new()) }
    }

    /// A primitive character; `n >= 2` and `p` must not divide `index`.
    pub fn primitive_from_table(table: Arc<DiscreteLogTable>, index: u64) -> Result<Self> {
        if table.n < 2 {
            return Err(Error::Domain("primitive characters need n >= 2".into()));
        }
        if index % table.p == 0 {
            return Err(Error::NotPrimitive { index, modulus: table.modulus });
        }
        Ok(Self::from_table(table, index))
    }

    /// Builds the discrete-log table and a primitive character of index `index`.
    pub fn primitive(p: u64, n: u32, index: u64) -> Result<Self> {
        Self::primitive_from_table(DiscreteLogTable::new(p, n)?, index)
    }

    pub fn table(&self) -> &Arc<DiscreteLogTable> {
        &self.table
    }

    pub fn p(&self) -> u64 {
        self.table.p
    }

    pub fn n(&self) -> u32 {
        self.table.n
    }

    pub fn modulus(&self) -> u64 {
        self.table.modulus
    }

    pub fn phi(&self) -> u64 {
        self.table.phi
    }

    pub fn generator(&self) -> u64 {
        self.table.generator
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn is_primitive(&self) -> bool {
        self.table.n >= 2 && self.index % self.table.p != 0
    }

    /// The complex-conjugate character.
    pub fn conjugate(&self) -> Self {
        Self::from_table(self.table.clone(), (self.table.phi - self.index) % self.table.phi)
    }

    /// Phase numerator `k` with `chi(x) = e(k / phi)`; `None` when `p | x`.
    #[inline]
    pub fn phase_index(&self, x: i128) -> Option<u64> {
        let r = x.rem_euclid(self.table.modulus as i128) as u64;
        self.table
            .dlog(r)
            .map(|d| ((d as u128 * self.index as u128) % self.table.phi as u128) as u64)
    }

    /// Exact value of `chi(x)`; `None` stands for the value zero.
    pub fn eval(&self, x: i128) -> Option<UnitPhase> {
        self.phase_index(x).map(|k| UnitPhase::new(k as i128, self.table.phi))
    }

    /// Table of `chi(x)` as complex floats for every residue `x`, zero on
    /// non-units. Built on first use.
    pub fn value_table(&self) -> &[Complex64] {
        self.values.get_or_init(|| {
            let phi = self.table.phi;
            let roots: Vec<Complex64> =
                (0..phi).map(|k| phase_complex(k as u128, phi as u128)).collect();
            (0..self.table.modulus)
                .map(|x| match self.table.dlog(x) {
                    Some(d) => roots[((d as u128 * self.index as u128) % phi as u128) as usize],
                    None => Complex64::new(0.0, 0.0),
                })
                .collect()
        })
    }

    /// `chi(x)` as a complex float.
    #[inline]
    pub fn eval_complex(&self, x: i128) -> Complex64 {
        match self.phase_index(x) {
            Some(k) => phase_complex(k as u128, self.table.phi as u128),
            None => Complex64::new(0.0, 0.0),
        }
    }
}

/// The unit `a0 mod p^(n-1)` attached to a primitive character.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PostnikovConstant {
    pub a0: u64,
    pub modulus: u64,
}

/// Recovers `a0` from `t = 1` and verifies the identity for every
/// `t in [0, p^(n-1))` as an exact phase equality.
pub fn postnikov_a0(chi: &DirichletCharacter) -> Result<PostnikovConstant> {
    let logs = principal_unit_logs(chi.p(), chi.n())?;
    postnikov_a0_with_logs(chi, &logs)
}

/// `log_p(1 + p t) mod p^n` for `t in [0, p^(n-1))`; reusable across all
/// characters of one modulus.
pub fn principal_unit_logs(p: u64, n: u32) -> Result<Vec<u64>> {
    if n < 2 {
        return Err(Error::Domain("the Postnikov constant needs n >= 2".into()));
    }
    let count = pow_u64(p, n - 1);
    (0..count)
        .map(|t| {
            let x = PAdicInt::new(1 + (p as i128) * t as i128, p, n)?;
            Ok(padic_log(&x)?.value() as u64)
        })
        .collect()
}

pub fn postnikov_a0_with_logs(chi: &DirichletCharacter, logs: &[u64]) -> Result<PostnikovConstant> {
    if !chi.is_primitive() {
        return Err(Error::NotPrimitive { index: chi.index(), modulus: chi.modulus() });
    }
    let p = chi.p();
    let q = chi.modulus();
    let q1 = q / p;
    if logs.len() as u64 != q1 {
        return Err(Error::InvalidInput("log table has the wrong length".into()));
    }
    // t = 1: chi(1 + p) = e(k / p^(n-1)) and log_p(1 + p) = p * unit.
    let phase = chi.eval(1 + p as i128).expect("1 + p is a unit");
    let k = phase.numerator_over(q1).ok_or_else(|| {
        Error::VerificationFailed(format!("chi(1 + p) = {phase} has order not dividing p^(n-1)"))
    })?;
    let log_unit = logs[1] / p;
    let a0 = (k as u128 * inv_mod(log_unit as i128, q1 as u128)? % q1 as u128) as u64;
    if a0 % p == 0 {
        return Err(Error::VerificationFailed(format!("a0 = {a0} is not a unit")));
    }
    for (t, &log) in logs.iter().enumerate() {
        let lhs = chi.eval(1 + (p as i128) * t as i128).expect("1 + p t is a unit");
        let rhs = UnitPhase::new((a0 as u128 * log as u128 % q as u128) as i128, q);
        if lhs != rhs {
            return Err(Error::VerificationFailed(format!(
                "Postnikov identity fails at t = {t}: chi = {lhs}, additive side = {rhs}"
            )));
        }
    }
    Ok(PostnikovConstant { a0, modulus: q1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chi25() -> DirichletCharacter {
        DirichletCharacter::primitive(5, 2, 1).unwrap()
    }

    #[test]
    fn construct_mod_25() {
        let chi = chi25();
        assert_eq!(chi.generator(), 2);
        // order of 2 mod 25 is exactly 20
        let order = (1..=20u64).find(|&k| padic::pow_mod(2, k as u128, 25) == 1).unwrap();
        assert_eq!(order, 20);
        assert_eq!(chi.eval(2), Some(UnitPhase::new(1, 20)));
        assert_eq!(chi.eval(7), Some(UnitPhase::new(5, 20)));
        assert_eq!(chi.eval(7), Some(UnitPhase::new(1, 4)));
    }

    #[test]
    fn not_primitive_rejected() {
        assert!(matches!(
            DirichletCharacter::primitive(5, 2, 5),
            Err(Error::NotPrimitive { .. })
        ));
    }

    #[test]
    fn eval_examples() {
        let chi = chi25();
        assert_eq!(chi.eval(25), None);
        assert_eq!(chi.eval(1), Some(UnitPhase::new(0, 20)));
        assert_eq!(chi.eval(6), Some(UnitPhase::new(8, 20)));
    }

    #[test]
    fn a0_for_index_one_mod_25() {
        let chi = chi25();
        let a0 = postnikov_a0(&chi).unwrap();
        assert_eq!(a0.a0 % 5, 2);
        assert_eq!(a0.modulus, 5);
        // t = 2: chi(11) = e(16/20)
        assert_eq!(chi.eval(11), Some(UnitPhase::new(16, 20)));
    }

    #[test]
    fn conjugate_negates_a0() {
        for &(p, n) in &[(5u64, 3u32), (7, 2), (7, 3)] {
            let table = DiscreteLogTable::new(p, n).unwrap();
            for index in (1..table.phi()).filter(|i| i % p != 0).take(12) {
                let chi = DirichletCharacter::from_table(table.clone(), index);
                let a = postnikov_a0(&chi).unwrap();
                let b = postnikov_a0(&chi.conjugate()).unwrap();
                assert_eq!((a.a0 + b.a0) % a.modulus, 0);
            }
        }
    }

    #[test]
    fn multiplicativity_exhaustive_small() {
        for &(p, n) in &[(5u64, 2u32), (5, 3), (7, 2)] {
            let table = DiscreteLogTable::new(p, n).unwrap();
            let q = table.modulus() as i128;
            for index in [1u64, 3, table.phi() - 1] {
                let chi = DirichletCharacter::from_table(table.clone(), index);
                for x in 0..q {
                    for y in 0..q {
                        let lhs = chi.eval(x * y);
                        let rhs = chi.eval(x).zip(chi.eval(y)).map(|(a, b)| a * b);
                        assert_eq!(lhs, rhs);
                    }
                }
            }
        }
    }

    #[test]
    fn multiplicativity_on_625() {
        let table = DiscreteLogTable::new(5, 4).unwrap();
        let chi = DirichletCharacter::from_table(table, 7);
        for x in (1..625i128).filter(|x| x % 5 != 0) {
            for y in (1..625i128).step_by(7).filter(|y| y % 5 != 0) {
                assert_eq!(chi.eval(x * y).unwrap(), chi.eval(x).unwrap() * chi.eval(y).unwrap());
            }
        }
    }

    #[test]
    fn primitivity_iff_nontrivial_on_top_subgroup() {
        for &(p, n) in &[(5u64, 2u32), (5, 3), (7, 2), (7, 3)] {
            let table = DiscreteLogTable::new(p, n).unwrap();
            let top = pow_u64(p, n - 1) as i128;
            for index in 0..table.phi() {
                let chi = DirichletCharacter::from_table(table.clone(), index);
                let nontrivial =
                    (0..p as i128).any(|s| chi.eval(1 + top * s) != Some(UnitPhase::one()));
                assert_eq!(nontrivial, chi.is_primitive(), "p={p} n={n} index={index}");
            }
        }
    }

    #[test]
    fn value_table_matches_exact_phases() {
        let chi = DirichletCharacter::primitive(7, 3, 5).unwrap();
        let table = chi.value_table();
        for x in 0..chi.modulus() {
            let expect = chi.eval(x as i128).map(|u| u.to_complex()).unwrap_or_default();
            assert!((table[x as usize] - expect).norm() < 1e-15);
        }
    }

    #[test]
    fn phase_arithmetic() {
        let a = UnitPhase::new(1, 4);
        let b = UnitPhase::new(1, 6);
        assert_eq!(a * b, UnitPhase::new(5, 12));
        assert_eq!(a.pow(4), UnitPhase::one());
        assert_eq!(a.conj(), UnitPhase::new(3, 4));
        assert_eq!(UnitPhase::new(8, 20), UnitPhase::new(2, 5));
    }
}
