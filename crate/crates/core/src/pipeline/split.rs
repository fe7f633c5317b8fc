//! The one-variable sum `T`, its split into residue classes `y = p w + v`,
//! and the additive representation `χ(β + (pw + v)^2) = χ(u) e(F(w) / p^n)`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::characters::{phase_complex, DirichletCharacter, UnitPhase};
use crate::error::{Error, Result};
use crate::padic::{add_mod, hensel_sqrt, inv_mod, mul_mod, pow_u128, reduce, sqrt_mod_p, LogSeries};
use crate::weights::SmoothWeight;

/// One class of the split: `u mod p` and a root `v` of `v^2 = u - β mod p^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ResidueClass {
    pub u: u64,
    /// `v mod p`.
    pub v0: u64,
    /// Hensel lift of `v0` in `[0, p^n)`.
    pub v: u128,
}

/// All `(u, v)` with `u ≢ 0, β mod p`, `u - β` a square mod `p`, both roots.
pub fn residue_split(beta: i128, p: u64, n: u32) -> Result<Vec<ResidueClass>> {
    let modulus = pow_u128(p, n).ok_or_else(|| Error::Domain(format!("{p}^{n} is too large")))?;
    let mut out = Vec::new();
    for u in 1..p {
        let d = (u as i128 - beta).rem_euclid(p as i128);
        if d == 0 {
            continue;
        }
        let Ok(r) = sqrt_mod_p(d, p) else { continue };
        let v = hensel_sqrt(u as i128 - beta, p, n)?;
        debug_assert_eq!(v % p as u128, r as u128);
        out.push(ResidueClass { u, v0: r, v });
        out.push(ResidueClass { u, v0: p - r, v: modulus - v });
    }
    Ok(out)
}

/// Checks that each `y mod p^n` with `p ∤ y (β + y^2)` lies in exactly one
/// class and every other residue in none; returns the number covered.
pub fn certify_split(beta: i128, p: u64, n: u32, classes: &[ResidueClass]) -> Result<u64> {
    let modulus = pow_u128(p, n).expect("checked by residue_split");
    for c in classes {
        let lhs = mul_mod(c.v, c.v, modulus);
        if lhs != reduce(c.u as i128 - beta, modulus) || c.v % p as u128 != c.v0 as u128 {
            return Err(Error::VerificationFailed(format!("bad lift {c:?} for beta = {beta}")));
        }
    }
    let mut covered = 0u64;
    for y in 0..modulus {
        let yi = y as i128;
        let wanted = yi % p as i128 != 0 && (beta + yi * yi).rem_euclid(p as i128) != 0;
        let hits = classes.iter().filter(|c| y % p as u128 == c.v0 as u128).count();
        let expected = usize::from(wanted);
        if hits != expected {
            return Err(Error::VerificationFailed(format!(
                "y = {y} lies in {hits} classes, expected {expected} (beta = {beta})"
            )));
        }
        covered += hits as u64;
    }
    Ok(covered)
}

/// `T = Σ_{p ∤ y} Φ((y - B~)/N) χ(β + y^2)`.
pub fn sum_t(phi: &SmoothWeight, b_tilde: i128, n_len: u64, beta: i128, chi: &DirichletCharacter) -> Complex64 {
    let Some((lo, hi)) = phi.lattice_range(b_tilde as f64, n_len as f64) else {
        return Complex64::new(0.0, 0.0);
    };
    let p = chi.p() as i128;
    let mut acc = Complex64::new(0.0, 0.0);
    for y in lo as i128..=hi as i128 {
        if y % p == 0 {
            continue;
        }
        let w = phi.eval((y - b_tilde) as f64 / n_len as f64);
        acc += chi.eval_complex(beta + y * y) * w;
    }
    acc
}

/// Range of `w` with `(w - C)/X` in the support, `C = (B~ - v)/p`, `X = N/p`.
pub fn sigma_range(phi: &SmoothWeight, b_tilde: i128, n_len: u64, p: u64, v: u128) -> Option<(i64, i64)> {
    let c = (b_tilde - v as i128) as f64 / p as f64;
    let x = n_len as f64 / p as f64;
    phi.lattice_range(c, x)
}

/// `Σ = Σ_w Φ((pw + v - B~)/N) χ(β + (pw + v)^2)`.
pub fn sum_sigma(
    phi: &SmoothWeight,
    b_tilde: i128,
    n_len: u64,
    beta: i128,
    class: &ResidueClass,
    chi: &DirichletCharacter,
) -> Complex64 {
    let p = chi.p() as i128;
    let Some((lo, hi)) = sigma_range(phi, b_tilde, n_len, chi.p(), class.v) else {
        return Complex64::new(0.0, 0.0);
    };
    let mut acc = Complex64::new(0.0, 0.0);
    for w in lo as i128..=hi as i128 {
        let y = p * w + class.v as i128;
        let wt = phi.eval((y - b_tilde) as f64 / n_len as f64);
        acc += chi.eval_complex(beta + y * y) * wt;
    }
    acc
}

/// `F(w) = a0 log_p(1 + p ubar g(w))`, `g(w) = 2 v w + p w^2`, modulo `p^n`.
#[derive(Debug, Clone)]
pub struct PhaseFunction {
    pub p: u64,
    pub n: u32,
    pub modulus: u128,
    pub a0: u128,
    pub beta: u128,
    pub u: u64,
    pub ubar: u128,
    pub v: u128,
    log: LogSeries,
}

impl PhaseFunction {
    pub fn new(p: u64, n: u32, a0: u64, beta: i128, class: &ResidueClass) -> Result<Self> {
        let log = LogSeries::new(p, n)?;
        let modulus = log.modulus();
        if class.v % p as u128 == 0 || class.u % p == 0 {
            return Err(Error::Domain("u and v must be units".into()));
        }
        Ok(PhaseFunction {
            p,
            n,
            modulus,
            a0: a0 as u128,
            beta: reduce(beta, modulus),
            u: class.u,
            ubar: inv_mod(class.u as i128, modulus)?,
            v: class.v % modulus,
            log,
        })
    }

    /// `F(w) mod p^n`.
    pub fn eval(&self, w: i128) -> u128 {
        let m = self.modulus;
        let p = self.p as u128;
        let wr = reduce(w, m);
        let g = add_mod(mul_mod(2 * self.v % m, wr, m), mul_mod(p, mul_mod(wr, wr, m), m), m);
        let arg = add_mod(1, mul_mod(p, mul_mod(self.ubar, g, m), m), m);
        let l = self.log.eval(arg).expect("argument is 1 mod p");
        mul_mod(self.a0 % m, l, m)
    }

    /// `F` on `lo..=hi`.
    pub fn table(&self, lo: i64, hi: i64) -> Vec<u128> {
        (lo..=hi).map(|w| self.eval(w as i128)).collect()
    }

    pub fn phase(&self, w: i128) -> UnitPhase {
        UnitPhase::new(self.eval(w) as i128, self.modulus as u64)
    }
}

/// `χ(u) Σ_w Φ((pw + v - B~)/N) e(F(w)/p^n)`.
pub fn sum_sigma_additive(
    phi: &SmoothWeight,
    b_tilde: i128,
    n_len: u64,
    f: &PhaseFunction,
    chi: &DirichletCharacter,
) -> Complex64 {
    let p = f.p as i128;
    let Some((lo, hi)) = sigma_range(phi, b_tilde, n_len, f.p, f.v) else {
        return Complex64::new(0.0, 0.0);
    };
    let mut acc = Complex64::new(0.0, 0.0);
    for w in lo as i128..=hi as i128 {
        let y = p * w + f.v as i128;
        let wt = phi.eval((y - b_tilde) as f64 / n_len as f64);
        acc += phase_complex(f.eval(w), f.modulus) * wt;
    }
    acc * chi.eval_complex(f.u as i128)
}

/// Checks `χ(β + (pw + v)^2) = χ(u) e(F(w)/p^n)` as exact phases for every
/// `w mod p^n` when `p^n <= exhaustive_limit`, else on `samples` seeded `w`.
pub fn certify_f_representation(
    f: &PhaseFunction,
    chi: &DirichletCharacter,
    exhaustive_limit: u128,
    samples: usize,
    seed: u64,
) -> Result<usize> {
    let p = f.p as i128;
    let chi_u = chi.eval(f.u as i128).expect("u is a unit");
    let beta = f.beta as i128;
    let check = |w: i128| -> Result<()> {
        let y = p * w + f.v as i128;
        let lhs = chi.eval(beta + y * y);
        let rhs = chi_u * f.phase(w);
        if lhs != Some(rhs) {
            return Err(Error::VerificationFailed(format!(
                "F-representation fails at w = {w}: {lhs:?} != {rhs}"
            )));
        }
        Ok(())
    };
    if f.modulus <= exhaustive_limit {
        for w in 0..f.modulus as i128 {
            check(w)?;
        }
        Ok(f.modulus as usize)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            check(rng.gen_range(0..f.modulus as i128))?;
        }
        Ok(samples)
    }
}

/// `F(w + p^(n-1) h) = F(w) mod p^n` and `F(w + p^(n-2) h) = F(w) mod p^(n-1)`.
pub fn certify_periodicity(f: &PhaseFunction, ws: &[i128], hs: &[i128]) -> Result<()> {
    let m = f.modulus;
    let p = f.p as u128;
    let top = (m / p) as i128;
    let next = (m / p / p) as i128;
    for &w in ws {
        let base = f.eval(w);
        for &h in hs {
            if f.eval(w + top * h) != base {
                return Err(Error::VerificationFailed(format!("F not p^(n-1)-periodic at w = {w}")));
            }
            if f.n >= 2 && f.eval(w + next * h) % (m / p) != base % (m / p) {
                return Err(Error::VerificationFailed(format!(
                    "F(w + p^(n-2) h) differs from F(w) mod p^(n-1) at w = {w}"
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characters::postnikov_a0;

    #[test]
    fn split_examples() {
        let c0 = residue_split(0, 5, 2).unwrap();
        let us: Vec<u64> = c0.iter().map(|c| c.u).collect();
        assert_eq!(us, vec![1, 1, 4, 4]);
        let c1 = residue_split(1, 5, 2).unwrap();
        let two: Vec<_> = c1.iter().filter(|c| c.u == 2).collect();
        assert_eq!(two.len(), 2);
        assert_eq!(two[0].v0, 1);
        assert_eq!(two[1].v0, 4);
        for beta in -3..8 {
            let classes = residue_split(beta, 5, 3).unwrap();
            let covered = certify_split(beta, 5, 3, &classes).unwrap();
            let expected = (0..125i128).filter(|y| y % 5 != 0 && (beta + y * y) % 5 != 0).count();
            assert_eq!(covered as usize, expected);
        }
    }

    #[test]
    fn f_representation_mod_125() {
        let chi = DirichletCharacter::primitive(5, 3, 1).unwrap();
        let a0 = postnikov_a0(&chi).unwrap().a0;
        let class = residue_split(1, 5, 3).unwrap().into_iter().find(|c| c.u == 2 && c.v0 == 1).unwrap();
        let f = PhaseFunction::new(5, 3, a0, 1, &class).unwrap();
        assert_eq!(f.eval(0), 0);
        assert_eq!(certify_f_representation(&f, &chi, 125, 0, 0).unwrap(), 125);
        certify_periodicity(&f, &[0, 3, 17, 60], &[1, 2, -3]).unwrap();
    }

    #[test]
    fn t_equals_sum_of_sigmas() {
        let chi = DirichletCharacter::primitive(5, 3, 3).unwrap();
        let a0 = postnikov_a0(&chi).unwrap().a0;
        let phi = SmoothWeight::bump();
        for &(beta, b_tilde, n_len) in &[(1i128, 0i128, 50u64), (7, 13, 40), (0, -20, 33)] {
            let t = sum_t(&phi, b_tilde, n_len, beta, &chi);
            let mut sig = Complex64::new(0.0, 0.0);
            let mut add = Complex64::new(0.0, 0.0);
            for c in residue_split(beta, 5, 3).unwrap() {
                sig += sum_sigma(&phi, b_tilde, n_len, beta, &c, &chi);
                let f = PhaseFunction::new(5, 3, a0, beta, &c).unwrap();
                add += sum_sigma_additive(&phi, b_tilde, n_len, &f, &chi);
            }
            assert!((t - sig).norm() <= 1e-10 * t.norm().max(1.0));
            assert!((t - add).norm() <= 1e-10 * t.norm().max(1.0));
        }
    }

    #[test]
    fn short_window_is_empty() {
        let chi = DirichletCharacter::primitive(5, 2, 1).unwrap();
        // y = 0 is the only lattice point and p | 0.
        assert_eq!(sum_t(&SmoothWeight::bump(), 0, 1, 1, &chi), Complex64::new(0.0, 0.0));
    }
}
