//! The two-variable sum `S_Q`, quadratic completion, and the split into the
//! parts with `p ∤ Z` and `p | Z`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::characters::{DirichletCharacter, UnitPhase};
use crate::error::{Error, Result};
use crate::padic::{inv_mod, reduce};
use crate::par::Exec;
use crate::weights::SmoothWeight;

/// `a x^2 + 2 b x y + c y^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QuadraticForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl QuadraticForm {
    pub fn new(a: i64, b: i64, c: i64) -> Self {
        QuadraticForm { a, b, c }
    }

    /// `ac - b^2`.
    pub fn det(&self) -> i128 {
        self.a as i128 * self.c as i128 - (self.b as i128).pow(2)
    }

    pub fn eval(&self, x: i128, y: i128) -> i128 {
        self.a as i128 * x * x + 2 * self.b as i128 * x * y + self.c as i128 * y * y
    }

    /// Rejects forms with `p | c det(Q)`.
    pub fn check(&self, p: u64) -> Result<()> {
        let pi = p as i128;
        if (self.c as i128).rem_euclid(pi) == 0 {
            return Err(Error::BadForm(format!("{p} divides c = {}", self.c)));
        }
        if self.det().rem_euclid(pi) == 0 {
            return Err(Error::BadForm(format!("{p} divides the determinant {}", self.det())));
        }
        Ok(())
    }
}

/// Data of `Q(x, y) = c (alpha x^2 + Z^2)`, `Z = b cbar x + y`, modulo `p^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Completion {
    pub c: i64,
    pub cbar: u128,
    pub alpha: u128,
    pub alpha_bar: u128,
    /// `b cbar mod p^n`.
    pub b_cbar: u128,
    pub modulus: u128,
}

impl Completion {
    /// `Z(x, y) = b cbar x + y` as an integer.
    pub fn z(&self, x: i128, y: i128) -> i128 {
        self.b_cbar as i128 * x + y
    }
}

pub fn quadratic_completion(q: &QuadraticForm, p: u64, n: u32) -> Result<Completion> {
    q.check(p)?;
    let modulus = crate::padic::pow_u128(p, n)
        .ok_or_else(|| Error::Domain(format!("{p}^{n} is too large")))?;
    let cbar = inv_mod(q.c as i128, modulus)?;
    let alpha = reduce(q.det() * (cbar * cbar % modulus) as i128, modulus);
    Ok(Completion {
        c: q.c,
        cbar,
        alpha,
        alpha_bar: inv_mod(alpha as i128, modulus)?,
        b_cbar: reduce(q.b as i128 * cbar as i128, modulus),
        modulus,
    })
}

/// Checks `Q(x, y) = c (alpha x^2 + Z^2) mod p^n`, exhaustively when
/// `p^n <= exhaustive_limit`, otherwise on `samples` seeded points.
pub fn certify_completion(
    q: &QuadraticForm,
    comp: &Completion,
    exhaustive_limit: u128,
    samples: usize,
    seed: u64,
) -> Result<usize> {
    let m = comp.modulus;
    let check = |x: i128, y: i128| -> Result<()> {
        let z = comp.z(x, y);
        let lhs = reduce(q.eval(x, y), m);
        let inner = reduce(comp.alpha as i128 * reduce(x * x, m) as i128 + reduce(z * z, m) as i128, m);
        let rhs = reduce(comp.c as i128 * inner as i128, m);
        if lhs != rhs {
            return Err(Error::VerificationFailed(format!(
                "completion fails at (x, y) = ({x}, {y}): {lhs} != {rhs}"
            )));
        }
        Ok(())
    };
    if m <= exhaustive_limit {
        for x in 0..m as i128 {
            for y in 0..m as i128 {
                check(x, y)?;
            }
        }
        Ok((m * m) as usize)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            check(rng.gen_range(0..m as i128), rng.gen_range(0..m as i128))?;
        }
        Ok(samples)
    }
}

/// Centers, lengths and weights of `S_Q`.
#[derive(Debug, Clone)]
pub struct SumParams {
    pub a: i64,
    pub b: i64,
    pub m: u64,
    pub n: u64,
    pub psi: SmoothWeight,
    pub phi: SmoothWeight,
}

impl SumParams {
    pub fn new(a: i64, b: i64, m: u64, n: u64) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::InvalidInput("lengths M and N must be positive".into()));
        }
        Ok(SumParams { a, b, m, n, psi: SmoothWeight::bump(), phi: SmoothWeight::bump() })
    }

    fn x_range(&self) -> Option<(i64, i64)> {
        self.psi.lattice_range(self.a as f64, self.m as f64)
    }

    fn y_range(&self) -> Option<(i64, i64)> {
        self.phi.lattice_range(self.b as f64, self.n as f64)
    }

    fn psi_at(&self, x: i64) -> f64 {
        self.psi.eval((x - self.a) as f64 / self.m as f64)
    }

    fn phi_at(&self, y: i64) -> f64 {
        self.phi.eval((y - self.b) as f64 / self.n as f64)
    }
}

/// `S_Q = Σ_x Σ_y Ψ((x-A)/M) Φ((y-B)/N) χ(Q(x, y))`, summed with `x`
/// ascending in the outer loop and `y` ascending inside.
pub fn sum_sq(q: &QuadraticForm, params: &SumParams, chi: &DirichletCharacter, exec: Exec) -> Complex64 {
    let (Some((x0, x1)), Some((y0, y1))) = (params.x_range(), params.y_range()) else {
        return Complex64::new(0.0, 0.0);
    };
    let table = chi.value_table();
    let modulus = chi.modulus();
    let phi: Vec<f64> = (y0..=y1).map(|y| params.phi_at(y)).collect();
    let m = modulus as i128;
    let two_c = reduce(2 * q.c as i128, modulus as u128) as u64;
    exec.sum_complex((x1 - x0 + 1) as usize, |i| {
        let x = x0 + i as i64;
        let wx = params.psi_at(x);
        if wx == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let (xi, yi) = (x as i128, y0 as i128);
        // Q(x, y+1) - Q(x, y) = 2bx + c(2y + 1), itself stepping by 2c.
        let mut val = q.eval(xi, yi).rem_euclid(m) as u64;
        let mut step = (2 * q.b as i128 * xi + q.c as i128 * (2 * yi + 1)).rem_euclid(m) as u64;
        let mut acc = Complex64::new(0.0, 0.0);
        for &w in &phi {
            acc += table[val as usize] * w;
            val += step;
            if val >= modulus {
                val -= modulus;
            }
            step += two_c;
            if step >= modulus {
                step -= modulus;
            }
        }
        acc * wx
    })
}

/// `S_Q^1 = χ(c) Σ_x Ψ Σ_{p ∤ Z} Φ((Z - B~)/N) χ(alpha x^2 + Z^2)` with
/// `B~ = b cbar x + B`.
pub fn sum_sq1(q: &QuadraticForm, params: &SumParams, chi: &DirichletCharacter, exec: Exec) -> Result<Complex64> {
    let comp = quadratic_completion(q, chi.p(), chi.n())?;
    let (Some((x0, x1)), Some((y0, y1))) = (params.x_range(), params.y_range()) else {
        return Ok(Complex64::new(0.0, 0.0));
    };
    let p = chi.p() as i128;
    let m = comp.modulus as i128;
    let chi_c = chi.eval_complex(q.c as i128);
    let s = exec.sum_complex((x1 - x0 + 1) as usize, |i| {
        let x = (x0 + i as i64) as i128;
        let wx = params.psi_at(x as i64);
        if wx == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let ax2 = comp.alpha as i128 * (x * x).rem_euclid(m) % m;
        let b_tilde = comp.z(x, params.b as i128);
        let mut acc = Complex64::new(0.0, 0.0);
        for z in comp.z(x, y0 as i128)..=comp.z(x, y1 as i128) {
            if z % p == 0 {
                continue;
            }
            let w = params.phi.eval((z - b_tilde) as f64 / params.n as f64);
            acc += chi.eval_complex(ax2 + (z * z).rem_euclid(m)) * w;
        }
        acc * wx
    });
    Ok(s * chi_c)
}

/// `S_Q^2 = χ(c alpha) Σ Ψ Φ χ(alpha_bar Z^2 + x^2)` over `p | Z`, `p ∤ x`.
/// Summed with `x` outer so that the `Z` range stays short whatever the
/// size of the representative of `b cbar`.
pub fn sum_sq2(q: &QuadraticForm, params: &SumParams, chi: &DirichletCharacter, exec: Exec) -> Result<Complex64> {
    let comp = quadratic_completion(q, chi.p(), chi.n())?;
    let (Some((x0, x1)), Some((y0, y1))) = (params.x_range(), params.y_range()) else {
        return Ok(Complex64::new(0.0, 0.0));
    };
    let p = chi.p() as i128;
    let m = comp.modulus as i128;
    let chi_ca = chi.eval_complex(q.c as i128 * comp.alpha as i128);
    let s = exec.sum_complex((x1 - x0 + 1) as usize, |i| {
        let x = (x0 + i as i64) as i128;
        let wx = params.psi_at(x as i64);
        if wx == 0.0 || x % p == 0 {
            return Complex64::new(0.0, 0.0);
        }
        let x2 = (x * x).rem_euclid(m);
        let b_tilde = comp.z(x, params.b as i128);
        let z0 = comp.z(x, y0 as i128);
        let mut acc = Complex64::new(0.0, 0.0);
        let mut z = z0 + (-z0).rem_euclid(p);
        while z <= comp.z(x, y1 as i128) {
            let w = params.phi.eval((z - b_tilde) as f64 / params.n as f64);
            let az2 = comp.alpha_bar as i128 * (z * z).rem_euclid(m) % m;
            acc += chi.eval_complex(az2 + x2) * w;
            z += p;
        }
        acc * wx
    });
    Ok(s * chi_ca)
}

/// One nonzero term `(x, y, χ(Q(x, y)))` of `S_Q`.
pub type PhaseTerm = (i64, i64, UnitPhase);

/// Terms of `S_Q` straight from the definition, sorted.
pub fn sq_phase_terms(q: &QuadraticForm, params: &SumParams, chi: &DirichletCharacter) -> Vec<PhaseTerm> {
    let (Some((x0, x1)), Some((y0, y1))) = (params.x_range(), params.y_range()) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for x in x0..=x1 {
        for y in y0..=y1 {
            if let Some(ph) = chi.eval(q.eval(x as i128, y as i128)) {
                out.push((x, y, ph));
            }
        }
    }
    out.sort();
    out
}

/// Terms produced by the split `S_Q^1 + S_Q^2`, mapped back to `(x, y)`
/// with `y = Z - b cbar x`, with phases computed as `χ(c) χ(alpha x^2 + Z^2)`
/// or `χ(c alpha) χ(alpha_bar Z^2 + x^2)`. Sorted.
pub fn split_phase_terms(q: &QuadraticForm, params: &SumParams, chi: &DirichletCharacter) -> Result<Vec<PhaseTerm>> {
    let comp = quadratic_completion(q, chi.p(), chi.n())?;
    let (Some((x0, x1)), Some((y0, y1))) = (params.x_range(), params.y_range()) else {
        return Ok(Vec::new());
    };
    let p = chi.p() as i128;
    let chi_c = chi.eval(q.c as i128).expect("c is a unit");
    let chi_ca = chi.eval(q.c as i128 * comp.alpha as i128).expect("c alpha is a unit");
    let a = comp.alpha as i128;
    let abar = comp.alpha_bar as i128;
    let mut out = Vec::new();
    for x in x0 as i128..=x1 as i128 {
        for y in y0 as i128..=y1 as i128 {
            let z = comp.z(x, y);
            let ph = if z % p != 0 {
                chi.eval(a * x * x + z * z).map(|v| chi_c * v)
            } else if x % p != 0 {
                chi.eval(abar * z * z + x * x).map(|v| chi_ca * v)
            } else {
                None
            };
            if let Some(ph) = ph {
                out.push((x as i64, y as i64, ph));
            }
        }
    }
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn completion_examples() {
        let diag = quadratic_completion(&QuadraticForm::new(1, 0, 1), 7, 3).unwrap();
        assert_eq!((diag.alpha, diag.b_cbar), (1, 0));
        let c = quadratic_completion(&QuadraticForm::new(1, 1, 3), 5, 2).unwrap();
        assert_eq!(c.cbar, 17);
        assert_eq!(c.alpha, 3);
        // (x, y) = (1, 1): Q = 6 and 3 (3 + 18^2) = 981 = 6 mod 25
        assert_eq!(981 % 25, 6);
        assert!(matches!(
            quadratic_completion(&QuadraticForm::new(1, 1, 5), 5, 2),
            Err(Error::BadForm(_))
        ));
        assert!(matches!(
            quadratic_completion(&QuadraticForm::new(1, 1, 1), 5, 2),
            Err(Error::BadForm(_))
        ));
    }

    #[test]
    fn completion_certified_on_625() {
        let q = QuadraticForm::new(2, 3, 8);
        let comp = quadratic_completion(&q, 5, 4).unwrap();
        assert_eq!(certify_completion(&q, &comp, 625, 0, 0).unwrap(), 625 * 625);
    }

    #[test]
    fn unit_box_sum_is_zero() {
        let chi = DirichletCharacter::primitive(5, 3, 1).unwrap();
        let params = SumParams::new(0, 0, 1, 1).unwrap();
        let s = sum_sq(&QuadraticForm::new(1, 1, 3), &params, &chi, Exec::Sequential);
        assert_eq!(s, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn split_partitions_the_sum() {
        let chi = DirichletCharacter::primitive(5, 3, 2).unwrap();
        let q = QuadraticForm::new(1, 1, 3);
        let params = SumParams::new(4, -7, 23, 31).unwrap();
        let s = sum_sq(&q, &params, &chi, Exec::Parallel);
        let s1 = sum_sq1(&q, &params, &chi, Exec::Parallel).unwrap();
        let s2 = sum_sq2(&q, &params, &chi, Exec::Parallel).unwrap();
        assert!((s - s1 - s2).norm() <= 1e-10 * s.norm().max(1.0));
        assert_eq!(sq_phase_terms(&q, &params, &chi), split_phase_terms(&q, &params, &chi).unwrap());
    }

    #[test]
    fn incremental_sum_matches_direct() {
        let chi = DirichletCharacter::primitive(7, 2, 3).unwrap();
        let q = QuadraticForm::new(2, -1, 3);
        let params = SumParams::new(-3, 5, 17, 12).unwrap();
        let fast = sum_sq(&q, &params, &chi, Exec::Sequential);
        let mut direct = Complex64::new(0.0, 0.0);
        for x in -20i64..=20 {
            for y in -20i64..=30 {
                let w = params.psi_at(x) * params.phi_at(y);
                direct += chi.eval_complex(q.eval(x as i128, y as i128)) * w;
            }
        }
        assert!((fast - direct).norm() < 1e-10);
    }
}
