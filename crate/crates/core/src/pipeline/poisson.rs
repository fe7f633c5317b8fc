//! Poisson summation in residue classes and the two expansions of the
//! differenced sums into complete exponential sums.
//!
//! For a class `r mod q`,
//! `Σ_{t ≡ r (q)} Ω((t-C)/X) = (X/q) Σ_t Ω^(tX/q) e(t(r-C)/q)`,
//! and summing against `e(f(r)/q)` over all classes gives
//! `Σ_w Ω((w-C)/X) e(f(w)/q) = (X/q) Σ_t Ω^(tX/q) e(-tC/q) Σ_r e((f(r)+tr)/q)`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::split::{residue_split, PhaseFunction};
use super::taylor::{certify_difference_function, direct_f1, direct_f2, DifferenceFunction, TaylorExpansion};
use crate::characters::{phase_complex, postnikov_a0, DirichletCharacter};
use crate::error::{Error, Result};
use crate::expsums::{complete_sum, root_table, twisted_sum};
use crate::padic::{add_mod, pow_u128, sub_mod};
use crate::par::Exec;
use crate::poly::{IntPolynomial, RationalFunc};
use crate::weights::SmoothWeight;

/// Absolute accuracy requested from each Fourier transform value.
pub const FOURIER_TOL: f64 = 1e-12;
/// Tail target for the plain Poisson identity.
pub const IDENTITY_TAIL: f64 = 1e-10;
/// Agreement required for the plain identity, relative to `max(1, |lhs|)`.
pub const IDENTITY_TOL: f64 = 1e-8;
/// Agreement required for the expansions, relative to `max(1, |lhs|)`.
pub const EXPANSION_TOL: f64 = 1e-6;
/// Complete sums evaluated both ways agree to this multiple of the modulus.
const CROSS_CHECK_TOL: f64 = 1e-9;

/// `Ω^(t * scale)` for `0 <= t <= cutoff`, with the truncation tail bound.
#[derive(Debug, Clone)]
pub struct DualSeries {
    pub scale: f64,
    pub cutoff: u64,
    pub values: Vec<Complex64>,
    /// `Σ_t` of the quadrature error bounds over `|t| <= cutoff`.
    pub quadrature_error: f64,
    /// Certified bound on `Σ_{|t| > cutoff} |Ω^(t * scale)|`.
    pub tail: f64,
}

impl DualSeries {
    pub fn new(omega: &SmoothWeight, scale: f64, tail_target: f64, exec: Exec) -> Result<Self> {
        let cutoff = omega.tail_cutoff(scale, tail_target)?;
        let evals = exec.map(cutoff as usize + 1, |t| omega.fourier_transform(t as f64 * scale, FOURIER_TOL));
        let mut values = Vec::with_capacity(evals.len());
        let mut quadrature_error = 0.0;
        for (t, e) in evals.into_iter().enumerate() {
            let e = e?;
            quadrature_error += if t == 0 { e.abs_error } else { 2.0 * e.abs_error };
            values.push(e.value);
        }
        Ok(DualSeries { scale, cutoff, values, quadrature_error, tail: tail_target })
    }

    /// `Ω^(t * scale)` for `|t| <= cutoff`; real weights give
    /// `Ω^(-y) = conj Ω^(y)`.
    pub fn at(&self, t: i64) -> Complex64 {
        let v = self.values[t.unsigned_abs() as usize];
        if t < 0 {
            v.conj()
        } else {
            v
        }
    }

    pub fn range(&self) -> std::ops::RangeInclusive<i64> {
        -(self.cutoff as i64)..=self.cutoff as i64
    }
}

/// Two-sided comparison with the rigorous part of the error budget.
#[derive(Debug, Clone, Serialize)]
pub struct PoissonCheck {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub abs_diff: f64,
    /// Truncation plus quadrature bound for the transformed side.
    pub error_bound: f64,
    pub cutoff: u64,
    pub tol: f64,
}

impl PoissonCheck {
    pub fn passed(&self) -> bool {
        self.abs_diff <= self.tol * self.lhs.norm().max(1.0)
    }

    fn into_result(self, what: &str) -> Result<Self> {
        if self.passed() {
            Ok(self)
        } else {
            Err(Error::ToleranceNotMet(format!(
                "{what}: |lhs - rhs| = {:.3e} exceeds {:.1e} * max(1, |lhs| = {:.3e})",
                self.abs_diff,
                self.tol,
                self.lhs.norm()
            )))
        }
    }
}

/// `e(-t c / q)` with `t c` reduced before scaling.
fn real_phase(t: i64, c: f64, q: f64) -> Complex64 {
    let a = (t as f64 * (c / q)).rem_euclid(1.0);
    Complex64::from_polar(1.0, -TAU * a)
}

/// `Σ_{t ≡ r (q)} Ω((t-C)/X)` against its dual expansion.
pub fn poisson_identity(omega: &SmoothWeight, c: f64, x: f64, q: u64, r: i64, exec: Exec) -> Result<PoissonCheck> {
    if q == 0 || !(x > 0.0) {
        return Err(Error::Domain("need q >= 1 and X > 0".into()));
    }
    let qi = q as i64;
    let r = r.rem_euclid(qi);
    let mut lhs = 0.0;
    if let Some((lo, hi)) = omega.lattice_range(c, x) {
        let mut t = lo + (r - lo).rem_euclid(qi);
        while t <= hi {
            lhs += omega.eval((t as f64 - c) / x);
            t += qi;
        }
    }
    let scale = x / q as f64;
    let dual = DualSeries::new(omega, scale, IDENTITY_TAIL, exec)?;
    // e(t(r - C)/q) = e(tr/q) e(-tC/q)
    let roots = root_table(q);
    let terms: Vec<i64> = dual.range().collect();
    let rhs = exec.sum_complex(terms.len(), |i| {
        let t = terms[i];
        dual.at(t) * roots[(t * r).rem_euclid(qi) as usize] * real_phase(t, c, q as f64)
    }) * scale;
    let lhs = Complex64::new(lhs, 0.0);
    PoissonCheck {
        lhs,
        rhs,
        abs_diff: (lhs - rhs).norm(),
        error_bound: scale * (dual.tail + dual.quadrature_error),
        cutoff: dual.cutoff,
        tol: IDENTITY_TOL,
    }
    .into_result("Poisson identity")
}

/// Parameters of one expansion instance.
#[derive(Debug, Clone, Serialize)]
pub struct ExpansionSpec {
    pub k1: u32,
    pub l1: u32,
    pub g1: i64,
    /// `(k2, l2, g2)` for the two-shift expansion.
    pub second: Option<(u32, u32, i64)>,
    pub c: f64,
    pub x: f64,
}

impl ExpansionSpec {
    fn shifts(&self, p: u64) -> (i128, i128) {
        let d1 = pow_u128(p, self.k1 + self.l1).unwrap() as i128 * self.g1 as i128;
        let d2 = self
            .second
            .map(|(k2, l2, g2)| pow_u128(p, k2 + l2).unwrap() as i128 * g2 as i128)
            .unwrap_or(0);
        (d1, d2)
    }

    /// `Ω_1(y) = Φ(y) Φ(y + Δ1/X)`, and for two shifts
    /// `Ω_2(y) = Ω_1(y) Ω_1(y + Δ2/X)`.
    pub fn weight(&self, phi: &SmoothWeight, p: u64) -> SmoothWeight {
        let (d1, d2) = self.shifts(p);
        let w = phi.shifted(d1 as f64 / self.x);
        if self.second.is_some() {
            w.shifted(d2 as f64 / self.x)
        } else {
            w
        }
    }
}

/// Result of one expansion check.
#[derive(Debug, Clone, Serialize)]
pub struct ExpansionCheck {
    pub s: u32,
    pub terms: u32,
    pub check: PoissonCheck,
    /// Number of `t` at which `Σ_r e((f(r)+tr)/p^s)` was recomputed with
    /// per-class complete sums.
    pub cross_checked: usize,
}

/// Builds `f_i` and certifies it against direct differencing of `F`.
pub fn difference_function(f: &PhaseFunction, spec: &ExpansionSpec) -> Result<DifferenceFunction> {
    let te = TaylorExpansion::new(f);
    let (k1, l1, g1) = (spec.k1, spec.l1, spec.g1 as i128);
    if g1 % f.p as i128 == 0 {
        return Err(Error::Domain(format!("g1 = {g1} must be a unit")));
    }
    let df = match spec.second {
        None => {
            let df = te.f1(k1, l1, g1)?;
            certify_difference_function(f, &df, |r| direct_f1(f, k1, l1, g1, r))?;
            df
        }
        Some((k2, l2, g2)) => {
            let g2 = g2 as i128;
            if g2 % f.p as i128 == 0 {
                return Err(Error::Domain(format!("g2 = {g2} must be a unit")));
            }
            let df = te.f2(k1, k2, l1, l2, g1, g2)?;
            certify_difference_function(f, &df, |r| direct_f2(f, k1, k2, l1, l2, g1, g2, r))?;
            df
        }
    };
    if df.s < 2 {
        return Err(Error::Domain(format!("expansion needs s >= 2, got {}", df.s)));
    }
    Ok(df)
}

/// The one-shift (`second = None`) or two-shift expansion: the differenced
/// sum evaluated directly from `F` against its Poisson expansion built from
/// the Taylor form of `f_i`.
pub fn poisson_expansion(
    f: &PhaseFunction,
    phi: &SmoothWeight,
    spec: &ExpansionSpec,
    cross_checks: usize,
    exec: Exec,
) -> Result<ExpansionCheck> {
    let df = difference_function(f, spec)?;
    let q = pow_u128(f.p, df.s).unwrap() as u64;
    let omega = spec.weight(phi, f.p);
    let (d1, d2) = spec.shifts(f.p);
    let m = f.modulus;

    let lhs = match omega.lattice_range(spec.c, spec.x) {
        None => Complex64::new(0.0, 0.0),
        Some((lo, hi)) => exec.sum_complex((hi - lo + 1) as usize, |i| {
            let w = lo as i128 + i as i128;
            let diff = if spec.second.is_some() {
                add_mod(
                    sub_mod(sub_mod(f.eval(w + d1 + d2), f.eval(w + d1), m), f.eval(w + d2), m),
                    f.eval(w),
                    m,
                )
            } else {
                sub_mod(f.eval(w + d1), f.eval(w), m)
            };
            phase_complex(diff, m) * omega.eval((w as f64 - spec.c) / spec.x)
        }),
    };

    let values: Vec<u64> = (0..q as i128)
        .map(|r| df.f.eval_mod(r, q as u128).map(|v| v as u64))
        .collect::<Result<_>>()?;
    let roots = root_table(q);
    let scale = spec.x / q as f64;
    // |Σ_r| <= q, so this tail target keeps the truncation below 1e-9.
    let dual = DualSeries::new(&omega, scale, 1e-9 / spec.x.max(1.0), exec)?;
    let terms: Vec<i64> = dual.range().collect();
    let complete: Vec<Complex64> = exec.map(terms.len(), |i| twisted_sum(&values, terms[i], &roots));
    let rhs = terms
        .iter()
        .zip(&complete)
        .fold(Complex64::new(0.0, 0.0), |acc, (&t, s)| {
            acc + dual.at(t) * real_phase(t, spec.c, q as f64) * s
        })
        * scale;

    let step = (terms.len() / cross_checks.max(1)).max(1);
    let mut cross_checked = 0;
    for i in (0..terms.len()).step_by(step).take(cross_checks) {
        let t = terms[i];
        let twisted = RationalFunc::new(
            df.f.num.add(&df.f.den.mul(&IntPolynomial::linear(0, t as i128))),
            df.f.den.clone(),
        )?;
        let mut by_class = Complex64::new(0.0, 0.0);
        for alpha in 0..f.p {
            by_class += complete_sum(&twisted, f.p, df.s, alpha)?;
        }
        if (by_class - complete[i]).norm() > CROSS_CHECK_TOL * q as f64 {
            return Err(Error::VerificationFailed(format!(
                "complete sum at t = {t} disagrees between evaluations: {by_class} vs {}",
                complete[i]
            )));
        }
        cross_checked += 1;
    }

    let check = PoissonCheck {
        lhs,
        rhs,
        abs_diff: (lhs - rhs).norm(),
        error_bound: scale * (q as f64 * (dual.tail + dual.quadrature_error)),
        cutoff: dual.cutoff,
        tol: EXPANSION_TOL,
    };
    let what = if spec.second.is_some() { "two-shift expansion" } else { "one-shift expansion" };
    Ok(ExpansionCheck { s: df.s, terms: df.terms, check: check.into_result(what)?, cross_checked })
}

/// One seeded expansion instance: the phase function and its parameters.
#[derive(Debug, Clone)]
pub struct ExpansionInstance {
    pub n: u32,
    pub chi_index: u64,
    pub beta: i128,
    pub f: PhaseFunction,
    pub spec: ExpansionSpec,
}

/// Seeded instances at prime `p` with `n` in `n_range`, alternating between
/// one and two shifts, with `2 <= s <= max_s` and `X` between `0.3` and
/// `1.5` times `p^s` (enlarged so the shifted weight keeps a support).
pub fn expansion_corpus(
    p: u64,
    n_range: std::ops::RangeInclusive<u32>,
    max_s: u32,
    count: usize,
    seed: u64,
) -> Result<Vec<ExpansionInstance>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > 100 * count + 100 {
            return Err(Error::Infeasible("could not draw enough expansion instances".into()));
        }
        let two = out.len() % 2 == 1;
        let n = rng.gen_range(n_range.clone());
        let k1 = rng.gen_range(1..=2);
        let l1 = rng.gen_range(0..=1);
        let second = two.then(|| (rng.gen_range(1..=2u32), rng.gen_range(0..=1u32), unit(&mut rng, p)));
        let used = k1 + l1 + second.map_or(0, |(k2, l2, _)| k2 + l2);
        if used + 2 > n || n - used > max_s {
            continue;
        }
        let s = n - used;
        let chi_index = loop {
            let i = rng.gen_range(1..p.pow(n - 1) * (p - 1));
            if i % p != 0 {
                break i;
            }
        };
        let beta = rng.gen_range(0..(p * p) as i128);
        let classes = residue_split(beta, p, n)?;
        if classes.is_empty() {
            continue;
        }
        let class = &classes[rng.gen_range(0..classes.len())];
        let chi = DirichletCharacter::primitive(p, n, chi_index)?;
        let a0 = postnikov_a0(&chi)?.a0;
        let f = PhaseFunction::new(p, n, a0, beta, class)?;
        let g1 = unit(&mut rng, p);
        let q = p.pow(s) as f64;
        let mut spec = ExpansionSpec { k1, l1, g1, second, c: 0.0, x: 1.0 };
        let (d1, d2) = spec.shifts(p);
        let reach = (d1.abs() + d2.abs()) as f64;
        spec.x = (q * rng.gen_range(0.3..1.5)).max(1.5 * reach);
        spec.c = rng.gen_range(0.0..q);
        out.push(ExpansionInstance { n, chi_index, beta, f, spec });
    }
    Ok(out)
}

fn unit(rng: &mut ChaCha8Rng, p: u64) -> i64 {
    loop {
        let g = rng.gen_range(-(p as i64) + 1..p as i64);
        if g % p as i64 != 0 {
            return g;
        }
    }
}
