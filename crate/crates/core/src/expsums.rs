//! Complete exponential sums of rational functions modulo `p^m`, critical
//! points of `p^-t f'` over `F_p`, and the Cochrane–Liu–Zheng bound.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::characters::phase_complex;
use crate::error::{Error, Result};
use crate::padic::{inv_mod, pow_u128};
use crate::par::{CompensatedSum, Exec};
use crate::poly::{IntPolynomial, RationalFunc};

/// A zero of the reduced derivative numerator, with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CriticalPoint {
    pub alpha: u64,
    pub nu: u32,
}

/// `t = ord_p(f')` and the critical points of `f` mod `p`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CriticalData {
    pub t: i64,
    pub points: Vec<CriticalPoint>,
    /// Degree over `F_p` of the reduced derivative numerator.
    pub reduced_degree: usize,
}

impl CriticalData {
    /// Multiplicity at `alpha`, zero when `alpha` is not critical.
    pub fn nu(&self, alpha: u64) -> u32 {
        self.points.iter().find(|c| c.alpha == alpha).map_or(0, |c| c.nu)
    }
}

fn check_denominator(f: &RationalFunc, p: u64) -> Result<()> {
    if f.den.ord_p(p).finite() != Some(0) {
        return Err(Error::DegenerateDenominator { p });
    }
    Ok(())
}

pub fn critical_points(f: &RationalFunc, p: u64) -> Result<CriticalData> {
    check_denominator(f, p)?;
    let df = f.derivative();
    let t = df
        .ord_p(p)
        .ok_or_else(|| Error::Domain(format!("{f} is constant; it has no critical points")))?;
    let (_, reduced) = df.num.strip_content(p);
    let reduced = reduced.to_fp(p);
    let den = f.den.to_fp(p);
    let points = (0..p)
        .filter(|&a| den.eval(a) != 0)
        .filter_map(|a| {
            let nu = reduced.root_multiplicity(a);
            (nu > 0).then_some(CriticalPoint { alpha: a, nu })
        })
        .collect();
    Ok(CriticalData { t, points, reduced_degree: reduced.degree().unwrap_or(0) })
}

/// `e(j / q)` for `j in [0, q)`.
pub fn root_table(q: u64) -> Vec<Complex64> {
    (0..q).map(|j| phase_complex(j as u128, q as u128)).collect()
}

/// Values `f(n) mod p^m` for `n ≡ alpha mod p`, `n in [0, p^m)`, in
/// increasing `n`. Denominators are inverted in one batch.
pub fn class_values(f: &RationalFunc, p: u64, m: u32, alpha: u64) -> Result<Vec<u64>> {
    let q = pow_u128(p, m).filter(|&q| q < 1 << 32).ok_or_else(|| {
        Error::Domain(format!("{p}^{m} is too large for a complete sum"))
    })? as u64;
    let alpha = alpha % p;
    if f.den.eval_mod(alpha as i128, p as u128) == 0 {
        return Err(Error::DenominatorVanishes { p, at: alpha as i128 });
    }
    let num = f.num.reduced_u64(q);
    let den = f.den.reduced_u64(q);
    let count = (q / p) as usize;
    let dens: Vec<u64> = (0..count as u64).map(|k| IntPolynomial::eval_reduced_u64(&den, alpha + p * k, q)).collect();
    // prefix products, one inversion, then peel the inverses off backwards
    let mut prefix = Vec::with_capacity(count);
    let mut acc = 1u64;
    for &d in &dens {
        prefix.push(acc);
        acc = acc * d % q;
    }
    let mut inv = inv_mod(acc as i128, q as u128).map_err(|_| Error::DenominatorVanishes { p, at: alpha as i128 })? as u64;
    let mut out = vec![0u64; count];
    for k in (0..count).rev() {
        let dinv = inv * prefix[k] % q;
        inv = inv * dens[k] % q;
        let v = IntPolynomial::eval_reduced_u64(&num, alpha + p * k as u64, q);
        out[k] = v * dinv % q;
    }
    Ok(out)
}

/// `S_alpha(f, p^m) = Σ_{n ≡ alpha mod p} e(f(n) / p^m)`.
pub fn complete_sum(f: &RationalFunc, p: u64, m: u32, alpha: u64) -> Result<Complex64> {
    let vals = class_values(f, p, m, alpha)?;
    let q = (vals.len() as u64) * p;
    Ok(vals.iter().map(|&v| phase_complex(v as u128, q as u128)).collect::<CompensatedSum>().value())
}

fn complete_sum_with_roots(vals: &[u64], roots: &[Complex64]) -> Complex64 {
    vals.iter().map(|&v| roots[v as usize]).collect::<CompensatedSum>().value()
}

/// `Σ_{r mod q} e((values[r] + t r) / q)` for tabulated `values`.
pub fn twisted_sum(values: &[u64], t: i64, roots: &[Complex64]) -> Complex64 {
    let q = values.len() as u64;
    debug_assert_eq!(roots.len() as u64, q);
    let step = t.rem_euclid(q as i64) as u64;
    let mut tr = 0u64;
    let mut acc = Complex64::new(0.0, 0.0);
    for &v in values {
        let mut idx = v + tr;
        if idx >= q {
            idx -= q;
        }
        acc += roots[idx as usize];
        tr += step;
        if tr >= q {
            tr -= q;
        }
    }
    acc
}

/// Outcome of one bound check.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ClzReport {
    pub alpha: u64,
    pub m: u32,
    pub t: i64,
    pub nu: u32,
    pub abs_sum: f64,
    pub bound: f64,
    pub pass: bool,
}

pub const CLZ_SLACK: f64 = 1e-9;

/// `|S_alpha| <= nu p^(t/(nu+1)) p^(m(1 - 1/(nu+1)))`, and `S_alpha = 0`
/// when `alpha` is not critical.
pub fn clz_bound(p: u64, m: u32, t: i64, nu: u32) -> f64 {
    if nu == 0 {
        return 0.0;
    }
    let e = 1.0 / (nu as f64 + 1.0);
    let p = p as f64;
    nu as f64 * p.powf(t as f64 * e) * p.powf(m as f64 * (1.0 - e))
}

pub fn clz_check(f: &RationalFunc, p: u64, m: u32, alpha: u64) -> Result<ClzReport> {
    let crit = critical_points(f, p)?;
    clz_check_with(f, &crit, p, m, alpha, None)
}

fn clz_check_with(
    f: &RationalFunc,
    crit: &CriticalData,
    p: u64,
    m: u32,
    alpha: u64,
    roots: Option<&[Complex64]>,
) -> Result<ClzReport> {
    if (m as i64) < crit.t + 2 {
        return Err(Error::HypothesisViolated { m, t: crit.t });
    }
    let vals = class_values(f, p, m, alpha)?;
    let s = match roots {
        Some(r) => complete_sum_with_roots(&vals, r),
        None => {
            let q = vals.len() as u128 * p as u128;
            vals.iter().map(|&v| phase_complex(v as u128, q)).collect::<CompensatedSum>().value()
        }
    };
    Ok(clz_report(crit, p, m, alpha, s))
}

fn clz_report(crit: &CriticalData, p: u64, m: u32, alpha: u64, s: Complex64) -> ClzReport {
    let nu = crit.nu(alpha % p);
    let bound = clz_bound(p, m, crit.t, nu);
    let abs_sum = s.norm();
    ClzReport { alpha: alpha % p, m, t: crit.t, nu, abs_sum, bound, pass: abs_sum <= bound + CLZ_SLACK }
}

/// Aggregate of a corpus run.
#[derive(Debug, Clone, Default, Serialize)]
pub struct CorpusSummary {
    pub functions: usize,
    pub checks: usize,
    pub critical_checks: usize,
    pub skipped_hypothesis: usize,
    pub failures: Vec<String>,
    /// Largest `|S| / bound` over critical classes.
    pub max_ratio: f64,
}

/// Runs the bound check on every function of the corpus, every
/// non-degenerate class and every `m in t+2..=max_m`. Also checks that the
/// class sums at `m = t+2` add up to the full sum over unit-denominator residues and that
/// multiplicities sum to at most the reduced degree.
pub fn run_corpus(corpus: &[(RationalFunc, u64)], max_m: u32, exec: Exec) -> Result<CorpusSummary> {
    let mut tables: Vec<((u64, u32), Vec<Complex64>)> = Vec::new();
    for (_, p) in corpus {
        for m in 1..=max_m {
            if !tables.iter().any(|(k, _)| *k == (*p, m)) {
                tables.push(((*p, m), root_table(pow_u128(*p, m).unwrap() as u64)));
            }
        }
    }
    let roots = |p: u64, m: u32| -> &[Complex64] {
        &tables.iter().find(|(k, _)| *k == (p, m)).expect("table built above").1
    };
    let per_fn = exec.map_slice(corpus, |(f, p)| -> Result<CorpusSummary> {
        let p = *p;
        let mut s = CorpusSummary { functions: 1, ..Default::default() };
        let crit = critical_points(f, p)?;
        let nu_total: u32 = crit.points.iter().map(|c| c.nu).sum();
        if nu_total as usize > crit.reduced_degree {
            s.failures.push(format!("{f} mod {p}: multiplicities {nu_total} exceed degree"));
        }
        if crit.t + 2 > max_m as i64 {
            s.skipped_hypothesis += 1;
            return Ok(s);
        }
        let den = f.den.to_fp(p);
        let m_first = crit.t.max(0) as u32 + 2;
        for m in m_first..=max_m {
            let r = roots(p, m);
            let mut total = CompensatedSum::default();
            for alpha in (0..p).filter(|&a| den.eval(a) != 0) {
                let class_sum = complete_sum_with_roots(&class_values(f, p, m, alpha)?, r);
                total.add(class_sum);
                let rep = clz_report(&crit, p, m, alpha, class_sum);
                s.checks += 1;
                if rep.nu > 0 {
                    s.critical_checks += 1;
                    s.max_ratio = s.max_ratio.max(rep.abs_sum / rep.bound);
                }
                if !rep.pass {
                    s.failures.push(format!(
                        "{f} mod {p}^{m}, alpha={alpha}: |S|={} > bound {} (nu={}, t={})",
                        rep.abs_sum, rep.bound, rep.nu, rep.t
                    ));
                }
            }
            // cross-check against the direct full sum at the smallest m only
            if m != m_first {
                continue;
            }
            let total = total.value();
            let q = pow_u128(p, m).unwrap() as u64;
            let direct = (0..q)
                .filter(|&n| den.eval(n % p) != 0)
                .map(|n| r[f.eval_mod(n as i128, q as u128).expect("unit denominator") as usize])
                .fold(Complex64::new(0.0, 0.0), |a, z| a + z);
            if (direct - total).norm() > 1e-9 * (q as f64) {
                s.failures.push(format!("{f} mod {p}^{m}: class sums do not partition the full sum"));
            }
        }
        Ok(s)
    });
    let mut out = CorpusSummary::default();
    for r in per_fn {
        let r = r?;
        out.functions += r.functions;
        out.checks += r.checks;
        out.critical_checks += r.critical_checks;
        out.skipped_hypothesis += r.skipped_hypothesis;
        out.failures.extend(r.failures);
        out.max_ratio = out.max_ratio.max(r.max_ratio);
    }
    Ok(out)
}

/// Seeded corpus of rational functions (numerator degree <= 4, denominator
/// degree <= 3) cycling through `primes`. Half are random; the other half are
/// built around high-order zeros `c (x - a)^j + p g(x)` so that critical
/// points of multiplicity up to 3 occur, some scaled by powers of `p` to
/// exercise `t > 0`.
pub fn seeded_corpus(seed: u64, count: usize, primes: &[u64]) -> Vec<(RationalFunc, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p = primes[out.len() % primes.len()];
        let pi = p as i128;
        let num = if out.len() % 2 == 0 {
            let deg = rng.gen_range(1..=4);
            IntPolynomial::new((0..=deg).map(|_| rng.gen_range(-60i128..=60)).collect())
        } else {
            let a = rng.gen_range(0..pi);
            let j = rng.gen_range(2..=4u32);
            let c = rng.gen_range(1..pi);
            let base = IntPolynomial::linear(-a, 1).pow(j).scale(c);
            let tail = IntPolynomial::new((0..=2).map(|_| rng.gen_range(-9i128..=9)).collect());
            base.add(&tail.scale(pi))
        };
        let scale = match rng.gen_range(0..6) {
            0 => pi,
            1 => pi * pi,
            _ => 1,
        };
        let num = num.scale(scale);
        let den = if rng.gen_bool(0.5) {
            IntPolynomial::constant(1)
        } else {
            let deg = rng.gen_range(1..=3);
            let mut c: Vec<i128> = (0..=deg).map(|_| rng.gen_range(-20i128..=20)).collect();
            if c[0] % pi == 0 {
                c[0] += 1;
            }
            IntPolynomial::new(c)
        };
        let Ok(f) = RationalFunc::new(num, den) else { continue };
        if f.den.ord_p(p).finite() != Some(0) || f.derivative().num.is_zero() {
            continue;
        }
        out.push((f, p));
    }
    out
}
