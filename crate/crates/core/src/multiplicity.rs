//! Orders and critical-point multiplicities of the rational functions that
//! govern the complete sums after one and two Weyl shifts:
//!
//! `R1(r) = 2 g1 a0 p^2 (β - T^2)/(β + T^2)^2 + t1`,
//! `R2(r) = -4 g1 g2 a0 p^3 T (3β - T^2)/(β + T^2)^3 + t2`, `T = v + p r`.
//!
//! Their numerators `P1 = Σ c_i r^i`, `P2 = Σ d_i r^i` are expanded exactly;
//! the denominators are unit-valued mod `p` because `p ∤ u = β + v^2`, so
//! `ω_i = ord_p(P_i)` and the multiplicities come from `P_i / p^ω_i mod p`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::padic::{add_mod, inv_mod, is_prime, mul_mod, ord_p_int, pow_mod, pow_u128, reduce, sub_mod, Valuation};
use crate::par::Exec;
use crate::poly::{IntPolynomial, RationalFunc};

/// Parameters of one audit tuple. `t1`/`t2` are only read by the matching
/// case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AuditParams {
    pub p: u64,
    pub a0: i128,
    pub g1: i128,
    pub g2: i128,
    pub v: i128,
    pub beta: i128,
    pub t1: i128,
    pub t2: i128,
}

impl AuditParams {
    pub fn u(&self) -> i128 {
        self.beta + self.v * self.v
    }

    /// `p > 3` prime and `p ∤ a0 g1 g2 u v`.
    pub fn check(&self) -> Result<()> {
        if self.p <= 3 || !is_prime(self.p) {
            return Err(Error::ParamViolation(format!("p = {} must be a prime > 3", self.p)));
        }
        let p = self.p as i128;
        for (name, x) in [("a0", self.a0), ("g1", self.g1), ("g2", self.g2), ("u", self.u()), ("v", self.v)] {
            if x.rem_euclid(p) == 0 {
                return Err(Error::ParamViolation(format!("{name} = {x} is divisible by p = {p}: {self:?}")));
            }
        }
        Ok(())
    }

    fn t_poly(&self) -> IntPolynomial {
        IntPolynomial::linear(self.v, self.p as i128)
    }

    fn d_poly(&self) -> IntPolynomial {
        let t = self.t_poly();
        IntPolynomial::constant(self.beta).add(&t.mul(&t))
    }
}

/// `R1 = P1 / Q1` with `Q1 = (β + T^2)^2`.
pub fn build_r1(params: &AuditParams) -> Result<RationalFunc> {
    params.check()?;
    let p = params.p as i128;
    let t = params.t_poly();
    let d = params.d_poly();
    let lead = IntPolynomial::constant(params.beta).sub(&t.mul(&t)).scale(2 * params.g1 * params.a0 * p * p);
    let num = lead.add(&d.pow(2).scale(params.t1));
    RationalFunc::new(num, d.pow(2))
}

/// `R2 = P2 / Q2` with `Q2 = (β + T^2)^3`.
pub fn build_r2(params: &AuditParams) -> Result<RationalFunc> {
    params.check()?;
    let p = params.p as i128;
    let t = params.t_poly();
    let d = params.d_poly();
    let cubic = t.mul(&IntPolynomial::constant(3 * params.beta).sub(&t.mul(&t)));
    let lead = cubic.scale(-4 * params.g1 * params.g2 * params.a0 * p.pow(3));
    let num = lead.add(&d.pow(3).scale(params.t2));
    RationalFunc::new(num, d.pow(3))
}

/// The closed-form coefficients `c0..c4` of `P1`.
pub fn printed_c(params: &AuditParams) -> [i128; 5] {
    let AuditParams { a0, g1, v, beta, t1, .. } = *params;
    let p = params.p as i128;
    let u = params.u();
    [
        2 * p * p * a0 * g1 * (beta - v * v) + t1 * u * u,
        4 * p * (-p * p * a0 * g1 * v + u * v * t1),
        2 * p * p * (-p * p * a0 * g1 + beta * t1 + 3 * t1 * v * v),
        4 * p.pow(3) * t1 * v,
        p.pow(4) * t1,
    ]
}

/// The closed-form coefficients `d0..d6` of `P2` as printed, with `d0` in
/// its first form `4p^3 a0 g1 g2 v (v^2 - 3β) - t2 u^3`.
pub fn printed_d(params: &AuditParams) -> [i128; 7] {
    let AuditParams { a0, g1, g2, v, beta, t2, .. } = *params;
    let p = params.p as i128;
    let u = params.u();
    let a = a0 * g1 * g2;
    [
        4 * p.pow(3) * a * v * (v * v - 3 * beta) - t2 * u.pow(3),
        6 * p * (beta * beta * t2 * v + 2 * beta * t2 * v.pow(3) + t2 * v.pow(5) + 2 * p.pow(3) * a * (v * v - beta)),
        3 * p * p * (beta * beta * t2 + 6 * beta * t2 * v * v + 5 * t2 * v.pow(4) + 4 * p.pow(3) * a * v),
        4 * p.pow(3) * (p.pow(3) * a + 3 * beta * t2 * v + 5 * t2 * v.pow(3)),
        3 * p.pow(4) * (5 * v * v + beta) * t2,
        6 * p.pow(5) * t2 * v,
        p.pow(6) * t2,
    ]
}

/// The rewritten form of `d0`, `a0 g1 g2 p^3 v (v^2 - 3β) - t2 u^3`.
pub fn printed_d0_rewritten(params: &AuditParams) -> i128 {
    let p = params.p as i128;
    let v = params.v;
    params.a0 * params.g1 * params.g2 * p.pow(3) * v * (v * v - 3 * params.beta) - params.t2 * params.u().pow(3)
}

/// Indices where a closed-form table differs from the expansion.
pub fn coefficient_deltas(expanded: &IntPolynomial, printed: &[i128]) -> Vec<usize> {
    (0..printed.len().max(expanded.coeffs().len()))
        .filter(|&i| expanded.coeff(i) != printed.get(i).copied().unwrap_or(0))
        .collect()
}

/// Case labels by `ord_p(t_i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Case {
    /// `ord t1 <= 1`.
    C11,
    /// `ord t1 >= 3` or `t1 = 0`.
    C12,
    /// `ord t1 = 2`.
    C13,
    /// `ord t2 <= 2`.
    C21,
    /// `ord t2 >= 4` or `t2 = 0`.
    C22,
    /// `ord t2 = 3`.
    C23,
}

impl Case {
    pub fn label(self) -> &'static str {
        match self {
            Case::C11 => "1.1",
            Case::C12 => "1.2",
            Case::C13 => "1.3",
            Case::C21 => "2.1",
            Case::C22 => "2.2",
            Case::C23 => "2.3",
        }
    }

    pub fn all() -> [Case; 6] {
        [Case::C11, Case::C12, Case::C13, Case::C21, Case::C22, Case::C23]
    }

    /// Claimed `(max m, max ω, max reduced degree)`.
    pub fn claim(self) -> (u32, u32, usize) {
        match self {
            Case::C11 => (1, 2, 1),
            Case::C12 => (1, 3, 1),
            Case::C13 => (2, 5, 2),
            Case::C21 => (0, 2, 0),
            Case::C22 => (2, 5, 2),
            Case::C23 => (3, 8, 3),
        }
    }

    fn of(first: bool, t: i128, p: u64) -> Case {
        let o = match ord_p_int(t, p) {
            Valuation::Finite(o) => o,
            Valuation::Infinite => u32::MAX,
        };
        match (first, o) {
            (true, 0..=1) => Case::C11,
            (true, 2) => Case::C13,
            (true, _) => Case::C12,
            (false, 0..=2) => Case::C21,
            (false, 3) => Case::C23,
            (false, _) => Case::C22,
        }
    }
}

/// `ω`, `m`, the reduced degree and the case of one audit.
#[derive(Debug, Clone, Serialize)]
pub struct AuditResult {
    pub case: Case,
    pub omega: u32,
    pub m: u32,
    pub reduced_degree: usize,
    pub coefficient_orders: Vec<Option<u32>>,
}

fn audit_numerator(num: &IntPolynomial, p: u64, case: Case) -> Result<AuditResult> {
    let omega = num
        .ord_p(p)
        .finite()
        .ok_or_else(|| Error::ClaimViolated(format!("numerator vanishes identically in case {}", case.label())))?;
    let (_, reduced) = num.strip_content(p);
    let fp = reduced.to_fp(p);
    let m = (0..p).map(|a| fp.root_multiplicity(a)).max().unwrap_or(0);
    Ok(AuditResult {
        case,
        omega,
        m,
        reduced_degree: fp.degree().unwrap_or(0),
        coefficient_orders: num.coeffs().iter().map(|&c| ord_p_int(c, p).finite()).collect(),
    })
}

fn check_claims(res: &AuditResult, params: &AuditParams) -> Result<()> {
    let (m, omega, deg) = res.case.claim();
    if res.m > m || res.omega > omega || res.reduced_degree > deg {
        return Err(Error::ClaimViolated(format!(
            "case {}: m = {}, ω = {}, reduced degree = {} against claimed {m}, {omega}, {deg}; {params:?}",
            res.case.label(),
            res.m,
            res.omega,
            res.reduced_degree
        )));
    }
    Ok(())
}

/// First case family: `ω1`, `m1` for `R1`, with the case claims asserted.
pub fn audit_case1(params: &AuditParams) -> Result<AuditResult> {
    let r1 = build_r1(params)?;
    let res = audit_numerator(&r1.num, params.p, Case::of(true, params.t1, params.p))?;
    check_claims(&res, params)?;
    Ok(res)
}

/// Second case family, including `m2 <= 2` when `p ≡ ±5 mod 12`.
pub fn audit_case2(params: &AuditParams) -> Result<AuditResult> {
    let r2 = build_r2(params)?;
    let res = audit_numerator(&r2.num, params.p, Case::of(false, params.t2, params.p))?;
    check_claims(&res, params)?;
    if matches!(params.p % 12, 5 | 7) && res.m > 2 {
        return Err(Error::ClaimViolated(format!("m2 = {} > 2 with p ≡ ±5 mod 12; {params:?}", res.m)));
    }
    Ok(res)
}

/// `(3 | p)` by Euler's criterion.
pub fn legendre_3(p: u64) -> i32 {
    match pow_mod(3, ((p - 1) / 2) as u128, p as u128) {
        1 => 1,
        0 => 0,
        _ => -1,
    }
}

/// `(3 | p) = -1` exactly when `p ≡ ±5 mod 12`.
pub fn legendre_3_check(p: u64) -> bool {
    (legendre_3(p) == -1) == matches!(p % 12, 5 | 7)
}

/// Maxima for one case over a sweep.
#[derive(Debug, Clone, Default, Serialize)]
pub struct CaseSummary {
    pub case: String,
    pub count: u64,
    pub max_m: u32,
    pub max_omega: u32,
    pub max_reduced_degree: usize,
    pub m_histogram: Vec<u64>,
}

/// Sweep report.
#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub p: u64,
    pub tuples1: u64,
    pub tuples2: u64,
    pub max_m1: u32,
    pub max_omega1: u32,
    pub max_m2: u32,
    pub max_omega2: u32,
    pub cases: Vec<CaseSummary>,
    pub m2_equals_3_observed: bool,
    pub legendre_3: i32,
    pub violations: Vec<String>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// What to enumerate in a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepScope {
    pub p: u64,
    /// `None` means every unit mod `p`.
    pub a0: Option<Vec<i128>>,
    pub g1: Option<Vec<i128>>,
    pub max_t_order: u32,
    /// Claims asserted for this prime beyond `m2 <= 3` (off for spot sweeps).
    pub full_claims: bool,
}

impl SweepScope {
    /// Every unit `v, a0, g1, g2 mod p`, `β mod p^2` with `p ∤ u`, and
    /// `t = 0` or `p^j * unit` for `j <= 6`.
    pub fn exhaustive(p: u64) -> Self {
        SweepScope { p, a0: None, g1: None, max_t_order: 6, full_claims: true }
    }

    /// `a0 = g1 = 1`, asserting only `m2 <= 3`.
    pub fn spot(p: u64) -> Self {
        SweepScope { p, a0: Some(vec![1]), g1: Some(vec![1]), max_t_order: 6, full_claims: false }
    }
}

fn units(p: u64) -> Vec<i128> {
    (1..p as i128).collect()
}

fn t_values(p: u64, max_order: u32) -> Vec<i128> {
    let mut out = vec![0];
    for j in 0..=max_order {
        let pj = (p as i128).pow(j);
        out.extend((1..p as i128).map(|e| e * pj));
    }
    out
}

#[derive(Default)]
struct Acc {
    tuples1: u64,
    tuples2: u64,
    cases: std::collections::BTreeMap<Case, CaseSummary>,
    violations: Vec<String>,
}

impl Acc {
    fn record(&mut self, res: &AuditResult) {
        let s = self.cases.entry(res.case).or_insert_with(|| CaseSummary {
            case: res.case.label().to_string(),
            ..Default::default()
        });
        s.count += 1;
        s.max_m = s.max_m.max(res.m);
        s.max_omega = s.max_omega.max(res.omega);
        s.max_reduced_degree = s.max_reduced_degree.max(res.reduced_degree);
        if s.m_histogram.len() <= res.m as usize {
            s.m_histogram.resize(res.m as usize + 1, 0);
        }
        s.m_histogram[res.m as usize] += 1;
    }

    fn merge(&mut self, other: Acc) {
        self.tuples1 += other.tuples1;
        self.tuples2 += other.tuples2;
        for (case, s) in other.cases {
            let e = self.cases.entry(case).or_insert_with(|| CaseSummary { case: s.case.clone(), ..Default::default() });
            e.count += s.count;
            e.max_m = e.max_m.max(s.max_m);
            e.max_omega = e.max_omega.max(s.max_omega);
            e.max_reduced_degree = e.max_reduced_degree.max(s.max_reduced_degree);
            if e.m_histogram.len() < s.m_histogram.len() {
                e.m_histogram.resize(s.m_histogram.len(), 0);
            }
            for (i, c) in s.m_histogram.iter().enumerate() {
                e.m_histogram[i] += c;
            }
        }
        self.violations.extend(other.violations);
    }
}

/// Runs both case families over `scope`; claims that fail are collected as
/// violations rather than aborting the sweep.
pub fn audit_sweep(scope: &SweepScope, exec: Exec) -> Result<AuditReport> {
    let p = scope.p;
    if p <= 3 || !is_prime(p) {
        return Err(Error::ParamViolation(format!("p = {p} must be a prime > 3")));
    }
    let vs = units(p);
    let a0s = scope.a0.clone().unwrap_or_else(|| units(p));
    let g1s = scope.g1.clone().unwrap_or_else(|| units(p));
    let g2s = units(p);
    let ts = t_values(p, scope.max_t_order);
    let pi = p as i128;

    let parts = exec.map(vs.len(), |iv| {
        let v = vs[iv];
        let mut acc = Acc::default();
        for beta in 0..pi * pi {
            if (beta + v * v) % pi == 0 {
                continue;
            }
            for &a0 in &a0s {
                for &g1 in &g1s {
                    let base = AuditParams { p, a0, g1, g2: 1, v, beta, t1: 0, t2: 0 };
                    if scope.full_claims {
                        for &t1 in &ts {
                            let params = AuditParams { t1, ..base };
                            acc.tuples1 += 1;
                            match audit_case1(&params) {
                                Ok(res) => acc.record(&res),
                                Err(e) => acc.violations.push(e.to_string()),
                            }
                        }
                    }
                    for &g2 in &g2s {
                        for &t2 in &ts {
                            let params = AuditParams { g2, t2, ..base };
                            acc.tuples2 += 1;
                            let res = if scope.full_claims {
                                audit_case2(&params)
                            } else {
                                build_r2(&params).and_then(|r2| {
                                    let res = audit_numerator(&r2.num, p, Case::of(false, t2, p))?;
                                    if res.m > 3 {
                                        return Err(Error::ClaimViolated(format!("m2 = {} > 3; {params:?}", res.m)));
                                    }
                                    Ok(res)
                                })
                            };
                            match res {
                                Ok(res) => acc.record(&res),
                                Err(e) => acc.violations.push(e.to_string()),
                            }
                        }
                    }
                }
            }
        }
        acc
    });
    let mut total = Acc::default();
    for part in parts {
        total.merge(part);
    }
    let get = |c: Case| total.cases.get(&c);
    let max_over = |cs: &[Case], f: fn(&CaseSummary) -> u32| cs.iter().filter_map(|&c| get(c)).map(f).max().unwrap_or(0);
    let fam1 = [Case::C11, Case::C12, Case::C13];
    let fam2 = [Case::C21, Case::C22, Case::C23];
    let max_m2 = max_over(&fam2, |s| s.max_m);
    Ok(AuditReport {
        p,
        tuples1: total.tuples1,
        tuples2: total.tuples2,
        max_m1: max_over(&fam1, |s| s.max_m),
        max_omega1: max_over(&fam1, |s| s.max_omega),
        max_m2,
        max_omega2: max_over(&fam2, |s| s.max_omega),
        cases: total.cases.values().cloned().collect(),
        m2_equals_3_observed: max_m2 >= 3,
        legendre_3: legendre_3(p),
        violations: total.violations,
    })
}

/// Smallest valuations of `F1' - R1` and `F2' - R2` over the samples.
#[derive(Debug, Clone, Serialize)]
pub struct LinkReport {
    pub n: u32,
    pub k1: u32,
    pub k2: u32,
    pub samples: usize,
    pub min_ord1: u32,
    pub min_ord2: u32,
}

/// `F'(w) = 2 a0 p T / (β + T^2) mod m`, `T = v + p w`.
fn f_prime(params: &AuditParams, w: i128, m: u128) -> Result<u128> {
    let p = params.p as u128;
    let t = add_mod(reduce(params.v, m), mul_mod(p, reduce(w, m), m), m);
    let d = add_mod(reduce(params.beta, m), mul_mod(t, t, m), m);
    let num = mul_mod(mul_mod(reduce(2 * params.a0, m), p, m), t, m);
    Ok(mul_mod(num, inv_mod(d as i128, m)?, m))
}

fn ord_mod(x: u128, p: u64, n: u32) -> u32 {
    if x == 0 {
        return n;
    }
    let mut x = x;
    let mut o = 0;
    while x % p as u128 == 0 {
        x /= p as u128;
        o += 1;
    }
    o
}

/// Differences `F1'(r) = (F'(r + Δ1) - F'(r)) / p^k1 + t1` and the second
/// difference analogue, `Δi = p^ki gi`, compared with `R1`, `R2` modulo
/// `p^n` at `samples` seeded `r`. Each difference must agree with `R_i` to
/// at least `threshold_i` powers of `p`.
#[allow(clippy::too_many_arguments)]
pub fn fprime_link_check(
    params: &AuditParams,
    n: u32,
    k1: u32,
    k2: u32,
    thresholds: (u32, u32),
    samples: usize,
    seed: u64,
) -> Result<LinkReport> {
    params.check()?;
    if k1 == 0 || k2 == 0 {
        return Err(Error::ParamViolation("shift exponents must be at least 1".into()));
    }
    let p = params.p;
    let wide = pow_u128(p, n + k1 + k2).ok_or_else(|| Error::Domain(format!("{p}^{} exceeds 128 bits", n + k1 + k2)))?;
    let mn = pow_u128(p, n).unwrap();
    let d1 = pow_u128(p, k1).unwrap() as i128 * params.g1;
    let d2 = pow_u128(p, k2).unwrap() as i128 * params.g2;
    let r1 = build_r1(params)?;
    let r2 = build_r2(params)?;
    let pk1 = pow_u128(p, k1).unwrap();
    let pk12 = pow_u128(p, k1 + k2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut min1, mut min2) = (n, n);
    for _ in 0..samples {
        let r = rng.gen_range(0..mn as i128);
        let a = sub_mod(f_prime(params, r + d1, wide)?, f_prime(params, r, wide)?, wide);
        if a % pk1 != 0 {
            return Err(Error::ClaimViolated(format!("first difference of F' not divisible by p^{k1} at r = {r}")));
        }
        let f1 = add_mod((a / pk1) % mn, reduce(params.t1, mn), mn);
        let o1 = ord_mod(sub_mod(f1, r1.eval_mod(r, mn)?, mn), p, n);

        let b = add_mod(
            sub_mod(
                sub_mod(f_prime(params, r + d1 + d2, wide)?, f_prime(params, r + d1, wide)?, wide),
                f_prime(params, r + d2, wide)?,
                wide,
            ),
            f_prime(params, r, wide)?,
            wide,
        );
        if b % pk12 != 0 {
            return Err(Error::ClaimViolated(format!("second difference of F' not divisible by p^{} at r = {r}", k1 + k2)));
        }
        let f2 = add_mod((b / pk12) % mn, reduce(params.t2, mn), mn);
        let o2 = ord_mod(sub_mod(f2, r2.eval_mod(r, mn)?, mn), p, n);
        if o1 < thresholds.0 || o2 < thresholds.1 {
            return Err(Error::ClaimViolated(format!(
                "ord(F1' - R1) = {o1}, ord(F2' - R2) = {o2} at r = {r}, below ({}, {}); {params:?}",
                thresholds.0, thresholds.1
            )));
        }
        min1 = min1.min(o1);
        min2 = min2.min(o2);
    }
    Ok(LinkReport { n, k1, k2, samples, min_ord1: min1, min_ord2: min2 })
}
