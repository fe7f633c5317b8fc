//! Exponent bookkeeping for the main estimates, the comparison with the
//! square-free bound `N^(2-1/r) q^((r+2)/(4r^2))`, the choice of Weyl shifts,
//! and desk-scale sweeps of `|S_Q|` against the bounds.

use std::fmt::Write as _;
use std::time::Instant;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::characters::DirichletCharacter;
use crate::error::{Error, Result};
use crate::par::Exec;
use crate::pipeline::form::{sum_sq, QuadraticForm, SumParams};

pub type Q64 = Ratio<i64>;

fn r(n: i64, d: i64) -> Q64 {
    Ratio::new(n, d)
}

/// Every exponent attached to a pair `(j1, j2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExponentSet {
    pub j1: i64,
    pub j2: i64,
    /// `(j1-1)/(2(2j1-1))`, the power of `q` in the one-shift bound.
    pub rho1: Q64,
    /// `(7j2-4)/(2(5j2-3))`.
    pub sigma: Q64,
    /// `(j2-1)/(2(5j2-3))`.
    pub rho2: Q64,
    /// `(j1-1)/(2j1-1)`.
    pub one_shift_lower: Q64,
    /// `(3j1-2)/(2(2j1-1))`.
    pub one_shift_upper: Q64,
    /// `(j2-1)/(3j2-2)`.
    pub two_shift_lower: Q64,
    /// `(3j1j2-j1-4j2+2)/((2j1-1)(2j2-1))`, where the two bounds cross.
    pub crossover: Q64,
}

impl ExponentSet {
    /// Power of `N` in the two-shift bound with `M = N`, `σ + 1`.
    pub fn two_shift_n_power(&self) -> Q64 {
        self.sigma + 1
    }
}

pub fn exponents(j1: i64, j2: i64) -> Result<ExponentSet> {
    if j1 < 2 || j2 < 2 {
        return Err(Error::Domain(format!("need j1, j2 >= 2, got ({j1}, {j2})")));
    }
    Ok(ExponentSet {
        j1,
        j2,
        rho1: r(j1 - 1, 2 * (2 * j1 - 1)),
        sigma: r(7 * j2 - 4, 2 * (5 * j2 - 3)),
        rho2: r(j2 - 1, 2 * (5 * j2 - 3)),
        one_shift_lower: r(j1 - 1, 2 * j1 - 1),
        one_shift_upper: r(3 * j1 - 2, 2 * (2 * j1 - 1)),
        two_shift_lower: r(j2 - 1, 3 * j2 - 2),
        crossover: r(3 * j1 * j2 - j1 - 4 * j2 + 2, (2 * j1 - 1) * (2 * j2 - 1)),
    })
}

/// Exponents of the square-free bound for one `r >= 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HbExponents {
    pub r: i64,
    /// `(r+2)/(4r^2)`.
    pub q_power: Q64,
    /// `1/4 + 1/(2r)`.
    pub valid_lower: Q64,
    /// `5/12 + 1/(2r)`.
    pub valid_upper: Q64,
    /// `(r^2+5r+2)/(4(r^2+r))`.
    pub optimal_lower: Q64,
    /// `(r^2+3r-2)/(4(r^2-r))`.
    pub optimal_upper: Q64,
}

pub fn hb_exponents(rr: i64) -> Result<HbExponents> {
    if rr < 3 {
        return Err(Error::Domain(format!("need r >= 3, got {rr}")));
    }
    Ok(HbExponents {
        r: rr,
        q_power: r(rr + 2, 4 * rr * rr),
        valid_lower: r(1, 4) + r(1, 2 * rr),
        valid_upper: r(5, 12) + r(1, 2 * rr),
        optimal_lower: r(rr * rr + 5 * rr + 2, 4 * (rr * rr + rr)),
        optimal_upper: r(rr * rr + 3 * rr - 2, 4 * (rr * rr - rr)),
    })
}

/// Threshold exponent above which `N^(3/2) q^rho1` beats the square-free bound,
/// `r(j1-1)/((r-2)(2j1-1)) - (r+2)/(2r(r-2))`.
pub fn one_shift_threshold(j1: i64, rr: i64) -> Q64 {
    r(rr * (j1 - 1), (rr - 2) * (2 * j1 - 1)) - r(rr + 2, 2 * rr * (rr - 2))
}

/// Threshold for the two-shift bound,
/// `(2(j2-1)r^2 - (5j2-3)(r+2)) / (2(3j2-2)r^2 - 4(5j2-3)r)`.
pub fn two_shift_threshold(j2: i64, rr: i64) -> Q64 {
    r(
        2 * (j2 - 1) * rr * rr - (5 * j2 - 3) * (rr + 2),
        2 * (3 * j2 - 2) * rr * rr - 4 * (5 * j2 - 3) * rr,
    )
}

/// The `r` in `r_range` for which each branch supersedes the square-free bound
/// (threshold at most the optimal lower end).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SupersedeReport {
    pub j1: i64,
    pub j2: i64,
    pub one_shift: Vec<i64>,
    pub two_shift: Vec<i64>,
}

pub fn supersede_ranges(j1: i64, j2: i64, r_range: std::ops::RangeInclusive<i64>) -> Result<SupersedeReport> {
    exponents(j1, j2)?;
    let mut one_shift = Vec::new();
    let mut two_shift = Vec::new();
    for rr in r_range {
        let hb = hb_exponents(rr)?;
        if one_shift_threshold(j1, rr) <= hb.optimal_lower {
            one_shift.push(rr);
        }
        if two_shift_threshold(j2, rr) <= hb.optimal_lower {
            two_shift.push(rr);
        }
    }
    Ok(SupersedeReport { j1, j2, one_shift, two_shift })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    OneShift,
    TwoShift,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::OneShift => "one-shift",
            Branch::TwoShift => "two-shift",
        }
    }
}

impl std::str::FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one-shift" => Ok(Branch::OneShift),
            "two-shift" => Ok(Branch::TwoShift),
            _ => Err(Error::InvalidInput(format!("unknown branch {s:?}, expected one-shift or two-shift"))),
        }
    }
}

/// Chosen Weyl shifts, `H_i = p^k_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HChoice {
    pub k1: u32,
    pub h1: u64,
    pub k2: Option<u32>,
    pub h2: Option<u64>,
}

/// Smallest `k` with `p^k >= p^e`, with `e` rounded when within `1e-9` of an
/// integer so exact powers land on themselves.
fn ceil_log(e: f64) -> i64 {
    let near = e.round();
    if (e - near).abs() < 1e-9 {
        near as i64
    } else {
        e.ceil() as i64
    }
}

fn window_power(p: u64, e: f64, x: f64, what: &str) -> Result<(u32, u64)> {
    let k = ceil_log(e).max(0);
    let h = (p as f64).powi(k as i32);
    if h > x || k > 62 {
        return Err(Error::Infeasible(format!(
            "{what}: the window [p^{e:.4}, p^{:.4}) holds p^{k} = {h}, which exceeds X = {x}",
            e + 1.0
        )));
    }
    Ok((k as u32, (p as u128).pow(k as u32) as u64))
}

/// The power of `p` in each half-open balancing window:
/// one shift: `q^((j1-1)/(2j1-1)) <= H1 < p q^((j1-1)/(2j1-1))`;
/// two shifts: `X^((2j2-1)/(5j2-3)) q^((j2-1)/(5j2-3)) <= H1 < p(...)` and
/// `X^(-(j2-1)/(5j2-3)) q^(2(j2-1)/(5j2-3)) <= H2 < p(...)`.
pub fn choose_h(branch: Branch, p: u64, n: u32, x: f64, j: i64) -> Result<HChoice> {
    if j < 2 || !(x >= 1.0) {
        return Err(Error::Domain(format!("need j >= 2 and X >= 1, got j = {j}, X = {x}")));
    }
    let lx = x.ln() / (p as f64).ln();
    let n = n as f64;
    let j = j as f64;
    match branch {
        Branch::OneShift => {
            let (k1, h1) = window_power(p, n * (j - 1.0) / (2.0 * j - 1.0), x, "H1")?;
            Ok(HChoice { k1, h1, k2: None, h2: None })
        }
        Branch::TwoShift => {
            let d = 5.0 * j - 3.0;
            let (k1, h1) = window_power(p, lx * (2.0 * j - 1.0) / d + n * (j - 1.0) / d, x, "H1")?;
            let (k2, h2) = window_power(p, -lx * (j - 1.0) / d + n * 2.0 * (j - 1.0) / d, x, "H2")?;
            Ok(HChoice { k1, h1, k2: Some(k2), h2: Some(h2) })
        }
    }
}

/// One row of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub p: u64,
    pub n: u32,
    pub q_a: i64,
    pub q_b: i64,
    pub q_c: i64,
    pub chi_index: u64,
    pub m: u64,
    pub n_len: u64,
    pub branch: Branch,
    pub abs_sum: f64,
    pub bound: f64,
    pub ratio: f64,
    pub seconds: Option<f64>,
}

/// Sweep configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub p: u64,
    pub n: u32,
    pub form: (i64, i64, i64),
    pub chi_index: u64,
    pub j1: i64,
    pub j2: i64,
    /// Grid points per window.
    pub points: usize,
    /// Record wall time per row (makes the output nondeterministic).
    pub timing: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { p: 5, n: 9, form: (1, 1, 3), chi_index: 1, j1: 3, j2: 4, points: 12, timing: false }
    }
}

impl SweepConfig {
    pub fn modulus(&self) -> f64 {
        (self.p as f64).powi(self.n as i32)
    }

    /// `[lo, hi]` exponents of `q` for a branch: the one-shift window runs
    /// from the crossover to its upper end, the two-shift window from its
    /// lower end up to (not including) the crossover.
    pub fn window(&self, branch: Branch) -> Result<(Q64, Q64)> {
        let e = exponents(self.j1, self.j2)?;
        Ok(match branch {
            Branch::OneShift => (e.crossover, e.one_shift_upper),
            Branch::TwoShift => (e.two_shift_lower, e.crossover),
        })
    }

    /// `points` log-spaced integer lengths in the window (upper end included
    /// for the one-shift branch only).
    pub fn grid(&self, branch: Branch) -> Result<Vec<u64>> {
        let (lo, hi) = self.window(branch)?;
        let lq = self.modulus().ln();
        let (a, b) = (to_f64(lo) * lq, to_f64(hi) * lq);
        let steps = match branch {
            Branch::OneShift => self.points.saturating_sub(1).max(1),
            Branch::TwoShift => self.points.max(1),
        };
        Ok((0..self.points)
            .map(|i| (a + (b - a) * i as f64 / steps as f64).exp().round() as u64)
            .collect())
    }

    /// Bound with constant one: `N^(3/2) q^rho1` or `N^(σ+1) q^rho2` (`M = N`),
    /// or the `M != N` forms `(M N^e + N M^e) q^rho`.
    pub fn bound(&self, branch: Branch, m: u64, n_len: u64) -> Result<f64> {
        let e = exponents(self.j1, self.j2)?;
        let q = self.modulus();
        let (m, n) = (m as f64, n_len as f64);
        Ok(match branch {
            Branch::OneShift => (m * n.sqrt() + n * m.sqrt()) / 2.0 * q.powf(to_f64(e.rho1)),
            Branch::TwoShift => {
                let s = to_f64(e.sigma);
                (m * n.powf(s) + n * m.powf(s)) / 2.0 * q.powf(to_f64(e.rho2))
            }
        })
    }
}

pub fn to_f64(x: Q64) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

/// `|S_Q|` with `A = B = 0` at each `(M, N)` against the branch bound.
pub fn sweep_main_bound(
    cfg: &SweepConfig,
    branch: Branch,
    lengths: &[(u64, u64)],
    exec: Exec,
) -> Result<Vec<SweepRecord>> {
    let (a, b, c) = cfg.form;
    let form = QuadraticForm::new(a, b, c);
    form.check(cfg.p)?;
    let chi = DirichletCharacter::primitive(cfg.p, cfg.n, cfg.chi_index)?;
    chi.value_table();
    lengths
        .iter()
        .map(|&(m, n_len)| {
            let params = SumParams::new(0, 0, m, n_len)?;
            let start = Instant::now();
            let abs_sum = sum_sq(&form, &params, &chi, exec).norm();
            let seconds = cfg.timing.then(|| start.elapsed().as_secs_f64());
            let bound = cfg.bound(branch, m, n_len)?;
            Ok(SweepRecord {
                p: cfg.p,
                n: cfg.n,
                q_a: a,
                q_b: b,
                q_c: c,
                chi_index: cfg.chi_index,
                m,
                n_len,
                branch,
                abs_sum,
                bound,
                ratio: abs_sum / bound,
                seconds,
            })
        })
        .collect()
}

/// Both windows of the default corollary sweep, `M = N`.
pub fn corollary_sweep(cfg: &SweepConfig, exec: Exec) -> Result<Vec<SweepRecord>> {
    let mut out = Vec::new();
    for branch in [Branch::TwoShift, Branch::OneShift] {
        let pts: Vec<(u64, u64)> = cfg.grid(branch)?.into_iter().map(|n| (n, n)).collect();
        out.extend(sweep_main_bound(cfg, branch, &pts, exec)?);
    }
    Ok(out)
}

pub const CSV_HEADER: &str = "p,n,Q_a,Q_b,Q_c,chi_index,M,N,branch,abs_sum,bound,ratio,seconds";

/// CSV with shortest round-trip float formatting, so output bytes depend
/// only on the values.
pub fn to_csv(records: &[SweepRecord]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in records {
        let secs = r.seconds.map(|t| format!("{t:.3}")).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{:e},{:e},{:e},{}",
            r.p, r.n, r.q_a, r.q_b, r.q_c, r.chi_index, r.m, r.n_len, r.branch.name(), r.abs_sum, r.bound, r.ratio, secs
        );
    }
    s
}

pub fn to_json(records: &[SweepRecord]) -> Result<String> {
    serde_json::to_string_pretty(records).map_err(|e| Error::InvalidInput(e.to_string()))
}

/// Least-squares slope of `log |S_Q|` against `log N`.
pub fn fit_slope(records: &[SweepRecord]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.abs_sum > 0.0)
        .map(|r| ((r.n_len as f64).ln(), r.abs_sum.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// `(sup Ψ)(sup Φ)(2M+1)(2N+1)`.
pub fn trivial_bound(m: u64, n_len: u64) -> f64 {
    let s = (-1.0f64).exp();
    s * s * (2 * m + 1) as f64 * (2 * n_len + 1) as f64
}
