//! Subcommand drivers. Each returns a JSON-able report and whether every
//! assertion held.

use anyhow::{bail, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use ppcharsum::bounds::{self, Branch, SweepConfig, SweepRecord};
use ppcharsum::characters::{postnikov_a0, postnikov_a0_with_logs, principal_unit_logs, DirichletCharacter};
use ppcharsum::expsums::{clz_check, critical_points, run_corpus, seeded_corpus};
use ppcharsum::multiplicity::{audit_sweep, SweepScope};
use ppcharsum::padic::pow_u64;
use ppcharsum::pipeline::form::{certify_completion, split_phase_terms, sq_phase_terms};
use ppcharsum::pipeline::poisson::expansion_corpus;
use ppcharsum::pipeline::split::{certify_f_representation, certify_split};
use ppcharsum::pipeline::{
    certify_taylor_identities, poisson_expansion, quadratic_completion, residue_split, sum_sq, sum_sq1, sum_sq2,
    PhaseFunction, QuadraticForm, SumParams,
};
use ppcharsum::poly::{IntPolynomial, RationalFunc};
use ppcharsum::weights::SmoothWeight;
use ppcharsum::Exec;

use crate::config::{parse_coeffs, RunConfig};

pub struct Report {
    pub body: String,
    pub passed: bool,
}

impl Report {
    fn json(value: &impl Serialize, passed: bool) -> Result<Self> {
        Ok(Report { body: serde_json::to_string_pretty(value)? + "\n", passed })
    }
}

fn totient(mut n: u64) -> u64 {
    let mut out = n;
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            while n % d == 0 {
                n /= d;
            }
            out -= out / d;
        }
        d += 1;
    }
    if n > 1 {
        out -= out / n;
    }
    out
}

fn random_primitive(rng: &mut ChaCha8Rng, p: u64, n: u32) -> u64 {
    let phi = pow_u64(p, n - 1) * (p - 1);
    loop {
        let i = rng.gen_range(1..phi);
        if i % p != 0 {
            return i;
        }
    }
}

/// Postnikov identity for every primitive character when there are few
/// (`φ(φ(p^n)) <= 200`, or `all`), else `samples` seeded ones.
pub fn verify_postnikov(cfg: &RunConfig, samples: usize, all: bool) -> Result<Report> {
    let mut moduli = Vec::new();
    let mut passed = true;
    let mut rng: Option<ChaCha8Rng> = None;
    for p in cfg.primes_or(&[5, 7]) {
        for n in cfg.exponents_or(&[2, 3, 4, 5]) {
            let phi = pow_u64(p, n - 1) * (p - 1);
            let indices: Vec<u64> = if let Some(i) = cfg.chi_index {
                vec![i]
            } else if all || totient(phi) <= 200 {
                (1..phi).filter(|i| i % p != 0).collect()
            } else {
                if rng.is_none() {
                    rng = Some(ChaCha8Rng::seed_from_u64(cfg.require_seed("sampled character sets")?));
                }
                let rng = rng.as_mut().expect("seeded above");
                (0..samples).map(|_| random_primitive(rng, p, n)).collect()
            };
            let logs = principal_unit_logs(p, n)?;
            let mut rows = Vec::new();
            for idx in indices {
                let chi = DirichletCharacter::primitive(p, n, idx)?;
                match postnikov_a0_with_logs(&chi, &logs) {
                    Ok(c) => rows.push(json!({ "index": idx, "a0": c.a0, "pass": true })),
                    Err(e) => {
                        passed = false;
                        rows.push(json!({ "index": idx, "pass": false, "error": e.to_string() }));
                    }
                }
            }
            moduli.push(json!({ "p": p, "n": n, "a0_modulus": pow_u64(p, n - 1), "characters": rows }));
        }
    }
    Report::json(&json!({ "command": "verify-postnikov", "passed": passed, "moduli": moduli }), passed)
}

/// Exhaustive audit for `p <= 7` (or `exhaustive`), spot audit otherwise.
pub fn audit_multiplicity(cfg: &RunConfig, exhaustive: bool, exec: Exec) -> Result<Report> {
    let mut reports = Vec::new();
    let mut passed = true;
    for p in cfg.primes_or(&[5, 7]) {
        let scope = if exhaustive || p <= 7 { SweepScope::exhaustive(p) } else { SweepScope::spot(p) };
        let r = audit_sweep(&scope, exec)?;
        passed &= r.passed();
        reports.push(json!({ "scope": scope, "report": r }));
    }
    Report::json(&json!({ "command": "audit-multiplicity", "passed": passed, "audits": reports }), passed)
}

pub struct SweepOutput {
    pub csv: String,
    pub json: String,
    pub records: Vec<SweepRecord>,
}

/// Both corollary windows by default, or one explicit grid (`M = N`).
pub fn sweep(cfg: &RunConfig, j1: i64, j2: i64, timing: bool, exec: Exec) -> Result<SweepOutput> {
    let form = cfg.form.unwrap_or(QuadraticForm::new(1, 1, 3));
    let sc = SweepConfig {
        p: cfg.single_p(5)?,
        n: cfg.single_n(9)?,
        form: (form.a, form.b, form.c),
        chi_index: cfg.chi_index.unwrap_or(1),
        j1,
        j2,
        points: 12,
        timing,
    };
    form.check(sc.p)?;
    let records = match cfg.grid {
        None => bounds::corollary_sweep(&sc, exec)?,
        Some(grid) => {
            let branch = cfg.branch.unwrap_or(Branch::OneShift);
            let pts: Vec<(u64, u64)> = grid.lengths(sc.modulus()).into_iter().map(|n| (n, n)).collect();
            bounds::sweep_main_bound(&sc, branch, &pts, exec)?
        }
    };
    Ok(SweepOutput { csv: bounds::to_csv(&records), json: bounds::to_json(&records)?, records })
}

fn rational(num: &str, den: Option<&str>) -> Result<RationalFunc> {
    let num = IntPolynomial::new(parse_coeffs(num)?);
    let den = IntPolynomial::new(match den {
        Some(d) => parse_coeffs(d)?,
        None => vec![1],
    });
    Ok(RationalFunc::new(num, den)?)
}

/// Single function (`num`, `den`, `m`) or a seeded corpus.
pub fn expsum(
    cfg: &RunConfig,
    num: Option<&str>,
    den: Option<&str>,
    m: Option<u32>,
    count: usize,
    max_m: u32,
    exec: Exec,
) -> Result<Report> {
    if let Some(num) = num {
        let f = rational(num, den)?;
        let p = cfg.single_p(5)?;
        let crit = critical_points(&f, p)?;
        let ms: Vec<u32> = match m {
            Some(m) => vec![m],
            None => ((crit.t.max(0) as u32 + 2)..=max_m).collect(),
        };
        let mut rows = Vec::new();
        let mut passed = true;
        let den_fp = f.den.to_fp(p);
        for m in ms {
            if (m as i64) < crit.t + 2 {
                rows.push(json!({ "m": m, "status": "skipped", "reason": format!("m < t + 2 with t = {}", crit.t) }));
                continue;
            }
            for alpha in (0..p).filter(|&a| den_fp.eval(a) != 0) {
                let r = clz_check(&f, p, m, alpha)?;
                passed &= r.pass;
                rows.push(json!({ "m": m, "status": if r.pass { "pass" } else { "fail" }, "check": r }));
            }
        }
        let body = json!({
            "command": "expsum", "function": f.to_string(), "p": p, "t": crit.t,
            "critical_points": crit.points, "passed": passed, "checks": rows,
        });
        return Report::json(&body, passed);
    }
    let seed = cfg.require_seed("the expsum corpus")?;
    let primes = cfg.primes_or(&[5, 7, 11]);
    let corpus = seeded_corpus(seed, count, &primes);
    let s = run_corpus(&corpus, max_m, exec)?;
    let passed = s.failures.is_empty();
    Report::json(&json!({ "command": "expsum", "seed": seed, "primes": primes, "passed": passed, "summary": s }), passed)
}

pub fn critpoints(cfg: &RunConfig, num: Option<&str>, den: Option<&str>, count: usize) -> Result<Report> {
    let rows: Vec<Value> = if let Some(num) = num {
        let f = rational(num, den)?;
        let mut rows = Vec::new();
        for p in cfg.primes_or(&[5]) {
            rows.push(json!({ "function": f.to_string(), "p": p, "data": critical_points(&f, p)? }));
        }
        rows
    } else {
        let seed = cfg.require_seed("the critpoints corpus")?;
        seeded_corpus(seed, count, &cfg.primes_or(&[5, 7, 11]))
            .iter()
            .map(|(f, p)| match critical_points(f, *p) {
                Ok(d) => json!({ "function": f.to_string(), "p": p, "data": d }),
                Err(e) => json!({ "function": f.to_string(), "p": p, "error": e.to_string() }),
            })
            .collect()
    };
    Report::json(&json!({ "command": "critpoints", "passed": true, "results": rows }), true)
}

/// Completion, the `S_Q` partition, residue splitting, the `F`
/// representation, both Taylor displays and the Poisson expansions, at each
/// configured `(p, n)`.
pub fn identities(cfg: &RunConfig, samples: usize, taylor_samples: usize, expansions: usize, exec: Exec) -> Result<Report> {
    let seed = cfg.require_seed("identity sampling")?;
    let tol = cfg.tol.unwrap_or(1e-10);
    let forms = match cfg.form {
        Some(f) => vec![f],
        None => vec![QuadraticForm::new(1, 1, 3), QuadraticForm::new(2, 3, 8)],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut passed = true;
    for p in cfg.primes_or(&[5]) {
        for n in cfg.exponents_or(&[2, 3, 4, 6]) {
            let mut row = serde_json::Map::new();
            row.insert("p".into(), json!(p));
            row.insert("n".into(), json!(n));
            let result = identities_at(p, n, &forms, cfg.chi_index, samples, taylor_samples, tol, &mut rng, exec);
            match result {
                Ok(counts) => {
                    row.insert("pass".into(), json!(true));
                    row.insert("checks".into(), counts);
                }
                Err(e) => {
                    passed = false;
                    row.insert("pass".into(), json!(false));
                    row.insert("error".into(), json!(e.to_string()));
                }
            }
            out.push(Value::Object(row));
        }
    }
    let mut exp_rows = Vec::new();
    if expansions > 0 {
        for p in cfg.primes_or(&[5]) {
            let corpus = expansion_corpus(p, 4..=8, 5, expansions, seed)?;
            for inst in &corpus {
                let r = poisson_expansion(&inst.f, &SmoothWeight::bump(), &inst.spec, 2, exec);
                passed &= r.is_ok();
                exp_rows.push(match r {
                    Ok(c) => json!({ "p": p, "n": inst.n, "spec": inst.spec, "s": c.s, "abs_diff": c.check.abs_diff, "pass": true }),
                    Err(e) => json!({ "p": p, "n": inst.n, "spec": inst.spec, "pass": false, "error": e.to_string() }),
                });
            }
        }
    }
    Report::json(
        &json!({ "command": "identities", "seed": seed, "passed": passed, "moduli": out, "expansions": exp_rows }),
        passed,
    )
}

#[allow(clippy::too_many_arguments)]
fn identities_at(
    p: u64,
    n: u32,
    forms: &[QuadraticForm],
    chi_index: Option<u64>,
    samples: usize,
    taylor_samples: usize,
    tol: f64,
    rng: &mut ChaCha8Rng,
    exec: Exec,
) -> Result<Value> {
    const EXHAUSTIVE: u128 = 625;
    let modulus = pow_u64(p, n);
    let chi = DirichletCharacter::primitive(p, n, chi_index.unwrap_or_else(|| random_primitive(rng, p, n)))?;
    let mut completion = 0;
    let mut partition = 0;
    for q in forms {
        let comp = quadratic_completion(q, p, n)?;
        completion += certify_completion(q, &comp, EXHAUSTIVE, samples, rng.gen())?;
        let side = (modulus / 2).clamp(1, 60);
        let params = SumParams::new(rng.gen_range(-50..50), rng.gen_range(-50..50), side, side)?;
        let direct = sq_phase_terms(q, &params, &chi);
        if direct != split_phase_terms(q, &params, &chi)? {
            bail!("S_Q terms differ from the split terms for {q:?}");
        }
        let s = sum_sq(q, &params, &chi, exec);
        let parts = sum_sq1(q, &params, &chi, exec)? + sum_sq2(q, &params, &chi, exec)?;
        if (s - parts).norm() > tol * s.norm().max(1.0) {
            bail!("S_Q = {s} but S_Q1 + S_Q2 = {parts} for {q:?}");
        }
        partition += direct.len();
    }
    let a0 = postnikov_a0(&chi)?.a0;
    let mut split = 0;
    let mut representation = 0;
    let mut taylor = 0;
    for beta in 0..(p * p) as i128 {
        let classes = residue_split(beta, p, n)?;
        split += certify_split(beta, p, n, &classes)?;
        for class in &classes {
            let f = PhaseFunction::new(p, n, a0, beta, class)?;
            representation += certify_f_representation(&f, &chi, EXHAUSTIVE, samples.min(modulus as usize), rng.gen())?;
        }
        if let Some(class) = classes.first() {
            let f = PhaseFunction::new(p, n, a0, beta, class)?;
            let q = modulus as i128;
            for _ in 0..taylor_samples {
                let (k1, k2) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
                certify_taylor_identities(&f, k1, k2, rng.gen_range(-q..q), rng.gen_range(-q..q), rng.gen_range(0..q))?;
                taylor += 1;
            }
        }
    }
    Ok(json!({
        "completion": completion, "partition_terms": partition, "split_residues": split,
        "f_representation": representation, "taylor": taylor,
    }))
}

fn frac(x: bounds::Q64) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

pub fn exponents(cfg: &RunConfig, j1: i64, j2: i64, x: Option<f64>) -> Result<Report> {
    let e = bounds::exponents(j1, j2)?;
    let ranges = bounds::supersede_ranges(j1, j2, 3..=30)?;
    let mut body = json!({
        "command": "exponents", "j1": j1, "j2": j2,
        "rho1": frac(e.rho1), "sigma": frac(e.sigma), "rho2": frac(e.rho2),
        "two_shift_n_power": frac(e.two_shift_n_power()),
        "one_shift_window": [frac(e.one_shift_lower), frac(e.one_shift_upper)],
        "two_shift_lower": frac(e.two_shift_lower), "crossover": frac(e.crossover),
        "one_shift_wins_for_r": ranges.one_shift, "two_shift_wins_for_r": ranges.two_shift,
        "passed": true,
    });
    if let Some(x) = x {
        let p = cfg.single_p(5)?;
        let n = cfg.single_n(10)?;
        let pick = |branch: Branch, j| match bounds::choose_h(branch, p, n, x, j) {
            Ok(h) => json!(h),
            Err(err) => json!({ "infeasible": err.to_string() }),
        };
        body["h_choice"] = json!({
            "p": p, "n": n, "x": x,
            "one_shift": pick(Branch::OneShift, j1), "two_shift": pick(Branch::TwoShift, j2),
        });
    }
    Report::json(&body, true)
}
