//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//!     cargo test --release -p ppcharsum-core --test acceptance

use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ppcharsum::bounds::{self, Branch, SweepConfig};
use ppcharsum::characters::{postnikov_a0, postnikov_a0_with_logs, principal_unit_logs, DirichletCharacter};
use ppcharsum::expsums::{complete_sum, run_corpus, seeded_corpus};
use ppcharsum::multiplicity::{audit_sweep, SweepScope};
use ppcharsum::padic::pow_u64;
use ppcharsum::pipeline::form::{certify_completion, split_phase_terms, sq_phase_terms};
use ppcharsum::pipeline::poisson::expansion_corpus;
use ppcharsum::pipeline::split::{certify_f_representation, certify_split};
use ppcharsum::pipeline::{
    certify_taylor_identities, poisson_expansion, poisson_identity, quadratic_completion, residue_split, sum_sq,
    sum_sq1, sum_sq2, PhaseFunction, QuadraticForm, SumParams,
};
use ppcharsum::weights::SmoothWeight;
use ppcharsum::Exec;

const SEED: u64 = 20240611;
const EXHAUSTIVE_LIMIT: u128 = 625;
const PIPELINE_SAMPLES: usize = 10_000;
const SPLIT_REL_TOL: f64 = 1e-10;
const TAYLOR_SAMPLES: usize = 100;
const POISSON_INSTANCES: usize = 50;
const CLZ_CORPUS: usize = 1000;
const CLZ_MAX_M: u32 = 6;
const SLOPE_MAX: f64 = 1.6;
const RATIO_MAX: f64 = 1e3;
const BASELINE_FACTOR: f64 = 10.0;
const BASELINE: &str = include_str!("data/sweep_baseline.json");

type Outcome = Result<String, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
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

fn primitive_index(rng: &mut ChaCha8Rng, p: u64, n: u32) -> u64 {
    let phi = pow_u64(p, n - 1) * (p - 1);
    loop {
        let i = rng.gen_range(1..phi);
        if i % p != 0 {
            return i;
        }
    }
}

fn postnikov() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut chars = 0;
    for p in [5u64, 7] {
        for n in 2..=5 {
            let phi = pow_u64(p, n - 1) * (p - 1);
            let logs = principal_unit_logs(p, n).map_err(err)?;
            let indices: Vec<u64> = if totient(phi) <= 200 {
                (1..phi).filter(|i| i % p != 0).collect()
            } else {
                (0..24).map(|_| primitive_index(&mut rng, p, n)).collect()
            };
            for idx in indices {
                let chi = DirichletCharacter::primitive(p, n, idx).map_err(err)?;
                postnikov_a0_with_logs(&chi, &logs).map_err(|e| format!("p={p} n={n} index={idx}: {e}"))?;
                chars += 1;
            }
        }
    }
    Ok(format!("{chars} characters, exact phase equality at every t"))
}

fn pipeline_identities() -> Outcome {
    let forms = [QuadraticForm::new(1, 1, 3), QuadraticForm::new(2, 3, 8), QuadraticForm::new(3, -1, 4)];
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 2);
    let mut checks = 0usize;
    for n in [2u32, 3, 4, 6] {
        let p = 5;
        for q in &forms {
            let comp = quadratic_completion(q, p, n).map_err(err)?;
            checks += certify_completion(q, &comp, EXHAUSTIVE_LIMIT, PIPELINE_SAMPLES, SEED + n as u64).map_err(err)?;
        }
        let chi = DirichletCharacter::primitive(p, n, primitive_index(&mut rng, p, n)).map_err(err)?;
        let side = if n <= 4 { pow_u64(p, n) / 2 } else { 60 };
        for q in &forms {
            let params = SumParams::new(rng.gen_range(-50..50), rng.gen_range(-50..50), side, side).map_err(err)?;
            let direct = sq_phase_terms(q, &params, &chi);
            if direct != split_phase_terms(q, &params, &chi).map_err(err)? {
                return Err(format!("S_Q partition terms differ for {q:?} mod 5^{n}"));
            }
            let s = sum_sq(q, &params, &chi, Exec::default());
            let parts = sum_sq1(q, &params, &chi, Exec::default()).map_err(err)?
                + sum_sq2(q, &params, &chi, Exec::default()).map_err(err)?;
            if (s - parts).norm() > SPLIT_REL_TOL * s.norm().max(1.0) {
                return Err(format!("S_Q != S_Q1 + S_Q2 for {q:?} mod 5^{n}: {s} vs {parts}"));
            }
            checks += direct.len();
        }
        let a0 = postnikov_a0(&chi).map_err(err)?.a0;
        for beta in 0..25i128 {
            let classes = residue_split(beta, p, n).map_err(err)?;
            checks += certify_split(beta, p, n, &classes).map_err(err)? as usize;
            for class in &classes {
                let f = PhaseFunction::new(p, n, a0, beta, class).map_err(err)?;
                checks += certify_f_representation(&f, &chi, EXHAUSTIVE_LIMIT, PIPELINE_SAMPLES, SEED + beta as u64)
                    .map_err(err)?;
            }
        }
    }
    Ok(format!("{checks} exact residue/phase checks (exhaustive to 5^4, {PIPELINE_SAMPLES} samples at 5^6)"))
}

fn taylor() -> Outcome {
    let p = 5u64;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 3);
    let mut checks = 0;
    for n in [6u32, 10] {
        // a0 of an actual character at n = 6; at n = 10 any unit a0 gives the same algebra
        let a0 = if n == 6 {
            postnikov_a0(&DirichletCharacter::primitive(p, n, primitive_index(&mut rng, p, n)).map_err(err)?)
                .map_err(err)?
                .a0
        } else {
            loop {
                let a = rng.gen_range(1..pow_u64(p, n - 1));
                if a % p != 0 {
                    break a;
                }
            }
        };
        let beta = loop {
            let b = rng.gen_range(0..25i128);
            let classes = residue_split(b, p, n).map_err(err)?;
            if !classes.is_empty() {
                break b;
            }
        };
        let classes = residue_split(beta, p, n).map_err(err)?;
        let f = PhaseFunction::new(p, n, a0, beta, &classes[0]).map_err(err)?;
        let q = pow_u64(p, n) as i128;
        for k1 in 1..=3 {
            for k2 in 1..=3 {
                for _ in 0..TAYLOR_SAMPLES {
                    let (w, h1, h2) = (rng.gen_range(0..q), rng.gen_range(-q..q), rng.gen_range(-q..q));
                    certify_taylor_identities(&f, k1, k2, h1, h2, w)
                        .map_err(|e| format!("n={n} k=({k1},{k2}) w={w} h=({h1},{h2}): {e}"))?;
                    checks += 1;
                }
            }
        }
    }
    Ok(format!("{checks} (w, h1, h2) samples, both displays exact mod p^n"))
}

fn poisson() -> Outcome {
    let phi = SmoothWeight::bump();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 4);
    let mut worst: f64 = 0.0;
    for _ in 0..POISSON_INSTANCES {
        let q = pow_u64(5, rng.gen_range(1..=4));
        let x = q as f64 * rng.gen_range(0.2..3.0);
        let c = rng.gen_range(-(q as f64)..q as f64);
        let r = rng.gen_range(0..q as i64);
        let chk = poisson_identity(&phi, c, x, q, r, Exec::default()).map_err(err)?;
        worst = worst.max(chk.abs_diff / chk.lhs.norm().max(1.0));
    }
    let corpus = expansion_corpus(5, 3..=8, 5, POISSON_INSTANCES, SEED).map_err(err)?;
    let mut worst_exp: f64 = 0.0;
    let mut two = 0;
    for inst in &corpus {
        let chk = poisson_expansion(&inst.f, &phi, &inst.spec, 2, Exec::default())
            .map_err(|e| format!("n={} beta={} spec={:?}: {e}", inst.n, inst.beta, inst.spec))?;
        worst_exp = worst_exp.max(chk.check.abs_diff / chk.check.lhs.norm().max(1.0));
        two += usize::from(inst.spec.second.is_some());
    }
    Ok(format!(
        "{POISSON_INSTANCES} identity instances (worst rel {worst:.1e} <= 1e-8), {} expansions ({two} two-shift, worst rel {worst_exp:.1e} <= 1e-6)",
        corpus.len()
    ))
}

fn clz() -> Outcome {
    let corpus = seeded_corpus(SEED, CLZ_CORPUS, &[5, 7, 11]);
    let summary = run_corpus(&corpus, CLZ_MAX_M, Exec::default()).map_err(err)?;
    if let Some(f) = summary.failures.first() {
        return Err(format!("{} failures, first: {f}", summary.failures.len()));
    }
    let x2 = ppcharsum::poly::RationalFunc::polynomial(ppcharsum::poly::IntPolynomial::monomial(1, 2));
    let s0 = complete_sum(&x2, 5, 2, 0).map_err(err)?;
    if (s0 - Complex64::new(5.0, 0.0)).norm() > 1e-9 {
        return Err(format!("S_0(x^2, 25) = {s0}, expected 5"));
    }
    Ok(format!(
        "{} functions, {} class checks ({} critical, max |S|/bound {:.3}), {} skipped by m < t+2; S_0(x^2,25) = 5",
        summary.functions, summary.checks, summary.critical_checks, summary.max_ratio, summary.skipped_hypothesis
    ))
}

fn audit() -> Outcome {
    let mut lines = Vec::new();
    for scope in [SweepScope::exhaustive(5), SweepScope::exhaustive(7), SweepScope::spot(13)] {
        let r = audit_sweep(&scope, Exec::default()).map_err(err)?;
        if !r.passed() {
            return Err(format!("p={}: {} violations, first: {}", r.p, r.violations.len(), r.violations[0]));
        }
        let full = scope.full_claims;
        if r.max_m2 > if full { 2 } else { 3 } || (full && (r.max_m1 > 2 || r.max_omega1 > 5 || r.max_omega2 > 8)) {
            return Err(format!("p={}: maxima m1={} w1={} m2={} w2={}", r.p, r.max_m1, r.max_omega1, r.max_m2, r.max_omega2));
        }
        lines.push(format!(
            "p={} ({}) m1<={} w1<={} m2<={} w2<={}",
            r.p,
            if full { "exhaustive" } else { "spot" },
            r.max_m1,
            r.max_omega1,
            r.max_m2,
            r.max_omega2
        ));
    }
    Ok(lines.join("; "))
}

fn exponents() -> Outcome {
    let q = Ratio::new;
    let e = bounds::exponents(3, 4).map_err(err)?;
    let f = bounds::exponents(3, 3).map_err(err)?;
    let got = [
        e.rho1,
        e.sigma,
        e.rho2,
        e.one_shift_lower,
        e.one_shift_upper,
        e.two_shift_lower,
        e.crossover,
        f.sigma,
        f.rho2,
        f.two_shift_lower,
        f.crossover,
        bounds::hb_exponents(3).map_err(err)?.optimal_lower,
        bounds::hb_exponents(17).map_err(err)?.optimal_lower,
        bounds::hb_exponents(25).map_err(err)?.optimal_lower,
    ];
    let want = [
        q(1, 5),
        q(12, 17),
        q(3, 34),
        q(2, 5),
        q(7, 10),
        q(3, 10),
        q(19, 35),
        q(17, 24),
        q(1, 12),
        q(2, 7),
        q(14, 25),
        q(13, 24),
        q(47, 153),
        q(94, 325),
    ];
    if got != want {
        return Err(format!("exponents {got:?} != {want:?}"));
    }
    let a = bounds::supersede_ranges(3, 4, 3..=30).map_err(err)?;
    let b = bounds::supersede_ranges(3, 3, 3..=30).map_err(err)?;
    let ranges = (a.one_shift.clone(), a.two_shift.clone(), b.two_shift.clone());
    if ranges != (vec![3, 4, 5], (4..=17).collect(), (4..=25).collect()) {
        return Err(format!("winning ranges {ranges:?}"));
    }
    Ok("14 fractions and r-ranges {3..5}, {4..17}, {4..25} exact".into())
}

fn field(json: &serde_json::Value, key: &str) -> Result<f64, String> {
    json[key].as_f64().ok_or_else(|| format!("baseline lacks {key}"))
}

fn sweep(records: &[bounds::SweepRecord]) -> Outcome {
    let baseline: serde_json::Value = serde_json::from_str(BASELINE).map_err(err)?;
    let base_ratio = field(&baseline, "max_ratio")?;
    let upper: Vec<_> = records.iter().filter(|r| r.branch == Branch::OneShift).cloned().collect();
    let slope = bounds::fit_slope(&upper).ok_or("upper window too small for a fit")?;
    let max_ratio = records.iter().map(|r| r.ratio).fold(0.0, f64::max);
    // the upper-branch normalization applied to every grid point
    let q = SweepConfig::default().modulus();
    let max_upper_norm = records
        .iter()
        .map(|r| r.abs_sum / ((r.n_len as f64).powf(1.5) * q.powf(0.2)))
        .fold(0.0, f64::max);
    let mut problems = Vec::new();
    if records.len() != 24 {
        problems.push(format!("{} rows, expected 24", records.len()));
    }
    if slope > SLOPE_MAX {
        problems.push(format!("(a) slope {slope:.3} > {SLOPE_MAX}"));
    }
    let worst = max_ratio.max(max_upper_norm);
    if worst >= RATIO_MAX || worst > BASELINE_FACTOR * base_ratio || worst < base_ratio / BASELINE_FACTOR {
        problems.push(format!("(b) max ratio {worst:.3e} vs baseline {base_ratio:.3e}"));
    }
    for r in records {
        if r.abs_sum > bounds::trivial_bound(r.m, r.n_len) {
            problems.push(format!("(c) N={} |S|={} above the trivial bound", r.n_len, r.abs_sum));
        }
    }
    if problems.is_empty() {
        Ok(format!(
            "(a) slope {slope:.3} <= {SLOPE_MAX}; (b) max ratio {worst:.3e} < 1e3, baseline {base_ratio:.3e}; (c) trivial bound holds on {} rows",
            records.len()
        ))
    } else {
        Err(problems.join("; "))
    }
}

fn artifacts() -> Result<(Vec<bounds::SweepRecord>, Vec<u8>), String> {
    let records = bounds::corollary_sweep(&SweepConfig::default(), Exec::default()).map_err(err)?;
    let mut bytes = bounds::to_csv(&records).into_bytes();
    bytes.extend(bounds::to_json(&records).map_err(err)?.into_bytes());
    let audit = audit_sweep(&SweepScope::exhaustive(5), Exec::default()).map_err(err)?;
    bytes.extend(serde_json::to_vec(&audit).map_err(err)?);
    let clz = run_corpus(&seeded_corpus(SEED, 200, &[5, 7, 11]), CLZ_MAX_M, Exec::default()).map_err(err)?;
    bytes.extend(serde_json::to_vec(&clz).map_err(err)?);
    Ok((records, bytes))
}

fn report(id: u32, name: &str, start: Instant, outcome: &Outcome) -> bool {
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(msg) => println!("criterion {id} [{name}]: PASS ({secs:.1}s) {msg}"),
        Err(msg) => println!("criterion {id} [{name}]: FAIL ({secs:.1}s) {msg}"),
    }
    outcome.is_ok()
}

fn main() -> ExitCode {
    let checks: [(u32, &str, fn() -> Outcome); 7] = [
        (1, "postnikov", postnikov),
        (2, "pipeline identities", pipeline_identities),
        (3, "taylor differences", taylor),
        (4, "poisson", poisson),
        (5, "clz bound", clz),
        (6, "multiplicity audit", audit),
        (7, "exponents", exponents),
    ];
    let mut ok = true;
    for (id, name, f) in checks {
        let t = Instant::now();
        ok &= report(id, name, t, &f());
    }

    let t = Instant::now();
    let first = artifacts();
    let (records, bytes_a) = match first {
        Ok(v) => v,
        Err(e) => {
            report(8, "main-bound sweep", t, &Err(e.clone()));
            report(9, "determinism", t, &Err(e));
            return ExitCode::FAILURE;
        }
    };
    ok &= report(8, "main-bound sweep", t, &sweep(&records));

    let t = Instant::now();
    let outcome = artifacts().and_then(|(_, bytes_b)| {
        if bytes_a == bytes_b {
            Ok(format!("{} artifact bytes identical across two runs", bytes_a.len()))
        } else {
            Err("artifacts differ between runs".into())
        }
    });
    ok &= report(9, "determinism", t, &outcome);

    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
