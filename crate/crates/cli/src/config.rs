//! Run configuration: command-line flags merged over an optional TOML file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use ppcharsum::bounds::{Branch, Q64};
use ppcharsum::pipeline::QuadraticForm;

/// Flags shared by every subcommand. Each may also be given in the config
/// file under the same (kebab-case) name; flags win.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Prime, or comma-separated primes.
    #[arg(long, global = true)]
    pub p: Option<String>,
    /// Exponent, list `2,3` or range `2..5`.
    #[arg(long, global = true)]
    pub n: Option<String>,
    /// Quadratic form coefficients `a,b,c` of `a x^2 + 2 b x y + c y^2`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub form: Option<String>,
    #[arg(long, global = true)]
    pub chi_index: Option<String>,
    /// `lo:hi:points`, with `lo` and `hi` exponents of `q` (`0.3` or `19/35`).
    #[arg(long, global = true)]
    pub grid: Option<String>,
    /// `one-shift` or `two-shift`.
    #[arg(long, global = true)]
    pub branch: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<String>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<String>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    pub out: Option<String>,
    /// Relative tolerance override for floating-point identity checks.
    #[arg(long, global = true)]
    pub tol: Option<String>,
    /// TOML file with defaults for any of the flags above.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

/// Invalid invocation detected after parsing; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Grid of `points` exponents of `q` from `lo` to `hi` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Grid {
    pub fn lengths(&self, q: f64) -> Vec<u64> {
        let lq = q.ln();
        let steps = self.points.saturating_sub(1).max(1) as f64;
        (0..self.points)
            .map(|i| (lq * (self.lo + (self.hi - self.lo) * i as f64 / steps)).exp().round().max(1.0) as u64)
            .collect()
    }
}

/// Validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub p: Option<Vec<u64>>,
    pub n: Option<Vec<u32>>,
    pub form: Option<QuadraticForm>,
    pub chi_index: Option<u64>,
    pub grid: Option<Grid>,
    pub branch: Option<Branch>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs) -> Result<Self> {
        let file = match &args.config {
            Some(path) => load_file(path)?,
            None => BTreeMap::new(),
        };
        let get = |flag: &Option<String>, key: &str| flag.clone().or_else(|| file.get(key).cloned());
        let cfg = RunConfig {
            p: get(&args.p, "p").map(|s| parse_list(&s, "p")).transpose()?,
            n: get(&args.n, "n").map(|s| parse_n(&s)).transpose()?,
            form: get(&args.form, "form").map(|s| parse_form(&s)).transpose()?,
            chi_index: get(&args.chi_index, "chi-index").map(|s| parse_one(&s, "chi-index")).transpose()?,
            grid: get(&args.grid, "grid").map(|s| parse_grid(&s)).transpose()?,
            branch: get(&args.branch, "branch").map(|s| s.parse().map_err(|e| anyhow!("{e}"))).transpose()?,
            seed: get(&args.seed, "seed").map(|s| parse_one(&s, "seed")).transpose()?,
            jobs: get(&args.jobs, "jobs").map(|s| parse_one(&s, "jobs")).transpose()?,
            out: get(&args.out, "out").map(PathBuf::from),
            tol: get(&args.tol, "tol").map(|s| parse_one(&s, "tol")).transpose()?,
        };
        if let Some(ps) = &cfg.p {
            for &p in ps {
                if p < 5 || !ppcharsum::padic::is_prime(p) {
                    bail!("--p must be primes >= 5, got {p}");
                }
            }
        }
        if let Some(ns) = &cfg.n {
            if ns.iter().any(|&n| n < 2) {
                bail!("--n must be at least 2");
            }
        }
        if cfg.jobs == Some(0) {
            bail!("--jobs must be positive");
        }
        if matches!(cfg.tol, Some(t) if !(t > 0.0)) {
            bail!("--tol must be positive");
        }
        Ok(cfg)
    }

    pub fn primes_or(&self, default: &[u64]) -> Vec<u64> {
        self.p.clone().unwrap_or_else(|| default.to_vec())
    }

    pub fn exponents_or(&self, default: &[u32]) -> Vec<u32> {
        self.n.clone().unwrap_or_else(|| default.to_vec())
    }

    pub fn single_p(&self, default: u64) -> Result<u64> {
        single(self.p.as_deref(), default, "p")
    }

    pub fn single_n(&self, default: u32) -> Result<u32> {
        single(self.n.as_deref(), default, "n")
    }

    /// Seed for sampled modes, which refuse to run without one.
    pub fn require_seed(&self, what: &str) -> Result<u64> {
        self.seed.ok_or_else(|| UsageError(format!("{what} samples randomly; pass --seed")).into())
    }
}

fn single<T: Copy + std::fmt::Display>(v: Option<&[T]>, default: T, name: &str) -> Result<T> {
    match v {
        None => Ok(default),
        Some([x]) => Ok(*x),
        Some(xs) => Err(UsageError(format!("--{name} takes one value here, got {}", xs.len())).into()),
    }
}

fn load_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let table: toml::Table = text.parse().with_context(|| format!("parsing {}", path.display()))?;
    table
        .into_iter()
        .map(|(k, v)| Ok((k.replace('_', "-"), toml_to_arg(&v)?)))
        .collect()
}

/// Renders a TOML value as the equivalent flag text.
fn toml_to_arg(v: &toml::Value) -> Result<String> {
    Ok(match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => f.to_string(),
        toml::Value::Array(items) => items.iter().map(toml_to_arg).collect::<Result<Vec<_>>>()?.join(","),
        other => bail!("unsupported config value {other}"),
    })
}

fn parse_one<T: std::str::FromStr>(s: &str, name: &str) -> Result<T> {
    s.trim().parse().map_err(|_| anyhow!("invalid --{name} value {s:?}"))
}

fn parse_list<T: std::str::FromStr>(s: &str, name: &str) -> Result<Vec<T>> {
    s.split(',').map(|x| parse_one(x, name)).collect()
}

pub fn parse_n(s: &str) -> Result<Vec<u32>> {
    if let Some((a, b)) = s.split_once("..") {
        let lo: u32 = parse_one(a, "n")?;
        let hi: u32 = parse_one(b.trim_start_matches('='), "n")?;
        if lo > hi {
            bail!("empty range --n {s}");
        }
        Ok((lo..=hi).collect())
    } else {
        parse_list(s, "n")
    }
}

pub fn parse_form(s: &str) -> Result<QuadraticForm> {
    match parse_list::<i64>(s, "form")?.as_slice() {
        [a, b, c] => Ok(QuadraticForm::new(*a, *b, *c)),
        _ => bail!("--form needs three coefficients a,b,c"),
    }
}

fn parse_exponent(s: &str) -> Result<f64> {
    if let Some((a, b)) = s.split_once('/') {
        let r = Q64::new(parse_one(a, "grid")?, parse_one(b, "grid")?);
        Ok(ppcharsum::bounds::to_f64(r))
    } else {
        parse_one(s, "grid")
    }
}

pub fn parse_grid(s: &str) -> Result<Grid> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, points] = parts.as_slice() else {
        bail!("--grid must look like lo:hi:points");
    };
    let grid = Grid { lo: parse_exponent(lo)?, hi: parse_exponent(hi)?, points: parse_one(points, "grid")? };
    if !(grid.lo > 0.0 && grid.lo <= grid.hi) {
        bail!("--grid needs 0 < lo <= hi");
    }
    Ok(grid)
}

/// Comma-separated integer coefficients, ascending degree.
pub fn parse_coeffs(s: &str) -> Result<Vec<i128>> {
    parse_list(s, "coefficients")
}
