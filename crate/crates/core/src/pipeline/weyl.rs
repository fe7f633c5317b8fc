//! One Weyl shift `H = p^κ`: the quantities on both sides of
//! `|Σ_w Φ((w-C)/X) e(F(w)/p^n)|^2 ≪ XH + H Σ_{0<|h|<2X/H} |Σ_w Φ_h e((F(w+Hh)-F(w))/p^n)|`
//! with `Φ_h(y) = Φ(y) Φ(y + Hh/X)`.

use num_complex::Complex64;
use serde::Serialize;

use super::split::PhaseFunction;
use crate::characters::phase_complex;
use crate::error::{Error, Result};
use crate::padic::{pow_u128, sub_mod};
use crate::par::Exec;
use crate::weights::SmoothWeight;

/// Ratios above this fail the regression check for the default bump.
pub const WEYL_RATIO_THRESHOLD: f64 = 100.0;

#[derive(Debug, Clone, Serialize)]
pub struct WeylReport {
    pub h: u64,
    pub x: f64,
    pub lhs_sq: f64,
    /// `Σ_{0<|h|<2X/H} |Σ_w Φ_h e(...)|`.
    pub shifted: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Weyl step for `F` itself with `H = p^kappa`.
pub fn weyl_step(
    f: &PhaseFunction,
    phi: &SmoothWeight,
    c: f64,
    x: f64,
    kappa: u32,
    exec: Exec,
) -> Result<WeylReport> {
    let h = pow_u128(f.p, kappa).filter(|&h| h < u64::MAX as u128).unwrap_or(u128::MAX);
    weyl_step_with(|w| f.eval(w), f.modulus, phi, c, x, h as u64, exec)
}

/// Weyl step for an arbitrary phase `w -> phase(w) mod modulus`.
pub fn weyl_step_with(
    phase: impl Fn(i128) -> u128 + Sync,
    modulus: u128,
    phi: &SmoothWeight,
    c: f64,
    x: f64,
    h: u64,
    exec: Exec,
) -> Result<WeylReport> {
    if h == 0 || h as f64 > x {
        return Err(Error::Domain(format!("Weyl shift H = {h} must satisfy 1 <= H <= X = {x}")));
    }
    let Some((lo, hi)) = phi.lattice_range(c, x) else {
        return Ok(WeylReport { h, x, lhs_sq: 0.0, shifted: 0.0, rhs: x * h as f64, ratio: 0.0 });
    };
    let weights: Vec<f64> = (lo..=hi).map(|w| phi.eval((w as f64 - c) / x)).collect();
    let values: Vec<u128> = (lo..=hi).map(|w| phase(w as i128)).collect();

    let direct = exec.sum_complex(weights.len(), |i| phase_complex(values[i], modulus) * weights[i]);
    let lhs_sq = direct.norm_sqr();

    // Shifts -h give the complex conjugate of shift h, so only h > 0 is summed.
    let hmax = ((2.0 * x / h as f64).ceil() as i64 - 1).max(0) as usize;
    let len = weights.len();
    let per_shift = exec.map(hmax, |j| {
        let step = (j + 1) * h as usize;
        if step >= len {
            return 0.0;
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..len - step {
            let wt = weights[i] * weights[i + step];
            if wt != 0.0 {
                acc += phase_complex(sub_mod(values[i + step], values[i], modulus), modulus) * wt;
            }
        }
        acc.norm()
    });
    let shifted = 2.0 * per_shift.iter().sum::<f64>();
    let rhs = x * h as f64 + h as f64 * shifted;
    Ok(WeylReport { h, x, lhs_sq, shifted, rhs, ratio: lhs_sq / rhs })
}
