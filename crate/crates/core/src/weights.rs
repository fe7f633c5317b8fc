//! Compactly supported smooth weights, their shifted products, Fourier
//! transforms by adaptive Gauss–Kronrod quadrature, and decay certificates
//! used to truncate dual sums after Poisson summation.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// A real weight with compact support.
#[derive(Clone)]
pub enum SmoothWeight {
    /// `exp(1/(x^2 - 1))` on `(-1, 1)`.
    Bump,
    /// `bump(x / width)` with `0 < width <= 1`.
    ScaledBump { width: f64 },
    /// `base(y) * base(y + offset)`.
    Shifted { base: Arc<SmoothWeight>, offset: f64 },
    /// A user weight. Decay certificates need `derivative_l1`, a bound on
    /// `||w^(k)||_1` for the listed orders.
    Custom {
        name: String,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        support: (f64, f64),
        sup: f64,
        derivative_l1: Vec<(u32, f64)>,
    },
}

impl fmt::Debug for SmoothWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SmoothWeight::Bump => write!(f, "Bump"),
            SmoothWeight::ScaledBump { width } => write!(f, "ScaledBump({width})"),
            SmoothWeight::Shifted { base, offset } => write!(f, "Shifted({base:?}, {offset})"),
            SmoothWeight::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

/// `exp(1/(x^2 - 1))` for `|x| < 1`, zero elsewhere.
pub fn bump_eval(x: f64) -> f64 {
    if x.abs() < 1.0 {
        (1.0 / (x * x - 1.0)).exp()
    } else {
        0.0
    }
}

impl SmoothWeight {
    pub fn bump() -> Self {
        SmoothWeight::Bump
    }

    pub fn scaled_bump(width: f64) -> Result<Self> {
        if !(width > 0.0 && width <= 1.0) {
            return Err(Error::Domain(format!("bump width {width} must lie in (0, 1]")));
        }
        Ok(SmoothWeight::ScaledBump { width })
    }

    /// `y -> self(y) * self(y + offset)`.
    pub fn shifted(&self, offset: f64) -> Self {
        SmoothWeight::Shifted { base: Arc::new(self.clone()), offset }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            SmoothWeight::Bump => bump_eval(x),
            SmoothWeight::ScaledBump { width } => bump_eval(x / width),
            SmoothWeight::Shifted { base, offset } => {
                let a = base.eval(x);
                if a == 0.0 {
                    0.0
                } else {
                    a * base.eval(x + offset)
                }
            }
            SmoothWeight::Custom { f, support, .. } => {
                if x > support.0 && x < support.1 {
                    f(x)
                } else {
                    0.0
                }
            }
        }
    }

    /// Open interval outside of which the weight vanishes. May be empty
    /// (`lo >= hi`) for large shifts.
    pub fn support(&self) -> (f64, f64) {
        match self {
            SmoothWeight::Bump => (-1.0, 1.0),
            SmoothWeight::ScaledBump { width } => (-width, *width),
            SmoothWeight::Shifted { base, offset } => {
                let (lo, hi) = base.support();
                (lo.max(lo - offset), hi.min(hi - offset))
            }
            SmoothWeight::Custom { support, .. } => *support,
        }
    }

    /// An upper bound for `sup |w|`.
    pub fn sup_bound(&self) -> f64 {
        match self {
            SmoothWeight::Bump | SmoothWeight::ScaledBump { .. } => (-1.0f64).exp(),
            SmoothWeight::Shifted { base, .. } => base.sup_bound() * base.sup_bound(),
            SmoothWeight::Custom { sup, .. } => *sup,
        }
    }

    /// Integers `w` with `(w - center) / scale` inside the open support.
    pub fn lattice_range(&self, center: f64, scale: f64) -> Option<(i64, i64)> {
        let (lo, hi) = self.support();
        if lo >= hi {
            return None;
        }
        let a = (center + lo * scale).floor() as i64 + 1;
        let b = (center + hi * scale).ceil() as i64 - 1;
        (a <= b).then_some((a, b))
    }

    /// Taylor coefficients `w^(j)(x) / j!` for `j = 0..=order`, or `None`
    /// for custom weights.
    pub fn jet(&self, x: f64, order: usize) -> Option<Vec<f64>> {
        match self {
            SmoothWeight::Bump => Some(bump_jet(x, order)),
            SmoothWeight::ScaledBump { width } => {
                let mut j = bump_jet(x / width, order);
                let mut s = 1.0;
                for c in j.iter_mut() {
                    *c *= s;
                    s /= width;
                }
                Some(j)
            }
            SmoothWeight::Shifted { base, offset } => {
                let a = base.jet(x, order)?;
                let b = base.jet(x + offset, order)?;
                Some(series_mul(&a, &b))
            }
            SmoothWeight::Custom { .. } => None,
        }
    }

    /// `w^(-y) = ∫ w(x) e(-xy) dx` with absolute error at most `tol`.
    pub fn fourier_transform(&self, y: f64, tol: f64) -> Result<FourierEval> {
        if !(tol > 0.0) {
            return Err(Error::Domain("tolerance must be positive".into()));
        }
        let (lo, hi) = self.support();
        if lo >= hi {
            return Ok(FourierEval { y, value: Complex64::new(0.0, 0.0), abs_error: 0.0 });
        }
        let w = -std::f64::consts::TAU * y;
        let f = |x: f64| {
            let v = self.eval(x);
            let (s, c) = (w * x).sin_cos();
            Complex64::new(v * c, v * s)
        };
        // Enough initial panels that each sees at most about one oscillation.
        let panels = ((hi - lo) * y.abs()).ceil().clamp(1.0, 1e6) as usize;
        let (value, abs_error) = adaptive_gk(&f, lo, hi, panels, tol)?;
        Ok(FourierEval { y, value, abs_error })
    }

    /// Bound `||w^(k)||_1`, the ingredient of a decay certificate.
    pub fn derivative_l1(&self, k: u32) -> Result<f64> {
        if let SmoothWeight::Custom { derivative_l1, name, .. } = self {
            return derivative_l1
                .iter()
                .find(|(kk, _)| *kk == k)
                .map(|(_, c)| *c)
                .ok_or_else(|| {
                    Error::Domain(format!("custom weight {name} carries no bound for order {k}"))
                });
        }
        let (lo, hi) = self.support();
        if lo >= hi {
            return Ok(0.0);
        }
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        let f = |x: f64| {
            let j = self.jet(x, k as usize).expect("built-in weights have jets");
            Complex64::new((j[k as usize] * fact).abs(), 0.0)
        };
        let mass = adaptive_gk(&f, lo, hi, 256, f64::INFINITY).map(|(v, _)| v.re)?;
        let (v, e) = adaptive_gk(&f, lo, hi, 64, 1e-7 * mass.max(1e-300))?;
        Ok((v.re + e) * 1.01)
    }

    /// Certificate `|w^(y)| <= min(mass, c / |y|^k)` with
    /// `c = ||w^(k)||_1 / (2π)^k`.
    pub fn decay_certificate(&self, k: u32) -> Result<DecayCertificate> {
        let l1 = self.derivative_l1(k)?;
        let mass = self.derivative_l1(0).unwrap_or(f64::INFINITY);
        Ok(DecayCertificate { k, c: l1 / std::f64::consts::TAU.powi(k as i32), mass })
    }

    /// Smallest `T` with `Σ_{|t| > T} |w^(t * scale)| <= target`, using the
    /// best decay certificate among orders 2..=12.
    pub fn tail_cutoff(&self, scale: f64, target: f64) -> Result<u64> {
        if !(scale > 0.0 && target > 0.0) {
            return Err(Error::Domain("scale and target must be positive".into()));
        }
        let mut best: Option<u64> = None;
        for k in (2..=12).step_by(2) {
            let Ok(cert) = self.decay_certificate(k) else { continue };
            if let Some(t) = cert.cutoff(scale, target) {
                best = Some(best.map_or(t, |b| b.min(t)));
            }
        }
        best.ok_or_else(|| Error::ToleranceNotMet("no usable decay certificate".into()))
    }
}

/// Fourier transform value with its quadrature error bound.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FourierEval {
    pub y: f64,
    pub value: Complex64,
    pub abs_error: f64,
}

/// `|w^(y)| <= min(mass, c |y|^-k)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecayCertificate {
    pub k: u32,
    pub c: f64,
    pub mass: f64,
}

impl DecayCertificate {
    pub fn bound(&self, y: f64) -> f64 {
        let y = y.abs();
        if y == 0.0 {
            self.mass
        } else {
            self.mass.min(self.c / y.powi(self.k as i32))
        }
    }

    /// Tail `Σ_{|t| > T}` bounded by `2 c scale^-k T^(1-k) / (k-1)`.
    pub fn tail(&self, scale: f64, cutoff: u64) -> f64 {
        let k = self.k as f64;
        2.0 * self.c * scale.powf(-k) * (cutoff as f64).max(1.0).powf(1.0 - k) / (k - 1.0)
    }

    pub fn cutoff(&self, scale: f64, target: f64) -> Option<u64> {
        if self.k < 2 {
            return None;
        }
        let k = self.k as f64;
        let t = (2.0 * self.c * scale.powf(-k) / ((k - 1.0) * target)).powf(1.0 / (k - 1.0));
        if !t.is_finite() || t > 1e9 {
            return None;
        }
        let mut cut = t.ceil().max(1.0) as u64;
        while self.tail(scale, cut) > target {
            cut += 1;
        }
        Some(cut)
    }
}

fn series_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().min(b.len());
    (0..n).map(|i| (0..=i).map(|j| a[j] * b[i - j]).sum()).collect()
}

/// Taylor coefficients of the bump at `x`, by power-series composition.
fn bump_jet(x: f64, order: usize) -> Vec<f64> {
    let n = order + 1;
    let mut out = vec![0.0; n];
    if x.abs() >= 1.0 {
        return out;
    }
    let s0 = x * x - 1.0;
    let a0 = 1.0 / s0;
    if a0 < -700.0 {
        return out;
    }
    // s(ε) = s0 + 2xε + ε²; a = 1/s.
    let s = [s0, 2.0 * x, 1.0];
    let mut a = vec![0.0; n];
    a[0] = a0;
    for i in 1..n {
        let mut acc = 0.0;
        for j in 1..=i.min(2) {
            acc += s[j] * a[i - j];
        }
        a[i] = -acc / s0;
    }
    // e = exp(a): e' = a' e gives i e_i = Σ_j j a_j e_{i-j}.
    out[0] = a0.exp();
    for i in 1..n {
        let mut acc = 0.0;
        for j in 1..=i {
            acc += j as f64 * a[j] * out[i - j];
        }
        out[i] = acc / i as f64;
    }
    out
}

// Gauss–Kronrod 7/15 nodes on [-1, 1].
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Kronrod estimate, |Kronrod - Gauss|, and a roundoff floor.
fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    let mut abs = fc.norm() * WGK[7];
    for i in 0..7 {
        let x = h * XGK[i];
        let (l, r) = (f(c - x), f(c + x));
        k += (l + r) * WGK[i];
        abs += (l.norm() + r.norm()) * WGK[i];
        if i % 2 == 1 {
            g += (l + r) * WG[i / 2];
        }
    }
    (k * h, ((k - g) * h).norm(), 50.0 * f64::EPSILON * abs * h.abs())
}

const MAX_PANELS: usize = 2_000_000;

/// Adaptive bisection until the summed Kronrod–Gauss differences fall below
/// `tol`. Panels whose difference is at roundoff level are accepted and
/// charged that level. Returns the Kronrod estimate and the error bound.
pub fn adaptive_gk<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    initial_panels: usize,
    tol: f64,
) -> Result<(Complex64, f64)> {
    let n = initial_panels.max(1);
    let width = (b - a) / n as f64;
    let mut stack: Vec<(f64, f64, f64)> = (0..n)
        .rev()
        .map(|i| (a + width * i as f64, if i + 1 == n { b } else { a + width * (i + 1) as f64 }, 0.0))
        .collect();
    let mut total = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    let mut evaluated = 0usize;
    let span = b - a;
    while let Some((lo, hi, _)) = stack.pop() {
        evaluated += 1;
        if evaluated > MAX_PANELS {
            return Err(Error::ToleranceNotMet(format!(
                "quadrature on [{a}, {b}] exceeded {MAX_PANELS} panels"
            )));
        }
        let (v, e, floor) = gk15(f, lo, hi);
        let local = tol * (hi - lo) / span;
        if e <= local.max(floor) || hi - lo < span * 1e-12 {
            total += v;
            err += e.max(floor);
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, 0.0));
            stack.push((lo, mid, 0.0));
        }
    }
    if err > tol {
        return Err(Error::ToleranceNotMet(format!(
            "quadrature error {err:e} exceeds tolerance {tol:e}"
        )));
    }
    Ok((total, err))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bump_values() {
        assert!((bump_eval(0.0) - 0.367879441171442).abs() < 1e-15);
        assert_eq!(bump_eval(1.0), 0.0);
        assert_eq!(bump_eval(2.0), 0.0);
        assert_eq!(bump_eval(-1.0), 0.0);
    }

    #[test]
    fn jet_matches_finite_differences() {
        for &x in &[-0.7, -0.2, 0.0, 0.31, 0.8] {
            let j = bump_jet(x, 3);
            let h = 1e-4;
            let d1 = (bump_eval(x + h) - bump_eval(x - h)) / (2.0 * h);
            let d2 = (bump_eval(x + h) - 2.0 * bump_eval(x) + bump_eval(x - h)) / (h * h);
            assert!((j[0] - bump_eval(x)).abs() < 1e-15);
            assert!((j[1] - d1).abs() < 1e-6, "x={x}");
            assert!((2.0 * j[2] - d2).abs() < 1e-4, "x={x}");
        }
    }

    #[test]
    fn mass_and_symmetry() {
        let w = SmoothWeight::bump();
        let m = w.fourier_transform(0.0, 1e-13).unwrap();
        assert!(m.value.re > 0.0);
        assert!((m.value.re - 0.443993816168079).abs() < 1e-12);
        assert!(m.value.im.abs() < 1e-14);
        for &y in &[0.3, 1.7, 12.5, 80.0] {
            let a = w.fourier_transform(y, 1e-13).unwrap().value;
            let b = w.fourier_transform(-y, 1e-13).unwrap().value;
            assert!((a - b.conj()).norm() < 1e-12);
            assert!(a.norm() <= m.value.re + 1e-12);
        }
    }

    #[test]
    fn shifted_transform_matches_riemann_sum() {
        let w = SmoothWeight::bump().shifted(0.4);
        let y = 3.3;
        let q = w.fourier_transform(y, 1e-12).unwrap().value;
        // midpoint rule on the smooth compactly supported integrand is spectrally accurate
        let n = 20000;
        let (lo, hi) = w.support();
        let h = (hi - lo) / n as f64;
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let x = lo + (i as f64 + 0.5) * h;
            s += Complex64::from_polar(w.eval(x), -std::f64::consts::TAU * x * y);
        }
        assert!((s * h - q).norm() < 1e-11);
    }

    #[test]
    fn decay_certificate_dominates_samples() {
        let w = SmoothWeight::bump();
        for k in [2u32, 4, 8] {
            let cert = w.decay_certificate(k).unwrap();
            for i in 0..60 {
                let y = 10f64.powf(i as f64 / 15.0);
                let v = w.fourier_transform(y, 1e-12).unwrap();
                assert!(v.value.norm() <= cert.bound(y) + v.abs_error, "k={k} y={y}");
            }
        }
    }

    #[test]
    fn cubic_decay_bounded_on_log_grid() {
        let w = SmoothWeight::bump();
        let mut worst: f64 = 0.0;
        for i in 0..=80 {
            let y = 10f64.powf(4.0 * i as f64 / 80.0);
            let v = w.fourier_transform(y, 1e-12).unwrap();
            worst = worst.max((v.value.norm() + v.abs_error) * (1.0 + y).powi(3));
        }
        assert!(worst < 1.0, "{worst}");
    }

    #[test]
    fn tail_cutoff_is_honored() {
        let w = SmoothWeight::bump();
        let scale = 0.32;
        let t = w.tail_cutoff(scale, 1e-10).unwrap();
        let (mut tail, mut err) = (0.0, 0.0);
        for s in (t + 1)..(t + 200) {
            let v = w.fourier_transform(s as f64 * scale, 1e-13).unwrap();
            tail += 2.0 * v.value.norm();
            err += 2.0 * v.abs_error;
        }
        assert!(tail < 1e-10 + err, "{tail} {err}");
    }

    #[test]
    fn lattice_range_is_open() {
        let w = SmoothWeight::bump();
        assert_eq!(w.lattice_range(0.0, 1.0), Some((0, 0)));
        assert_eq!(w.lattice_range(0.0, 2.5), Some((-2, 2)));
        assert_eq!(w.lattice_range(0.5, 0.5), None);
        assert_eq!(w.shifted(2.0).lattice_range(0.0, 1.0), None);
    }

    proptest! {
        #[test]
        fn shifted_support_contained(offset in -2.5f64..2.5, y in -1.5f64..1.5) {
            let w = SmoothWeight::bump();
            let s = w.shifted(offset);
            if w.eval(y) == 0.0 {
                prop_assert_eq!(s.eval(y), 0.0);
            }
            let (lo, hi) = s.support();
            if y <= lo || y >= hi {
                prop_assert_eq!(s.eval(y), 0.0);
            }
            prop_assert!(s.eval(y) >= 0.0);
        }
    }
}
