//! Data-parallel execution with a sequential fallback.
//!
//! Every parallel loop in the crate goes through [`Exec`]. Work is split by an
//! outer index that does not depend on the thread count, results come back in
//! index order, and floating-point reductions are always performed
//! sequentially over that ordered vector. Parallel and sequential runs are
//! therefore bit-identical.
//!
//! Without the `parallel` feature, [`Exec::Parallel`] silently runs the
//! sequential path.

use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// True when this build can actually run work on a thread pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// Maps `f` over `0..len`, returning results in index order.
    pub fn map<T, F>(self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            use rayon::prelude::*;
            return (0..len).into_par_iter().map(f).collect();
        }
        (0..len).map(f).collect()
    }

    /// Maps `f` over a slice, returning results in slice order.
    pub fn map_slice<S, T, F>(self, items: &[S], f: F) -> Vec<T>
    where
        S: Sync,
        T: Send,
        F: Fn(&S) -> T + Sync + Send,
    {
        self.map(items.len(), |i| f(&items[i]))
    }

    /// Ordered complex sum of `f(i)` for `i` in `0..len`.
    pub fn sum_complex<F>(self, len: usize, f: F) -> Complex64
    where
        F: Fn(usize) -> Complex64 + Sync + Send,
    {
        ordered_sum(&self.map(len, f))
    }

    /// Runs `f` over `0..len` and returns the first error by index, if any.
    pub fn try_for_each<E, F>(self, len: usize, f: F) -> Result<(), E>
    where
        E: Send,
        F: Fn(usize) -> Result<(), E> + Sync + Send,
    {
        self.map(len, f).into_iter().collect()
    }
}

/// Left-to-right sum; the fixed order is what makes results reproducible.
pub fn ordered_sum(parts: &[Complex64]) -> Complex64 {
    parts.iter().fold(Complex64::new(0.0, 0.0), |acc, z| acc + z)
}

/// Neumaier-compensated sum, in iteration order. Used where many unit
/// phases cancel and the result is compared against a sharp bound.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    re: (f64, f64),
    im: (f64, f64),
}

fn neumaier(acc: &mut (f64, f64), x: f64) {
    let t = acc.0 + x;
    if acc.0.abs() >= x.abs() {
        acc.1 += (acc.0 - t) + x;
    } else {
        acc.1 += (x - t) + acc.0;
    }
    acc.0 = t;
}

impl CompensatedSum {
    pub fn add(&mut self, z: Complex64) {
        neumaier(&mut self.re, z.re);
        neumaier(&mut self.im, z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.0 + self.re.1, self.im.0 + self.im.1)
    }
}

impl std::iter::FromIterator<Complex64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = Complex64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for z in iter {
            s.add(z);
        }
        s
    }
}
