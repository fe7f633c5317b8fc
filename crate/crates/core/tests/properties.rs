//! Invariants checked against independent oracles.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::{BigRational, Ratio};
use proptest::prelude::*;

use ppcharsum::bounds::{self, Branch, SweepConfig};
use ppcharsum::characters::DirichletCharacter;
use ppcharsum::expsums::{class_values, complete_sum, critical_points};
use ppcharsum::padic::{hensel_sqrt, inv_mod, padic_log, PAdicInt};
use ppcharsum::pipeline::form::certify_completion;
use ppcharsum::pipeline::split::certify_split;
use ppcharsum::pipeline::{
    certify_taylor_identities, quadratic_completion, residue_split, sum_sq, PhaseFunction, QuadraticForm, SumParams,
};
use ppcharsum::poly::{IntPolynomial, RationalFunc};
use ppcharsum::Exec;

/// `log(1 + p t) mod p^n` from the exact rational partial sum
/// `Σ_{k<=K} (-1)^(k+1) (p t)^k / k`, with `K` far past the point where
/// terms vanish mod `p^n`.
fn log_oracle(p: u64, n: u32, t: u64) -> u128 {
    let pb = BigInt::from(p);
    let y = BigInt::from(p * t);
    let mut sum = BigRational::from_integer(BigInt::from(0));
    for k in 1..=(4 * n + 16) {
        let term = BigRational::new(y.pow(k), BigInt::from(k));
        if k % 2 == 1 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    let modulus = pb.pow(n);
    let (num, mut den) = (sum.numer().clone(), sum.denom().clone());
    let mut num = num;
    let zero = BigInt::from(0);
    while &den % &pb == zero {
        assert_eq!(&num % &pb, zero, "partial sum is p-integral");
        num /= &pb;
        den /= &pb;
    }
    // den is now a unit; invert it with Euler's theorem
    let phi = pb.pow(n - 1) * (p - 1);
    let inv = den.modpow(&(phi - 1u32), &modulus);
    let r = ((num % &modulus) * inv % &modulus + &modulus) % &modulus;
    r.to_string().parse().unwrap()
}

fn prime() -> impl Strategy<Value = u64> {
    prop::sample::select(vec![5u64, 7, 11, 13])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn padic_log_matches_rational_series(p in prime(), n in 2u32..9, t in 0u64..1_000_000) {
        let x = PAdicInt::new(1 + (p * t) as i128, p, n).unwrap();
        prop_assert_eq!(padic_log(&x).unwrap().value(), log_oracle(p, n, t));
    }

    #[test]
    fn padic_log_is_additive(p in prime(), n in 2u32..10, s in 0u64..10_000, t in 0u64..10_000) {
        let a = PAdicInt::new(1 + (p * s) as i128, p, n).unwrap();
        let b = PAdicInt::new(1 + (p * t) as i128, p, n).unwrap();
        let lhs = padic_log(&a.try_mul(&b).unwrap()).unwrap();
        let rhs = padic_log(&a).unwrap().try_add(&padic_log(&b).unwrap()).unwrap();
        prop_assert_eq!(lhs.value(), rhs.value());
    }

    #[test]
    fn inverse_and_square_root(p in prime(), n in 1u32..12, x in 1i128..1_000_000_000) {
        let m = (p as u128).pow(n);
        prop_assume!(x % p as i128 != 0);
        let inv = inv_mod(x, m).unwrap();
        prop_assert_eq!((x as u128 % m) * inv % m, 1);
        let sq = x * x;
        let r = hensel_sqrt(sq, p, n).unwrap();
        prop_assert_eq!(r * r % m, sq as u128 % m);
    }

    #[test]
    fn characters_are_multiplicative(p in prime(), n in 2u32..5, idx in 1u64..10_000, x in 1i128..100_000, y in 1i128..100_000) {
        let phi = (p - 1) * p.pow(n - 1);
        let idx = idx % phi;
        prop_assume!(idx % p != 0);
        let chi = DirichletCharacter::primitive(p, n, idx).unwrap();
        match (chi.eval(x), chi.eval(y)) {
            (Some(a), Some(b)) => prop_assert_eq!(chi.eval(x * y), Some(a * b)),
            _ => prop_assert_eq!(chi.eval(x * y), None),
        }
    }

    #[test]
    fn completion_holds_pointwise(a in -40i64..40, b in -40i64..40, c in -40i64..40, n in 1u32..8, seed in any::<u64>()) {
        let q = QuadraticForm::new(a, b, c);
        prop_assume!(q.check(5).is_ok());
        let comp = quadratic_completion(&q, 5, n).unwrap();
        prop_assert!(certify_completion(&q, &comp, 0, 200, seed).is_ok());
    }

    #[test]
    fn residue_classes_partition(beta in 0i128..121, n in 1u32..4) {
        let classes = residue_split(beta, 11, n).unwrap();
        prop_assert!(certify_split(beta, 11, n, &classes).is_ok());
    }

    #[test]
    fn taylor_identities_hold(beta in 0i128..25, a0 in 1u64..625, n in 4u32..9, k1 in 1u32..4, k2 in 1u32..4,
                              w in 0i128..390_625, h1 in -5000i128..5000, h2 in -5000i128..5000) {
        prop_assume!(a0 % 5 != 0);
        let classes = residue_split(beta, 5, n).unwrap();
        prop_assume!(!classes.is_empty());
        let f = PhaseFunction::new(5, n, a0, beta, &classes[0]).unwrap();
        prop_assert!(certify_taylor_identities(&f, k1, k2, h1, h2, w).is_ok());
    }

    #[test]
    fn class_sums_add_to_full_sum(p in prime(), m in 1u32..4, coeffs in prop::collection::vec(-50i128..50, 1..5)) {
        let f = RationalFunc::polynomial(IntPolynomial::new(coeffs));
        let q = p.pow(m);
        let by_class: Complex64 = (0..p).map(|a| complete_sum(&f, p, m, a).unwrap()).sum();
        let direct: Complex64 = (0..q)
            .map(|x| {
                let v = f.num.eval(x as i128).rem_euclid(q as i128) as f64;
                Complex64::from_polar(1.0, std::f64::consts::TAU * v / q as f64)
            })
            .sum();
        prop_assert!((by_class - direct).norm() < 1e-8);
        for a in 0..p {
            prop_assert_eq!(class_values(&f, p, m, a).unwrap().len() as u64, q / p);
        }
    }

    #[test]
    fn multiplicities_bounded_by_degree(p in prime(), coeffs in prop::collection::vec(-30i128..30, 2..6)) {
        let f = RationalFunc::polynomial(IntPolynomial::new(coeffs));
        prop_assume!(f.num.degree().unwrap_or(0) >= 1);
        if let Ok(c) = critical_points(&f, p) {
            let total: u32 = c.points.iter().map(|x| x.nu).sum();
            prop_assert!(total as usize <= c.reduced_degree);
        }
    }

    #[test]
    fn bounds_meet_at_crossover(j1 in 2i64..40, j2 in 2i64..40) {
        let e = bounds::exponents(j1, j2).unwrap();
        let one = Ratio::new(3, 2) * e.crossover + e.rho1;
        let two = e.two_shift_n_power() * e.crossover + e.rho2;
        prop_assert_eq!(one, two);
    }

    #[test]
    fn chosen_shift_is_in_window(n in 4u32..20, xe in 0.0f64..1.0, j in 2i64..6) {
        let p = 5u64;
        let x = 5f64.powf(n as f64 * xe).max(1.0);
        if let Ok(h) = bounds::choose_h(Branch::OneShift, p, n, x, j) {
            let lower = 5f64.powf(n as f64 * (j - 1) as f64 / (2 * j - 1) as f64);
            prop_assert!(h.h1 as f64 <= x);
            prop_assert!(h.h1 as f64 >= lower * (1.0 - 1e-9) && (h.h1 as f64) < 5.0 * lower * (1.0 + 1e-9));
        }
    }
}

#[test]
fn sum_sq_is_identical_across_exec_modes() {
    let chi = DirichletCharacter::primitive(5, 5, 7).unwrap();
    let q = QuadraticForm::new(1, 1, 3);
    let params = SumParams::new(3, -8, 200, 150).unwrap();
    let a = sum_sq(&q, &params, &chi, Exec::Sequential);
    let b = sum_sq(&q, &params, &chi, Exec::Parallel);
    assert_eq!((a.re.to_bits(), a.im.to_bits()), (b.re.to_bits(), b.im.to_bits()));
}

#[test]
fn sum_sq_against_direct_double_loop() {
    // independent evaluation of χ(Q(x, y)) by the definition χ(g^k) = e(index k / φ)
    let (p, n, idx) = (5u64, 3u32, 3u64);
    let modulus = p.pow(n) as i128;
    let phi = (p - 1) * p.pow(n - 1);
    let g = 2i128; // a primitive root mod 125
    let mut dlog = vec![None; modulus as usize];
    let mut x = 1i128;
    for k in 0..phi {
        dlog[x as usize] = Some(k);
        x = x * g % modulus;
    }
    let chi = DirichletCharacter::primitive(p, n, idx).unwrap();
    assert_eq!(chi.generator(), 2);
    let q = QuadraticForm::new(1, 1, 3);
    let (m, nn) = (20u64, 30u64);
    let bump = |t: f64| if t.abs() < 1.0 { (1.0 / (t * t - 1.0)).exp() } else { 0.0 };
    let mut direct = Complex64::new(0.0, 0.0);
    for x in -25i128..=25 {
        for y in -35i128..=35 {
            let v = (x * x + 2 * x * y + 3 * y * y).rem_euclid(modulus);
            if let Some(k) = dlog[v as usize] {
                let w = bump(x as f64 / m as f64) * bump(y as f64 / nn as f64);
                direct += Complex64::from_polar(w, std::f64::consts::TAU * ((idx * k) % phi) as f64 / phi as f64);
            }
        }
    }
    let got = sum_sq(&q, &SumParams::new(0, 0, m, nn).unwrap(), &chi, Exec::Sequential);
    assert!((got - direct).norm() < 1e-10 * direct.norm().max(1.0), "{got} vs {direct}");
}

#[test]
fn sweep_csv_is_byte_stable() {
    let cfg = SweepConfig { n: 5, points: 4, ..Default::default() };
    let a = bounds::to_csv(&bounds::corollary_sweep(&cfg, Exec::Parallel).unwrap());
    let b = bounds::to_csv(&bounds::corollary_sweep(&cfg, Exec::Sequential).unwrap());
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 9);
}
