//! Complex-valued functions on `Z/NZ` and their Fourier analysis.
//!
//! Convention: the discrete Fourier transform is expectation-normalized,
//! `f̂(ξ) = E_x f(x) e(−xξ/N)`, so physical-side and Fourier-side averages
//! read identically (Parseval becomes `E_x |f|² = Σ_ξ |f̂(ξ)|²`). Phases of
//! exact rational angle are evaluated by reducing `p/q mod 1` in rational
//! arithmetic before touching floating point, keeping each evaluation
//! within `1e−14` of the exact unit complex number.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;
use core::fmt;

use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use crate::ratmod::{self, Rat};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CyclicError {
    /// `values` length does not match the modulus.
    LengthMismatch { modulus: usize, len: usize },
    /// Modulus must be at least 1.
    EmptyModulus,
    /// Two functions with different moduli were combined.
    ModulusMismatch { left: usize, right: usize },
    /// A real argument was NaN or infinite.
    NonFinite,
}

impl fmt::Display for CyclicError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CyclicError::LengthMismatch { modulus, len } => {
                write!(f, "expected {modulus} values, got {len}")
            }
            CyclicError::EmptyModulus => write!(f, "modulus must be >= 1"),
            CyclicError::ModulusMismatch { left, right } => {
                write!(f, "modulus mismatch: {left} vs {right}")
            }
            CyclicError::NonFinite => write!(f, "argument must be finite"),
        }
    }
}

impl core::error::Error for CyclicError {}

/// A function `Z/NZ → C`, stored densely by residue.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclicFunction {
    modulus: usize,
    values: Vec<Complex64>,
}

impl CyclicFunction {
    pub fn new(modulus: usize, values: Vec<Complex64>) -> Result<Self, CyclicError> {
        if modulus == 0 {
            return Err(CyclicError::EmptyModulus);
        }
        if values.len() != modulus {
            return Err(CyclicError::LengthMismatch { modulus, len: values.len() });
        }
        Ok(Self { modulus, values })
    }

    pub fn constant(modulus: usize, value: Complex64) -> Self {
        Self { modulus, values: vec![value; modulus] }
    }

    /// Indicator of a set of residues (reduced mod N).
    pub fn indicator(modulus: usize, set: &[usize]) -> Self {
        let mut values = vec![Complex64::zero(); modulus];
        for &x in set {
            values[x % modulus] = Complex64::new(1.0, 0.0);
        }
        Self { modulus, values }
    }

    pub fn from_fn(modulus: usize, f: impl FnMut(usize) -> Complex64) -> Self {
        Self { modulus, values: (0..modulus).map(f).collect() }
    }

    pub fn modulus(&self) -> usize {
        self.modulus
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Value at `x`, reduced mod N.
    pub fn get(&self, x: usize) -> Complex64 {
        self.values[x % self.modulus]
    }

    /// `E_x f(x)`.
    pub fn mean(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() / self.modulus as f64
    }

    /// `E_x |f(x)|`.
    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).sum::<f64>() / self.modulus as f64
    }

    /// `(E_x |f(x)|²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.modulus as f64).sqrt()
    }

    /// `max_x |f(x)|`.
    pub fn linf_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self { modulus: self.modulus, values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn sub(&self, other: &Self) -> Result<Self, CyclicError> {
        check_same_modulus(self, other)?;
        Ok(Self {
            modulus: self.modulus,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        })
    }
}

fn check_same_modulus(f: &CyclicFunction, g: &CyclicFunction) -> Result<(), CyclicError> {
    if f.modulus != g.modulus {
        return Err(CyclicError::ModulusMismatch { left: f.modulus, right: g.modulus });
    }
    Ok(())
}

/// A frequency `α = numerator/denominator`, kept in lowest terms.
///
/// When the denominator divides `N` this is the element `α ∈ (1/N)Z` of the
/// frequency-set presentation; the residue presentation `ξ ∈ Z/NZ` is the
/// same data via `ξ = α·N` (see [`RationalFrequency::residue_mod`]).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RationalFrequency {
    numerator: i64,
    denominator: u64,
}

impl RationalFrequency {
    pub fn new(numerator: i64, denominator: u64) -> Self {
        assert!(denominator > 0, "denominator must be positive");
        let g = (numerator.unsigned_abs()).gcd(&denominator).max(1);
        Self { numerator: numerator / g as i64, denominator: denominator / g }
    }

    pub fn numerator(&self) -> i64 {
        self.numerator
    }

    pub fn denominator(&self) -> u64 {
        self.denominator
    }

    pub fn as_rat(&self) -> Rat {
        ratmod::rat(self.numerator, self.denominator as i64)
    }

    /// The residue `ξ ∈ Z/NZ` with `ξ/N ≡ self (mod 1)`, when the
    /// denominator divides `N`.
    pub fn residue_mod(&self, n: u64) -> Option<u64> {
        if n % self.denominator != 0 {
            return None;
        }
        let scale = (n / self.denominator) as i64;
        Some((self.numerator * scale).rem_euclid(n as i64) as u64)
    }
}

/// `‖x‖_{R/Z} = min({x}, 1 − {x}) ∈ [0, 1/2]` in floating point.
pub fn frac_norm(x: f64) -> Result<f64, CyclicError> {
    if !x.is_finite() {
        return Err(CyclicError::NonFinite);
    }
    let f = x - x.floor();
    Ok(f.min(1.0 - f))
}

/// `e(θ) = exp(2πiθ)`.
pub fn phase(theta: f64) -> Complex64 {
    let (s, c) = (TAU * theta).sin_cos();
    Complex64::new(c, s)
}

/// `e(x)` for exact rational `x`, reduced mod 1 before evaluation.
pub fn phase_rat(x: &Rat) -> Complex64 {
    let reduced = ratmod::frac(x);
    phase(reduced.to_f64().unwrap_or(0.0))
}

/// Table of `e(−j/N)` for `j = 0..N−1`; the workhorse for exact-index DFTs.
fn conj_root_table(n: usize) -> Vec<Complex64> {
    (0..n).map(|j| phase(-(j as f64) / n as f64)).collect()
}

/// Expectation-normalized DFT: `f̂(ξ) = E_x f(x) e(−xξ/N)`.
///
/// Direct `O(N²)` evaluation with exact index reduction `xξ mod N`; this is
/// the reference transform all faster paths must match.
pub fn dft(f: &CyclicFunction) -> CyclicFunction {
    let n = f.modulus();
    let roots = conj_root_table(n);
    let values = (0..n)
        .map(|xi| {
            let mut acc = Complex64::zero();
            for x in 0..n {
                acc += f.values[x] * roots[(x * xi) % n];
            }
            acc / n as f64
        })
        .collect();
    CyclicFunction { modulus: n, values }
}

/// `⟨f, g⟩ = E_x f(x) conj(g(x))`.
pub fn inner_product(f: &CyclicFunction, g: &CyclicFunction) -> Result<Complex64, CyclicError> {
    check_same_modulus(f, g)?;
    let acc: Complex64 =
        f.values.iter().zip(&g.values).map(|(a, b)| a * b.conj()).sum();
    Ok(acc / f.modulus as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seeded(modulus: usize, seed: u64) -> CyclicFunction {
        let mut rng = crate::arith::SplitMix64::new(seed);
        CyclicFunction::from_fn(modulus, |_| {
            let re = rng.next_below(2001) as f64 / 1000.0 - 1.0;
            let im = rng.next_below(2001) as f64 / 1000.0 - 1.0;
            Complex64::new(re, im)
        })
    }

    #[test]
    fn frac_norm_examples() {
        assert_eq!(frac_norm(0.0).unwrap(), 0.0);
        assert!((frac_norm(0.75).unwrap() - 0.25).abs() < 1e-15);
        assert!((frac_norm(1.3).unwrap() - 0.3).abs() < 1e-15);
        assert!(frac_norm(f64::NAN).is_err());
        assert!(frac_norm(f64::INFINITY).is_err());
    }

    #[test]
    fn frac_norm_symmetry_and_periodicity() {
        for i in -50..50 {
            let x = i as f64 * 0.137;
            let base = frac_norm(x).unwrap();
            assert!((frac_norm(-x).unwrap() - base).abs() < 1e-12);
            for k in [-3i32, 1, 7] {
                assert!((frac_norm(x + k as f64).unwrap() - base).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dft_of_constant_is_delta() {
        let f = CyclicFunction::constant(12, Complex64::new(1.0, 0.0));
        let fh = dft(&f);
        assert!((fh.values[0] - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        for xi in 1..12 {
            assert!(fh.values[xi].norm() < 1e-14);
        }
    }

    #[test]
    fn dft_of_point_mass_is_flat() {
        let f = CyclicFunction::indicator(9, &[0]);
        let fh = dft(&f);
        for xi in 0..9 {
            assert!((fh.values[xi] - Complex64::new(1.0 / 9.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn parseval_on_random_function() {
        // E_x |f|² = Σ_ξ |f̂(ξ)|², the derived oracle is the direct double sum.
        for (n, seed) in [(16usize, 7u64), (100, 8), (256, 9)] {
            let f = seeded(n, seed);
            let physical = f.values.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
            let spectral: f64 = dft(&f).values.iter().map(|v| v.norm_sqr()).sum();
            assert!((physical - spectral).abs() < 1e-10);
        }
    }

    #[test]
    fn dft_of_real_even_function_is_real() {
        let n = 17;
        let mut rng = crate::arith::SplitMix64::new(3);
        let mut vals = vec![Complex64::zero(); n];
        for x in 0..=n / 2 {
            let v = Complex64::new(rng.next_below(1000) as f64 / 500.0 - 1.0, 0.0);
            vals[x] = v;
            vals[(n - x) % n] = v;
        }
        let fh = dft(&CyclicFunction::new(n, vals).unwrap());
        for v in fh.values() {
            assert!(v.im.abs() < 1e-12);
        }
    }

    #[test]
    fn inner_product_examples() {
        let one = CyclicFunction::constant(8, Complex64::new(1.0, 0.0));
        assert!((inner_product(&one, &one).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-15);

        let f = seeded(8, 11);
        let self_ip = inner_product(&f, &f).unwrap();
        assert!(self_ip.im.abs() < 1e-15);
        assert!(self_ip.re >= 0.0);

        let e = CyclicFunction::from_fn(8, |x| phase(x as f64 / 8.0));
        assert!((inner_product(&e, &e).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-14);

        let g = seeded(9, 11);
        assert!(matches!(
            inner_product(&f, &g),
            Err(CyclicError::ModulusMismatch { left: 8, right: 9 })
        ));
    }

    #[test]
    fn phase_rat_high_precision() {
        // Huge rational angles must reduce exactly before evaluation.
        let x = Rat::new(
            num_bigint::BigInt::from(10u64).pow(30) * 3 + 1,
            num_bigint::BigInt::from(4),
        );
        // x ≡ 1/4 (mod 1), so e(x) = i.
        assert!((phase_rat(&x) - Complex64::new(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn rational_frequency_bridging() {
        let f = RationalFrequency::new(3, 100);
        assert_eq!(f.residue_mod(100), Some(3));
        assert_eq!(f.residue_mod(300), Some(9));
        assert_eq!(f.residue_mod(101), None);
        let neg = RationalFrequency::new(-1, 7);
        assert_eq!(neg.residue_mod(7), Some(6));
        // Canonical form divides out the gcd.
        assert_eq!(RationalFrequency::new(4, 6), RationalFrequency::new(2, 3));
    }
}
