//! Discrete derivatives and Gowers `U^k` norms by exact enumeration.
//!
//! `‖f‖_{U^k}^{2^k} = E_{x,h₁,…,h_k} Δ_{h₁,…,h_k} f(x)` with
//! `Δ_h f(x) = f(x) conj(f(x+h))`. The reference implementation walks all
//! `N^{k+1}` tuples; [`u_norm`] evaluates the same sum by recursing on
//! multiplicative derivatives, which shares products across tuples and must
//! (and does, see tests) match the reference to `1e−10`. Exceeding the work
//! cap is an error, never silent sampling.

use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
use num_traits::Zero;

use crate::cyclic::CyclicFunction;
use crate::localpoly::PartialPhase;
use crate::ratmod;

/// Default tuple-evaluation budget shared by the enumerating norms.
pub const DEFAULT_WORK_CAP: u128 = 1_000_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GowersError {
    /// `N^{k+1}` tuples exceed the configured budget.
    WorkCapExceeded { required: u128, cap: u128 },
    /// `k` must be at least 1.
    DegreeTooSmall,
    /// Degrees `k ≥ 6` are out of scope.
    DegreeTooLarge { k: u32 },
    /// The cube average had a non-negligible imaginary part or was
    /// significantly negative; it is a real nonnegative quantity.
    NumericalFault,
}

impl fmt::Display for GowersError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GowersError::WorkCapExceeded { required, cap } => {
                write!(f, "enumeration needs {required} tuple evaluations, cap is {cap}")
            }
            GowersError::DegreeTooSmall => write!(f, "U^k norm needs k >= 1"),
            GowersError::DegreeTooLarge { k } => write!(f, "U^{k} norm unsupported (k >= 6)"),
            GowersError::NumericalFault => {
                write!(f, "cube average was not real-nonnegative within tolerance")
            }
        }
    }
}

impl core::error::Error for GowersError {}

/// Shift vector `(h₁, …, h_k)`, each reduced mod N.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivativeVector {
    shifts: Vec<usize>,
}

impl DerivativeVector {
    pub fn new(modulus: usize, shifts: &[usize]) -> Self {
        Self { shifts: shifts.iter().map(|&h| h % modulus).collect() }
    }

    pub fn shifts(&self) -> &[usize] {
        &self.shifts
    }
}

/// Multiplicative discrete derivative `Δ_h f(x) = f(x) conj(f(x+h))`.
pub fn mult_derivative(f: &CyclicFunction, h: usize) -> CyclicFunction {
    let n = f.modulus();
    CyclicFunction::from_fn(n, |x| f.values()[x] * f.values()[(x + h) % n].conj())
}

/// `Δ_{h₁,…,h_k} f`, applied left to right.
pub fn mult_derivative_vec(f: &CyclicFunction, hs: &DerivativeVector) -> CyclicFunction {
    let mut g = f.clone();
    for &h in &hs.shifts {
        g = mult_derivative(&g, h);
    }
    g
}

/// Additive discrete derivative of a partial `R/Z`-valued phase:
/// `(∂_h φ)(x) = φ(x) − φ(x+h)`, defined exactly where both points are in
/// the domain.
pub fn add_derivative(phi: &PartialPhase, h: u64) -> PartialPhase {
    let n = phi.modulus();
    let mut out = PartialPhase::empty(n);
    for (&x, value) in phi.entries() {
        if let Some(shifted) = phi.value((x + h) % n) {
            out.insert(x, ratmod::frac(&(value - shifted)));
        }
    }
    out
}

fn tuple_count(n: usize, k: u32) -> u128 {
    (n as u128).saturating_pow(k + 1)
}

fn check_budget(n: usize, k: u32, cap: u128) -> Result<(), GowersError> {
    if k == 0 {
        return Err(GowersError::DegreeTooSmall);
    }
    if k >= 6 {
        return Err(GowersError::DegreeTooLarge { k });
    }
    let required = tuple_count(n, k);
    if required > cap {
        return Err(GowersError::WorkCapExceeded { required, cap });
    }
    Ok(())
}

fn cube_mean_recursive(values: &[Complex64], k: u32) -> Complex64 {
    let n = values.len();
    if k == 0 {
        return values.iter().sum::<Complex64>() / n as f64;
    }
    let mut acc = Complex64::zero();
    let mut derived = alloc::vec![Complex64::zero(); n];
    for h in 0..n {
        for x in 0..n {
            derived[x] = values[x] * values[(x + h) % n].conj();
        }
        acc += cube_mean_recursive(&derived, k - 1);
    }
    acc / n as f64
}

fn root_of_cube_mean(mean: Complex64, k: u32) -> Result<f64, GowersError> {
    if mean.im.abs() > 1e-9 || mean.re < -1e-9 {
        return Err(GowersError::NumericalFault);
    }
    Ok(mean.re.max(0.0).powf(1.0 / f64::from(1u32 << k)))
}

/// Gowers `U^k` norm under the default work cap.
pub fn u_norm(f: &CyclicFunction, k: u32) -> Result<f64, GowersError> {
    u_norm_with_cap(f, k, DEFAULT_WORK_CAP)
}

/// Gowers `U^k` norm; `N^{k+1}` leaf evaluations must fit `cap`.
pub fn u_norm_with_cap(f: &CyclicFunction, k: u32, cap: u128) -> Result<f64, GowersError> {
    check_budget(f.modulus(), k, cap)?;
    root_of_cube_mean(cube_mean_recursive(f.values(), k), k)
}

/// Reference `U^k` norm: a literal loop over all `(x, h₁, …, h_k)` tuples.
pub fn u_norm_reference(f: &CyclicFunction, k: u32, cap: u128) -> Result<f64, GowersError> {
    let n = f.modulus();
    check_budget(n, k, cap)?;
    let mut hs = alloc::vec![0usize; k as usize];
    let mut acc = Complex64::zero();
    loop {
        for x in 0..n {
            // Π over the cube {0,1}^k of f at x + ε·h, conjugated on odd ε.
            let mut term = Complex64::new(1.0, 0.0);
            for mask in 0u32..(1 << k) {
                let mut point = x;
                for (i, &h) in hs.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        point += h;
                    }
                }
                let v = f.values()[point % n];
                term *= if mask.count_ones() % 2 == 0 { v } else { v.conj() };
            }
            acc += term;
        }
        // Odometer over the shift vector.
        let mut i = 0;
        loop {
            if i == k as usize {
                let mean = acc / tuple_count(n, k) as f64;
                return root_of_cube_mean(mean, k);
            }
            hs[i] += 1;
            if hs[i] < n {
                break;
            }
            hs[i] = 0;
            i += 1;
        }
    }
}
