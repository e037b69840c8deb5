//! The quintilinear 5-AP operator and exact progression counting.
//!
//! `Λ(f₁,…,f₅) = E_{x,y ∈ Z/NZ} Π f_k(x + (k−1)y)` includes the diagonal
//! `y = 0`, so an AP-free set is recognized by `N²Λ(1_A) = |A|`, not by a
//! zero count. Sets in an interval `[N′]` are lifted into `Z/NZ` for a
//! prime `N ≥ 1024·N′`, large enough that lifted progressions cannot wrap.

use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
use num_traits::Zero;

use crate::arith;
use crate::cyclic::CyclicFunction;

/// Default `N²` budget for the double-loop operator.
pub const DEFAULT_PAIR_CAP: u128 = 4_000_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ApcountError {
    /// Functions fed to Λ must share a modulus.
    ModulusMismatch,
    /// `N²` pair evaluations exceed the budget.
    WorkCapExceeded { required: u128, cap: u128 },
    /// Set elements must lie in `[1, bound]`, without duplicates.
    ElementOutOfRange { element: u64, bound: u64 },
    /// The embedding modulus must satisfy `N ≥ 1024·N′`.
    ModulusTooSmall { modulus: u64, needed: u64 },
    /// The embedding modulus must be prime.
    NotPrime { modulus: u64 },
}

impl fmt::Display for ApcountError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ApcountError::ModulusMismatch => write!(f, "moduli differ"),
            ApcountError::WorkCapExceeded { required, cap } => {
                write!(f, "needs {required} pair evaluations, cap is {cap}")
            }
            ApcountError::ElementOutOfRange { element, bound } => {
                write!(f, "element {element} outside [1, {bound}]")
            }
            ApcountError::ModulusTooSmall { modulus, needed } => {
                write!(f, "modulus {modulus} below embedding floor {needed}")
            }
            ApcountError::NotPrime { modulus } => write!(f, "modulus {modulus} is not prime"),
        }
    }
}

impl core::error::Error for ApcountError {}

/// A subset of the interval `[1, N′]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetInInterval {
    bound: u64,
    elements: Vec<u64>,
}

impl SetInInterval {
    /// Sorts and deduplicates; every element must lie in `[1, bound]`.
    pub fn new(bound: u64, mut elements: Vec<u64>) -> Result<Self, ApcountError> {
        elements.sort_unstable();
        elements.dedup();
        for &e in &elements {
            if e == 0 || e > bound {
                return Err(ApcountError::ElementOutOfRange { element: e, bound });
            }
        }
        Ok(Self { bound, elements })
    }

    /// The full interval `[1, N′]`.
    pub fn interval(bound: u64) -> Self {
        Self { bound, elements: (1..=bound).collect() }
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    pub fn elements(&self) -> &[u64] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn density(&self) -> f64 {
        self.elements.len() as f64 / self.bound as f64
    }

    pub fn contains(&self, x: u64) -> bool {
        self.elements.binary_search(&x).is_ok()
    }

    /// Indicator of the lift into `Z/NZ` (elements kept at their integer
    /// representatives; everything else 0).
    pub fn lift_indicator(&self, modulus: u64) -> CyclicFunction {
        let residues: Vec<usize> = self.elements.iter().map(|&e| e as usize).collect();
        CyclicFunction::indicator(modulus as usize, &residues)
    }
}

/// `Λ(f₁,…,f₅) = E_{x,y} Π f_k(x+(k−1)y)` by the reference `O(N²)` loop.
pub fn lambda5(
    fs: [&CyclicFunction; 5],
    cap: u128,
) -> Result<Complex64, ApcountError> {
    let n = fs[0].modulus();
    if fs.iter().any(|f| f.modulus() != n) {
        return Err(ApcountError::ModulusMismatch);
    }
    let required = (n as u128) * (n as u128);
    if required > cap {
        return Err(ApcountError::WorkCapExceeded { required, cap });
    }
    let mut acc = Complex64::zero();
    for x in 0..n {
        for y in 0..n {
            let mut term = fs[0].values()[x];
            let mut point = x;
            for f in &fs[1..] {
                point = (point + y) % n;
                term *= f.values()[point];
            }
            acc += term;
        }
    }
    Ok(acc / (n as f64 * n as f64))
}

/// `Λ(f, f, f, f, f)`.
pub fn lambda5_diag(f: &CyclicFunction, cap: u128) -> Result<Complex64, ApcountError> {
    lambda5([f, f, f, f, f], cap)
}

fn check_embedding(set: &SetInInterval, n: u64) -> Result<(), ApcountError> {
    let needed = set.bound.saturating_mul(1024);
    if n < needed {
        return Err(ApcountError::ModulusTooSmall { modulus: n, needed });
    }
    if !arith::is_prime(n) {
        return Err(ApcountError::NotPrime { modulus: n });
    }
    Ok(())
}

/// Exact count of pairs `(x, y) ∈ (Z/NZ)²` whose five points all lie in the
/// lifted set; equals `N²·Λ(1_A)` and includes the `|A|` diagonal pairs.
pub fn count_5aps(set: &SetInInterval, n: u64) -> Result<u64, ApcountError> {
    check_embedding(set, n)?;
    Ok(count_5aps_unchecked(set, n))
}

/// The same count without the prime-embedding validation, for moduli used
/// directly as test fixtures.
pub fn count_5aps_unchecked(set: &SetInInterval, n: u64) -> u64 {
    let n = n as usize;
    let mut member = alloc::vec![false; n];
    for &e in &set.elements {
        member[e as usize % n] = true;
    }
    let mut count = 0u64;
    for &e in &set.elements {
        let x = e as usize % n;
        for y in 0..n {
            let mut ok = true;
            let mut point = x;
            for _ in 0..4 {
                point = (point + y) % n;
                if !member[point] {
                    ok = false;
                    break;
                }
            }
            if ok {
                count += 1;
            }
        }
    }
    count
}

/// Number of (possibly reversed or trivial) 5-AP pairs `(x, y)` for the
/// full interval `[N′]` lifted into a modulus `N ≥ 5N′`: the closed form
/// `N′ + 2·Σ_{d≥1} max(0, N′ − 4d)`.
pub fn count_5aps_in_interval(n_prime: u64) -> u64 {
    let mut count = n_prime;
    let mut d = 1;
    while 4 * d < n_prime {
        count += 2 * (n_prime - 4 * d);
        d += 1;
    }
    count
}
