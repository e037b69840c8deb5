//! Locally polynomial phases on subsets of `Z/NZ`.
//!
//! A phase `φ: S → R/Z` is locally degree `s` when every combinatorial cube
//! `x + {0,h₁}+⋯+{0,h_{s+1}}` fully contained in `S` has vanishing
//! `(s+1)`-fold additive derivative. Verification is by exhaustive cube
//! enumeration in exact rational arithmetic; cube arithmetic is mod `N`, so
//! phases built from floors of the canonical representative are only
//! locally polynomial on sets narrow enough that cubes cannot wrap — which
//! is precisely why the constructions downstream confine themselves to
//! shifted Bohr sets that are short intervals in disguise.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::ratmod::{self, Rat};

/// Default cube-enumeration budget (pairs of `x` and shift tuple).
pub const DEFAULT_CUBE_CAP: u128 = 2_000_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LocalPolyError {
    /// Cube enumeration would exceed the budget.
    WorkCapExceeded { required: u128, cap: u128 },
    /// Floor-phase coefficient denominator must divide the modulus.
    BadAlphaDenominator,
    /// A domain point was not a residue mod N.
    DomainOutOfRange { point: u64, modulus: u64 },
}

impl fmt::Display for LocalPolyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LocalPolyError::WorkCapExceeded { required, cap } => {
                write!(f, "cube scan needs {required} evaluations, cap is {cap}")
            }
            LocalPolyError::BadAlphaDenominator => {
                write!(f, "floor coefficient denominator must divide the modulus")
            }
            LocalPolyError::DomainOutOfRange { point, modulus } => {
                write!(f, "domain point {point} not reduced mod {modulus}")
            }
        }
    }
}

impl core::error::Error for LocalPolyError {}

/// A partial `R/Z`-valued phase: exact rationals reduced to `[0, 1)`,
/// defined exactly on its domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialPhase {
    modulus: u64,
    values: BTreeMap<u64, Rat>,
}

impl PartialPhase {
    pub fn empty(modulus: u64) -> Self {
        Self { modulus, values: BTreeMap::new() }
    }

    pub fn from_fn(
        modulus: u64,
        domain: impl IntoIterator<Item = u64>,
        mut f: impl FnMut(u64) -> Rat,
    ) -> Self {
        let mut phase = Self::empty(modulus);
        for x in domain {
            let v = f(x);
            phase.insert(x, v);
        }
        phase
    }

    /// Insert `x ↦ v mod 1`.
    pub fn insert(&mut self, x: u64, v: Rat) {
        self.values.insert(x % self.modulus, ratmod::frac(&v));
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn value(&self, x: u64) -> Option<&Rat> {
        self.values.get(&(x % self.modulus))
    }

    pub fn contains(&self, x: u64) -> bool {
        self.values.contains_key(&(x % self.modulus))
    }

    pub fn domain(&self) -> impl Iterator<Item = u64> + '_ {
        self.values.keys().copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&u64, &Rat)> {
        self.values.iter()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Restriction to `subset ∩ domain`.
    pub fn restricted(&self, subset: impl IntoIterator<Item = u64>) -> Self {
        let mut out = Self::empty(self.modulus);
        for x in subset {
            if let Some(v) = self.values.get(&(x % self.modulus)) {
                out.values.insert(x % self.modulus, v.clone());
            }
        }
        out
    }

    /// Pointwise sum mod 1 on the intersection of domains.
    pub fn add(&self, other: &Self) -> Self {
        let mut out = Self::empty(self.modulus);
        for (&x, v) in &self.values {
            if let Some(w) = other.values.get(&x) {
                out.insert(x, v + w);
            }
        }
        out
    }
}

/// Result of a local-degree check: pass, or one violating cube.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DegreeCheck {
    LocallyDegree,
    Counterexample { x: u64, shifts: Vec<u64> },
}

impl DegreeCheck {
    pub fn passed(&self) -> bool {
        matches!(self, DegreeCheck::LocallyDegree)
    }
}

/// Exhaustive check that `phi` is locally degree `s`.
///
/// Enumerates shift tuples `(h₁, …, h_{s+1})` in lexicographic order with
/// `x` innermost, pruning cubes by domain membership of the precomputed
/// vertex offsets. Derivative vanishing is tested exactly: on a shared
/// small denominator when one fits in `u64`, in big-rational arithmetic
/// otherwise.
pub fn is_locally_degree(
    phi: &PartialPhase,
    s: u32,
    cap: u128,
) -> Result<DegreeCheck, LocalPolyError> {
    let n = phi.modulus as usize;
    let order = s + 1;
    let domain: Vec<u64> = phi.domain().collect();
    let required = (domain.len() as u128) * (n as u128).saturating_pow(order);
    if required > cap {
        return Err(LocalPolyError::WorkCapExceeded { required, cap });
    }

    let mut member = alloc::vec![false; n];
    let mut index = alloc::vec![usize::MAX; n];
    let mut values = Vec::with_capacity(domain.len());
    for (i, &x) in domain.iter().enumerate() {
        member[x as usize] = true;
        index[x as usize] = i;
        values.push(phi.value(x).expect("domain point has a value").clone());
    }

    let fast = ratmod::common_denominator_i128(&values);

    let verts = 1usize << order;
    let mut hs = alloc::vec![0u64; order as usize];
    let mut offsets = alloc::vec![0usize; verts];
    let mut signs = alloc::vec![0i8; verts];
    for (mask, sign) in signs.iter_mut().enumerate() {
        *sign = if (mask as u32).count_ones() % 2 == 0 { 1 } else { -1 };
    }

    loop {
        for (mask, offset) in offsets.iter_mut().enumerate() {
            let mut sum = 0u64;
            for (i, &h) in hs.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    sum += h;
                }
            }
            *offset = (sum % phi.modulus) as usize;
        }

        'points: for &x in &domain {
            let base = x as usize;
            for &off in offsets.iter() {
                if !member[(base + off) % n] {
                    continue 'points;
                }
            }
            let vanishes = match &fast {
                Some((nums, den)) => {
                    let mut acc: i128 = 0;
                    for (mask, &off) in offsets.iter().enumerate() {
                        let v = nums[index[(base + off) % n]];
                        acc += if signs[mask] > 0 { v } else { -v };
                    }
                    acc.rem_euclid(*den as i128) == 0
                }
                None => {
                    let mut acc = Rat::zero();
                    for (mask, &off) in offsets.iter().enumerate() {
                        let v = &values[index[(base + off) % n]];
                        if signs[mask] > 0 {
                            acc += v;
                        } else {
                            acc -= v;
                        }
                    }
                    ratmod::frac(&acc).is_zero()
                }
            };
            if !vanishes {
                return Ok(DegreeCheck::Counterexample { x, shifts: hs.clone() });
            }
        }

        let mut i = 0;
        loop {
            if i == order as usize {
                return Ok(DegreeCheck::LocallyDegree);
            }
            hs[i] += 1;
            if hs[i] < phi.modulus {
                break;
            }
            hs[i] = 0;
            i += 1;
        }
    }
}

/// Literal full scan, kept as the oracle the pruned path must match.
pub fn is_locally_degree_naive(
    phi: &PartialPhase,
    s: u32,
    cap: u128,
) -> Result<DegreeCheck, LocalPolyError> {
    let n = phi.modulus;
    let order = (s + 1) as usize;
    let required = (n as u128).saturating_pow(s + 2);
    if required > cap {
        return Err(LocalPolyError::WorkCapExceeded { required, cap });
    }
    let verts = 1usize << order;
    let mut hs = alloc::vec![0u64; order];
    loop {
        for x in 0..n {
            let mut acc = Rat::zero();
            let mut inside = true;
            for mask in 0..verts {
                let mut point = x;
                for (i, &h) in hs.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        point = (point + h) % n;
                    }
                }
                match phi.value(point) {
                    Some(v) => {
                        if (mask as u32).count_ones() % 2 == 0 {
                            acc += v;
                        } else {
                            acc -= v;
                        }
                    }
                    None => {
                        inside = false;
                        break;
                    }
                }
            }
            if inside && !ratmod::frac(&acc).is_zero() {
                return Ok(DegreeCheck::Counterexample { x, shifts: hs.clone() });
            }
        }
        let mut i = 0;
        loop {
            if i == order {
                return Ok(DegreeCheck::LocallyDegree);
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

/// A shifted floor `⌊α t⌋_β`: the integer part of `αt` relative to the
/// fractional window `[β − 1/2, β + 1/2)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftedFloorSpec {
    pub modulus: u64,
    /// Coefficient `α`; its denominator must divide the modulus.
    pub alpha: Rat,
    /// Window center `β`.
    pub beta: Rat,
}

impl ShiftedFloorSpec {
    pub fn new(modulus: u64, alpha: Rat, beta: Rat) -> Result<Self, LocalPolyError> {
        let denom = alpha.denom().clone();
        if (BigInt::from(modulus) % denom).is_zero() {
            Ok(Self { modulus, alpha, beta })
        } else {
            Err(LocalPolyError::BadAlphaDenominator)
        }
    }

    /// `⌊α n⌋_β` at the canonical representative `n`.
    pub fn eval(&self, n: u64) -> BigInt {
        let t = &self.alpha * ratmod::rat_int((n % self.modulus) as i64);
        ratmod::shifted_floor(&t, &self.beta)
    }
}

/// Integer-valued function on part of `Z/NZ`; the raw output of a floor
/// phase, exposed to `R/Z` only through products.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FloorFunction {
    modulus: u64,
    values: BTreeMap<u64, BigInt>,
}

impl FloorFunction {
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn value(&self, x: u64) -> Option<&BigInt> {
        self.values.get(&(x % self.modulus))
    }

    pub fn entries(&self) -> impl Iterator<Item = (&u64, &BigInt)> {
        self.values.iter()
    }

    /// `γ·⌊·⌋ mod 1` as a partial phase.
    pub fn scaled_phase(&self, gamma: &Rat) -> PartialPhase {
        let mut out = PartialPhase::empty(self.modulus);
        for (&x, v) in &self.values {
            out.insert(x, gamma * Rat::from_integer(v.clone()));
        }
        out
    }
}

/// `n ↦ ⌊α n⌋_β` on `domain`, as exact integers.
pub fn floor_phase(
    spec: &ShiftedFloorSpec,
    domain: impl IntoIterator<Item = u64>,
) -> Result<FloorFunction, LocalPolyError> {
    let mut values = BTreeMap::new();
    for x in domain {
        if x >= spec.modulus {
            return Err(LocalPolyError::DomainOutOfRange { point: x, modulus: spec.modulus });
        }
        values.insert(x, spec.eval(x));
    }
    Ok(FloorFunction { modulus: spec.modulus, values })
}

/// Evaluate a polynomial with rational coefficients `coeffs[i]·n^i` at the
/// canonical representative.
fn poly_eval(coeffs: &[Rat], n: u64) -> Rat {
    let x = ratmod::rat_int(n as i64);
    let mut acc = Rat::zero();
    for c in coeffs.iter().rev() {
        acc = acc * &x + c;
    }
    acc
}

/// Pure polynomial phase `n ↦ (Σ coeffs[i] n^i) mod 1` on `domain`.
pub fn poly_phase(
    modulus: u64,
    domain: impl IntoIterator<Item = u64>,
    coeffs: &[Rat],
) -> PartialPhase {
    PartialPhase::from_fn(modulus, domain, |n| poly_eval(coeffs, n))
}

/// `(Σ coeffs[i] n^i)·⌊p(n)⌋ mod 1` — the `(αn² + βn + γ)⌊p_j(n)⌋` term
/// shape, assembled on the floor function's domain.
pub fn poly_times_floor(coeffs: &[Rat], floor: &FloorFunction) -> PartialPhase {
    let mut out = PartialPhase::empty(floor.modulus);
    for (&x, v) in &floor.values {
        out.insert(x, poly_eval(coeffs, x) * Rat::from_integer(v.clone()));
    }
    out
}

/// `γ·Π ⌊p_j(n)⌋ mod 1` on the common domain — the two- and three-floor
/// term shapes.
pub fn floor_product_phase(gamma: &Rat, floors: &[&FloorFunction]) -> PartialPhase {
    assert!(!floors.is_empty());
    let modulus = floors[0].modulus;
    let mut out = PartialPhase::empty(modulus);
    'points: for (&x, first) in &floors[0].values {
        let mut acc = Rat::from_integer(first.clone());
        for other in &floors[1..] {
            match other.value(x) {
                Some(v) => acc *= Rat::from_integer(v.clone()),
                None => continue 'points,
            }
        }
        out.insert(x, gamma * acc);
    }
    out
}

/// Exact residuals of the two fractional-part identities underlying the
/// degree-3 bracket calculus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BracketReport {
    /// `({x}y + x{y}) − (xy − ⌊x⌋⌊y⌋ + {x}{y})`, exact in `R`; must be 0.
    pub product_identity_residual: Rat,
    /// `an{bn{cn}} − (abn²{cn} − {an}·bn{cn} + {an}{bn{cn}})` reduced
    /// mod 1; must be 0.
    pub nesting_identity_residual: Rat,
    /// The term `{an}{bn{cn}}` that the smoothed pipeline drops.
    pub dropped_term: Rat,
}

/// Check both identities on exact rational inputs and report residuals.
pub fn verify_bracket_identities(
    x: &Rat,
    y: &Rat,
    triple: (&Rat, &Rat, &Rat, i64),
) -> BracketReport {
    let fx = ratmod::frac(x);
    let fy = ratmod::frac(y);
    let floor_x = Rat::from_integer(ratmod::floor_int(x));
    let floor_y = Rat::from_integer(ratmod::floor_int(y));
    let lhs = &fx * y + x * &fy;
    let rhs = x * y - &floor_x * &floor_y + &fx * &fy;
    let product_identity_residual = lhs - rhs;

    let (a, b, c, n) = triple;
    let n_rat = ratmod::rat_int(n);
    let an = a * &n_rat;
    let cn_frac = ratmod::frac(&(c * &n_rat));
    let w = b * &n_rat * &cn_frac; // bn{cn}
    let w_frac = ratmod::frac(&w);
    let an_frac = ratmod::frac(&an);
    let lhs = &an * &w_frac; // an{bn{cn}}
    let rhs = a * b * &n_rat * &n_rat * &cn_frac - &an_frac * &w + &an_frac * &w_frac;
    let nesting_identity_residual = ratmod::frac(&(lhs - rhs));
    let dropped_term = &an_frac * &w_frac;

    BracketReport { product_identity_residual, nesting_identity_residual, dropped_term }
}
