//! Step-`≤3` nilpotent Lie algebras over exact rationals.
//!
//! An algebra is given by structure constants `[X_i, X_j] = Σ c_{ijk} X_k`
//! with `c_{ijk} = 0` unless `k > max(i,j)`, validated against antisymmetry,
//! the Jacobi identity, and the filtration compatibility conditions — all
//! exactly. Group elements are Mal'cev coordinates of the first kind and
//! multiply through the truncated Baker–Campbell–Hausdorff formula
//! `X + Y + ½[X,Y] + (1/12)([X,[X,Y]] − [Y,[X,Y]])`, so the group laws are
//! equalities of rationals, not tolerances.
//!
//! The module also carries two analytic utilities used alongside the
//! algebra: certified Fourier approximation of Lipschitz functions on low
//! dimensional tori, and a smooth partition of unity on the circle.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::ratmod::{self, Rat};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NilpotentError {
    BadStructure(String),
    JacobiViolated { i: usize, j: usize, l: usize },
    FiltrationViolated { i: usize, j: usize, k: usize },
    /// Operation requires all structure constants to be integers divisible
    /// by 12.
    NotTwelveDivisible,
    /// A structure constant exceeds the stated height bound.
    HeightExceeded { bound: u64 },
    /// Element support incompatible with the filtration.
    BadSupport(String),
    /// Fourier certification failed even after raising the cutoff once.
    CertificationFailed { achieved: u64 },
    /// Grid work exceeds the budget.
    WorkCapExceeded { required: u128, cap: u128 },
}

impl fmt::Display for NilpotentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NilpotentError::BadStructure(s) => write!(f, "bad structure constants: {s}"),
            NilpotentError::JacobiViolated { i, j, l } => {
                write!(f, "Jacobi identity fails on (X_{i}, X_{j}, X_{l})")
            }
            NilpotentError::FiltrationViolated { i, j, k } => {
                write!(f, "c_({i},{j},{k}) violates the filtration")
            }
            NilpotentError::NotTwelveDivisible => {
                write!(f, "structure constants must be integers divisible by 12")
            }
            NilpotentError::HeightExceeded { bound } => {
                write!(f, "structure constant height exceeds {bound}")
            }
            NilpotentError::BadSupport(s) => write!(f, "bad support: {s}"),
            NilpotentError::CertificationFailed { achieved } => {
                write!(f, "sup-error certification failed at cutoff {achieved}")
            }
            NilpotentError::WorkCapExceeded { required, cap } => {
                write!(f, "grid work {required} exceeds cap {cap}")
            }
        }
    }
}

impl core::error::Error for NilpotentError {}

/// Coordinates of an algebra element over the Mal'cev basis (equally, the
/// first-kind coordinates of a group point).
pub type Coords = Vec<Rat>;

/// A filtered nilpotent Lie algebra of degree ≤ 3 with exact rational
/// structure constants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NilAlgebra {
    dim: usize,
    degree: u32,
    /// Indices `≥ d1` span `log G₂`; indices `≥ d2` span `log G₃`.
    d1: usize,
    d2: usize,
    /// `(i, j) → Σ c·X_k` for `i < j`.
    brackets: BTreeMap<(usize, usize), Vec<(usize, Rat)>>,
}

impl NilAlgebra {
    /// Build and validate. `entries` are `(i, j, k, c)` with `i < j < k`
    /// (0-based); antisymmetric counterparts are implied.
    pub fn new(
        dim: usize,
        degree: u32,
        d1: usize,
        d2: usize,
        entries: &[(usize, usize, usize, Rat)],
    ) -> Result<Self, NilpotentError> {
        if degree == 0 || degree > 3 {
            return Err(NilpotentError::BadStructure(String::from("degree must be 1..=3")));
        }
        if !(d1 <= d2 && d2 <= dim) {
            return Err(NilpotentError::BadStructure(String::from(
                "filtration must satisfy d1 <= d2 <= dim",
            )));
        }
        if degree < 3 && d2 != dim {
            return Err(NilpotentError::BadStructure(String::from(
                "degree < 3 requires empty log G_3 (d2 = dim)",
            )));
        }
        let mut brackets: BTreeMap<(usize, usize), Vec<(usize, Rat)>> = BTreeMap::new();
        for (i, j, k, c) in entries {
            if *i >= *j || *k >= dim {
                return Err(NilpotentError::BadStructure(String::from(
                    "entries need i < j and k < dim",
                )));
            }
            if *k <= *j {
                return Err(NilpotentError::BadStructure(String::from(
                    "strict triangularity needs k > max(i, j)",
                )));
            }
            if c.is_zero() {
                continue;
            }
            brackets.entry((*i, *j)).or_default().push((*k, c.clone()));
        }
        let alg = Self { dim, degree, d1, d2, brackets };
        alg.validate_filtration()?;
        alg.validate_jacobi()?;
        Ok(alg)
    }

    fn level(&self, index: usize) -> u32 {
        if index < self.d1 {
            1
        } else if index < self.d2 {
            2
        } else {
            3
        }
    }

    fn validate_filtration(&self) -> Result<(), NilpotentError> {
        for (&(i, j), terms) in &self.brackets {
            let target_level = self.level(i) + self.level(j);
            for (k, _) in terms {
                let ok = match target_level {
                    2 => *k >= self.d1,
                    3 => *k >= self.d2,
                    _ => false, // level ≥ 4 brackets must vanish entirely
                };
                if !ok {
                    return Err(NilpotentError::FiltrationViolated { i, j, k: *k });
                }
            }
        }
        Ok(())
    }

    fn validate_jacobi(&self) -> Result<(), NilpotentError> {
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                for l in j + 1..self.dim {
                    let ei = basis_vec(self.dim, i);
                    let ej = basis_vec(self.dim, j);
                    let el = basis_vec(self.dim, l);
                    let mut acc = self.bracket(&ei, &self.bracket(&ej, &el));
                    add_assign(&mut acc, &self.bracket(&ej, &self.bracket(&el, &ei)));
                    add_assign(&mut acc, &self.bracket(&el, &self.bracket(&ei, &ej)));
                    if acc.iter().any(|c| !c.is_zero()) {
                        return Err(NilpotentError::JacobiViolated { i, j, l });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn filtration(&self) -> (usize, usize, usize) {
        (self.d1, self.d2, self.dim)
    }

    /// Structure constant `c_{ijk}` with antisymmetry applied.
    pub fn constant(&self, i: usize, j: usize, k: usize) -> Rat {
        let (key, sign) = if i < j { ((i, j), 1) } else { ((j, i), -1) };
        if i == j {
            return Rat::zero();
        }
        self.brackets
            .get(&key)
            .and_then(|terms| terms.iter().find(|(kk, _)| *kk == k))
            .map(|(_, c)| if sign > 0 { c.clone() } else { -c.clone() })
            .unwrap_or_else(Rat::zero)
    }

    pub fn constants(&self) -> impl Iterator<Item = (usize, usize, usize, &Rat)> {
        self.brackets
            .iter()
            .flat_map(|(&(i, j), terms)| terms.iter().map(move |(k, c)| (i, j, *k, c)))
    }

    /// `[x, y]` by bilinear expansion, exactly.
    pub fn bracket(&self, x: &[Rat], y: &[Rat]) -> Coords {
        let mut out = alloc::vec![Rat::zero(); self.dim];
        for (&(i, j), terms) in &self.brackets {
            let coeff = &x[i] * &y[j] - &x[j] * &y[i];
            if coeff.is_zero() {
                continue;
            }
            for (k, c) in terms {
                out[*k] += &coeff * c;
            }
        }
        out
    }

    /// `log(e^X e^Y)` by the 4-term BCH formula, exact for step ≤ 3.
    pub fn bch(&self, x: &[Rat], y: &[Rat]) -> Coords {
        let xy = self.bracket(x, y);
        let xxy = self.bracket(x, &xy);
        let yxy = self.bracket(y, &xy);
        let half = ratmod::rat(1, 2);
        let twelfth = ratmod::rat(1, 12);
        (0..self.dim)
            .map(|k| {
                &x[k] + &y[k] + &half * &xy[k] + &twelfth * (&xxy[k] - &yxy[k])
            })
            .collect()
    }

    /// Group multiplication in first-kind coordinates (identical to
    /// [`Self::bch`]; the name marks group-side use).
    pub fn mul_first_kind(&self, p: &[Rat], q: &[Rat]) -> Coords {
        self.bch(p, q)
    }

    /// Group inverse: negation of first-kind coordinates.
    pub fn inverse(&self, p: &[Rat]) -> Coords {
        p.iter().map(|c| -c.clone()).collect()
    }

    /// `p^m` for integer `m` (one-parameter subgroup: scalar multiple).
    pub fn power(&self, p: &[Rat], m: &BigInt) -> Coords {
        let m = Rat::from_integer(m.clone());
        p.iter().map(|c| c * &m).collect()
    }

    /// True when all structure constants are integers divisible by 12.
    pub fn is_twelve_divisible(&self) -> bool {
        self.constants().all(|(_, _, _, c)| {
            c.denom().is_one() && (c.numer() % BigInt::from(12)).is_zero()
        })
    }

    /// Mal'cev coordinates of the second kind, by peeling basis elements
    /// one at a time (the same recursion as the lattice reduction).
    pub fn second_kind(&self, p: &[Rat]) -> Coords {
        let mut rest = p.to_vec();
        let mut out = Vec::with_capacity(self.dim);
        for j in 0..self.dim {
            let u = rest[j].clone();
            let mut neg = alloc::vec![Rat::zero(); self.dim];
            neg[j] = -u.clone();
            rest = self.bch(&neg, &rest);
            debug_assert!(rest[j].is_zero());
            out.push(u);
        }
        out
    }

    /// Rebuild a point from second-kind coordinates:
    /// `exp(u_0 X_0) ⋯ exp(u_{d−1} X_{d−1})`.
    pub fn from_second_kind(&self, u: &[Rat]) -> Coords {
        let mut acc = alloc::vec![Rat::zero(); self.dim];
        for (j, coord) in u.iter().enumerate() {
            let mut factor = alloc::vec![Rat::zero(); self.dim];
            factor[j] = coord.clone();
            acc = self.bch(&acc, &factor);
        }
        acc
    }
}

fn basis_vec(dim: usize, i: usize) -> Coords {
    let mut v = alloc::vec![Rat::zero(); dim];
    v[i] = Rat::one();
    v
}

fn add_assign(x: &mut Coords, y: &Coords) {
    for (a, b) in x.iter_mut().zip(y) {
        *a += b;
    }
}

// ---------------------------------------------------------------------------
// Canonical fixtures
// ---------------------------------------------------------------------------

impl NilAlgebra {
    /// Abelian algebra `Q^d` (degree 1).
    pub fn abelian(dim: usize) -> Self {
        Self::new(dim, 1, dim, dim, &[]).expect("abelian is valid")
    }

    /// Heisenberg algebra: `[X_0, X_1] = c·X_2`, degree 2.
    pub fn heisenberg(c: Rat) -> Self {
        Self::new(3, 2, 2, 3, &[(0, 1, 2, c)]).expect("heisenberg is valid")
    }

    /// Free step-3 algebra on two generators, basis
    /// `X, Y, [X,Y], [X,[X,Y]], [Y,[X,Y]]`, constants scaled by `scale`.
    pub fn free_step3(scale: Rat) -> Self {
        Self::new(
            5,
            3,
            2,
            3,
            &[
                (0, 1, 2, scale.clone()),
                (0, 2, 3, scale.clone()),
                (1, 2, 4, scale),
            ],
        )
        .expect("free step-3 is valid")
    }
}

// ---------------------------------------------------------------------------
// Multiplication forms
// ---------------------------------------------------------------------------

/// The coordinate formulas of first-kind multiplication, extracted
/// symbolically: per coordinate `k`, the bilinear form `φ_k(x, y)` and the
/// cubic corrections (monomials `x_p x_i y_l` and `x_i y_p y_l`).
#[derive(Debug, Clone)]
pub struct MultiplicationForms {
    pub bilinear: Vec<BTreeMap<(usize, usize), Rat>>,
    pub cubic_xxy: Vec<BTreeMap<(usize, usize, usize), Rat>>,
    pub cubic_xyy: Vec<BTreeMap<(usize, usize, usize), Rat>>,
}

impl NilAlgebra {
    pub fn multiplication_forms(&self) -> MultiplicationForms {
        let d = self.dim;
        let mut bilinear = alloc::vec![BTreeMap::new(); d];
        let mut cubic_xxy = alloc::vec![BTreeMap::new(); d];
        let mut cubic_xyy = alloc::vec![BTreeMap::new(); d];
        let half = ratmod::rat(1, 2);
        let twelfth = ratmod::rat(1, 12);

        // ½[x,y]: coefficient of x_i y_j in coordinate k is ½c_{ijk}
        // (including the antisymmetric pair).
        for (&(i, j), terms) in &self.brackets {
            for (k, c) in terms {
                let e = bilinear[*k].entry((i, j)).or_insert_with(Rat::zero);
                *e += &half * c;
                let e = bilinear[*k].entry((j, i)).or_insert_with(Rat::zero);
                *e -= &half * c;
            }
        }

        // (1/12)[x,[x,y]] − (1/12)[y,[x,y]]: expand through intermediate m.
        for p in 0..d {
            for i in 0..d {
                for l in 0..d {
                    for m in 0..d {
                        let inner = self.constant(i, l, m);
                        if inner.is_zero() {
                            continue;
                        }
                        for k in 0..d {
                            let outer = self.constant(p, m, k);
                            if outer.is_zero() {
                                continue;
                            }
                            let coeff = &twelfth * &inner * &outer;
                            let e = cubic_xxy[k]
                                .entry((p, i, l))
                                .or_insert_with(Rat::zero);
                            *e += &coeff;
                            let e = cubic_xyy[k]
                                .entry((i, p, l))
                                .or_insert_with(Rat::zero);
                            *e -= &coeff;
                        }
                    }
                }
            }
        }
        for m in bilinear.iter_mut() {
            m.retain(|_, v| !v.is_zero());
        }
        for maps in [&mut cubic_xxy, &mut cubic_xyy] {
            for m in maps.iter_mut() {
                m.retain(|_, v| !v.is_zero());
            }
        }
        MultiplicationForms { bilinear, cubic_xxy, cubic_xyy }
    }
}

impl MultiplicationForms {
    /// Evaluate the extracted formula; must agree with BCH exactly.
    pub fn eval(&self, x: &[Rat], y: &[Rat]) -> Coords {
        let d = self.bilinear.len();
        (0..d)
            .map(|k| {
                let mut acc = &x[k] + &y[k];
                for ((i, j), c) in &self.bilinear[k] {
                    acc += c * &x[*i] * &y[*j];
                }
                for ((p, i, l), c) in &self.cubic_xxy[k] {
                    acc += c * &x[*p] * &x[*i] * &y[*l];
                }
                for ((i, p, l), c) in &self.cubic_xyy[k] {
                    acc += c * &x[*i] * &y[*p] * &y[*l];
                }
                acc
            })
            .collect()
    }

    /// All form coefficients are integers (expected under 12-divisibility).
    pub fn all_integral(&self) -> bool {
        let int = |m: &BTreeMap<(usize, usize), Rat>| m.values().all(|c| c.denom().is_one());
        let int3 =
            |m: &BTreeMap<(usize, usize, usize), Rat>| m.values().all(|c| c.denom().is_one());
        self.bilinear.iter().all(int)
            && self.cubic_xxy.iter().all(int3)
            && self.cubic_xyy.iter().all(int3)
    }

    /// First `d1` coordinates carry no forms at all (they just add).
    pub fn first_coordinates_add(&self, d1: usize) -> bool {
        (0..d1).all(|k| {
            self.bilinear[k].is_empty()
                && self.cubic_xxy[k].is_empty()
                && self.cubic_xyy[k].is_empty()
        })
    }

    /// The bilinear forms of the `log G₂` coordinates vanish on the
    /// `log G₂ × log G₂` box.
    pub fn box_vanishes(&self, d1: usize, d2: usize) -> bool {
        (d1..d2).all(|k| {
            self.bilinear[k]
                .keys()
                .all(|&(i, j)| i < d1 || j < d1)
        })
    }
}

// ---------------------------------------------------------------------------
// Lattice reduction and rescaling
// ---------------------------------------------------------------------------

/// Result of reducing a point into the fundamental box.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeReduction {
    /// `γ ∈ Γ`, in first-kind coordinates (certified integral).
    pub gamma: Coords,
    /// Second-kind coordinates of `γ` (integers by construction).
    pub gamma_second_kind: Vec<BigInt>,
    /// `p·γ`, with every coordinate in `[−1/2, 1/2)`.
    pub boxed: Coords,
}

impl NilAlgebra {
    /// Reduce `p` modulo `Γ`: peel one Mal'cev element at a time, right to
    /// the fundamental box. Requires structure constants in `12Z`, which is
    /// what makes `ψ_exp(Γ) = Z^d` and the integrality certificate exact.
    pub fn reduce_to_lattice(&self, p: &[Rat]) -> Result<LatticeReduction, NilpotentError> {
        if !self.is_twelve_divisible() {
            return Err(NilpotentError::NotTwelveDivisible);
        }
        let half = ratmod::rat(1, 2);
        let mut q = p.to_vec();
        let mut gamma = alloc::vec![Rat::zero(); self.dim];
        let mut gamma_second_kind = Vec::with_capacity(self.dim);
        for j in 0..self.dim {
            // Nearest integer, final coordinate in [−1/2, 1/2).
            let m = ratmod::floor_int(&(&q[j] + &half));
            let mut factor = alloc::vec![Rat::zero(); self.dim];
            factor[j] = -Rat::from_integer(m.clone());
            q = self.bch(&q, &factor);
            gamma = self.bch(&gamma, &factor);
            gamma_second_kind.push(-m);
            debug_assert!(q[j] >= -half.clone() && q[j] < half);
        }
        // Certificate: γ has integer first-kind coordinates.
        if gamma.iter().any(|c| !c.denom().is_one()) {
            return Err(NilpotentError::BadStructure(String::from(
                "lattice element failed integrality certificate",
            )));
        }
        Ok(LatticeReduction { gamma, gamma_second_kind, boxed: q })
    }

    /// Rescale the Mal'cev basis by `R = 12·lcm(1..=M)·K`: the new
    /// structure constants `R·c_{ijk}` are integers divisible by `12K`.
    pub fn rescale_basis(&self, k_div: u64, m_height: u64) -> Result<NilAlgebra, NilpotentError> {
        for (_, _, _, c) in self.constants() {
            let h = c.numer().abs().max(c.denom().clone());
            if h > BigInt::from(m_height) {
                return Err(NilpotentError::HeightExceeded { bound: m_height });
            }
        }
        let mut lcm = BigInt::one();
        for v in 1..=m_height.max(1) {
            lcm = lcm.lcm(&BigInt::from(v));
        }
        let r = Rat::from_integer(BigInt::from(12) * lcm * BigInt::from(k_div));
        let entries: Vec<(usize, usize, usize, Rat)> = self
            .constants()
            .map(|(i, j, k, c)| (i, j, k, c * &r))
            .collect();
        let scaled = NilAlgebra::new(self.dim, self.degree, self.d1, self.d2, &entries)?;
        // Verified divisibility, not just construction.
        let twelve_k = BigInt::from(12) * BigInt::from(k_div);
        for (_, _, _, c) in scaled.constants() {
            if !c.denom().is_one() || !(c.numer() % &twelve_k).is_zero() {
                return Err(NilpotentError::BadStructure(String::from(
                    "rescaled constant failed divisibility check",
                )));
            }
        }
        Ok(scaled)
    }
}

// ---------------------------------------------------------------------------
// Polynomial sequences
// ---------------------------------------------------------------------------

/// `g(n) = g₁ⁿ g₂^{C(n,2)} g₃^{C(n,3)}` stored through the logs of its
/// Taylor coefficients, respecting the filtration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolySeq3 {
    pub log_g1: Coords,
    pub log_g2: Coords,
    pub log_g3: Coords,
}

impl PolySeq3 {
    pub fn new(
        alg: &NilAlgebra,
        log_g1: Coords,
        log_g2: Coords,
        log_g3: Coords,
    ) -> Result<Self, NilpotentError> {
        let (d1, d2, _) = alg.filtration();
        if log_g2[..d1].iter().any(|c| !c.is_zero()) {
            return Err(NilpotentError::BadSupport(String::from(
                "log g2 must be supported on log G_2",
            )));
        }
        if log_g3[..d2].iter().any(|c| !c.is_zero()) {
            return Err(NilpotentError::BadSupport(String::from(
                "log g3 must be supported on log G_3",
            )));
        }
        Ok(Self { log_g1, log_g2, log_g3 })
    }
}

/// Taylor logarithm of the sequence:
/// `log g(n) = n·log g₁ + C(n,2)·log g₂ + (n/2)C(n,2)·[log g₁, log g₂]
///  + C(n,3)·log g₃`, exact in rationals.
pub fn poly_seq_log(alg: &NilAlgebra, seq: &PolySeq3, n: i64) -> Coords {
    let n_rat = ratmod::rat_int(n);
    let binom2 = ratmod::rat_int(n) * ratmod::rat_int(n - 1) / ratmod::rat_int(2);
    let binom3 = ratmod::rat_int(n) * ratmod::rat_int(n - 1) * ratmod::rat_int(n - 2)
        / ratmod::rat_int(6);
    let bracket = alg.bracket(&seq.log_g1, &seq.log_g2);
    let half_n_binom2 = &n_rat / ratmod::rat_int(2) * &binom2;
    (0..alg.dim())
        .map(|k| {
            &n_rat * &seq.log_g1[k]
                + &binom2 * &seq.log_g2[k]
                + &half_n_binom2 * &bracket[k]
                + &binom3 * &seq.log_g3[k]
        })
        .collect()
}

/// The iterated-product oracle: `g₁ⁿ ∗ g₂^{C(n,2)} ∗ g₃^{C(n,3)}` by BCH.
pub fn poly_seq_product(alg: &NilAlgebra, seq: &PolySeq3, n: i64) -> Coords {
    let binom2 = BigInt::from(n) * BigInt::from(n - 1) / BigInt::from(2);
    let binom3 = BigInt::from(n) * BigInt::from(n - 1) * BigInt::from(n - 2) / BigInt::from(6);
    let a = alg.power(&seq.log_g1, &BigInt::from(n));
    let b = alg.power(&seq.log_g2, &binom2);
    let c = alg.power(&seq.log_g3, &binom3);
    alg.bch(&alg.bch(&a, &b), &c)
}

// ---------------------------------------------------------------------------
// Torus Fourier approximation
// ---------------------------------------------------------------------------

/// A certified trigonometric approximation on `(R/Z)^d`.
#[derive(Debug, Clone)]
pub struct TorusApprox {
    /// `(frequency vector, coefficient)` pairs, Fejér-attenuated.
    pub coefficients: Vec<(Vec<i64>, Complex64)>,
    /// Certified bound on the continuum sup error.
    pub sup_error: f64,
    /// Largest error observed on the certification grid.
    pub grid_sup_error: f64,
    /// `Σ|c_ξ|`.
    pub coeff_abs_sum: f64,
    pub cutoff: u64,
}

impl TorusApprox {
    pub fn eval(&self, x: &[f64]) -> Complex64 {
        let mut acc = Complex64::zero();
        for (xi, c) in &self.coefficients {
            let angle: f64 = xi.iter().zip(x).map(|(&k, &v)| k as f64 * v).sum();
            acc += c * crate::cyclic::phase(angle);
        }
        acc
    }
}

/// Fejér-smoothed Fourier approximation of a Lipschitz `F` on `(R/Z)^d`,
/// `d ≤ 2`, certified on a grid fine enough that the grid sup plus the
/// Lipschitz slack bounds the continuum sup by `eps`. The cutoff is raised
/// once on failure, then the call aborts.
pub fn fourier_approx_torus(
    f: &dyn Fn(&[f64]) -> Complex64,
    d: usize,
    lipschitz: f64,
    eps: f64,
) -> Result<TorusApprox, NilpotentError> {
    assert!(d == 1 || d == 2, "torus approximation supports d <= 2");
    let base_cutoff = (2.0 * d as f64 * lipschitz / eps).ceil().max(4.0) as u64;
    let mut cutoff = base_cutoff;
    for _attempt in 0..2 {
        let approx = fejer_approx(f, d, cutoff)?;
        // Continuum certification: for x within h/2 of a grid point g (max
        // metric), |F−A|(x) ≤ |F−A|(g) + (L + L_A)·h/2.
        let grid_n = (4 * (cutoff + 1)).max(64);
        let h = 1.0 / grid_n as f64;
        let l_approx: f64 = approx
            .coefficients
            .iter()
            .map(|(xi, c)| {
                let l1: f64 = xi.iter().map(|&k| k.abs() as f64).sum();
                2.0 * core::f64::consts::PI * c.norm() * l1
            })
            .sum();
        let mut grid_sup = 0.0f64;
        let mut point = alloc::vec![0u64; d];
        'grid: loop {
            let x: Vec<f64> = point.iter().map(|&i| i as f64 * h).collect();
            grid_sup = grid_sup.max((f(&x) - approx.eval(&x)).norm());
            let mut i = 0;
            loop {
                if i == d {
                    break 'grid;
                }
                point[i] += 1;
                if point[i] < grid_n {
                    break;
                }
                point[i] = 0;
                i += 1;
            }
        }
        let certified = grid_sup + (lipschitz + l_approx) * h / 2.0;
        if certified <= eps {
            return Ok(TorusApprox {
                coefficients: approx.coefficients,
                sup_error: certified,
                grid_sup_error: grid_sup,
                coeff_abs_sum: approx.coeff_abs_sum,
                cutoff,
            });
        }
        cutoff *= 2;
    }
    Err(NilpotentError::CertificationFailed { achieved: cutoff / 2 })
}

struct RawApprox {
    coefficients: Vec<(Vec<i64>, Complex64)>,
    coeff_abs_sum: f64,
}

impl RawApprox {
    fn eval(&self, x: &[f64]) -> Complex64 {
        let mut acc = Complex64::zero();
        for (xi, c) in &self.coefficients {
            let angle: f64 = xi.iter().zip(x).map(|(&k, &v)| k as f64 * v).sum();
            acc += c * crate::cyclic::phase(angle);
        }
        acc
    }
}

/// DFT on a sampling grid with Fejér weights, separable over dimensions.
fn fejer_approx(
    f: &dyn Fn(&[f64]) -> Complex64,
    d: usize,
    cutoff: u64,
) -> Result<RawApprox, NilpotentError> {
    let m = cutoff as i64;
    let n = (4 * (cutoff + 1)).max(64) as usize;
    let freqs: Vec<i64> = (-m..=m).collect();
    let work = (n as u128).pow(d as u32) * freqs.len() as u128 * d as u128;
    if work > 2_000_000_000 {
        return Err(NilpotentError::WorkCapExceeded { required: work, cap: 2_000_000_000 });
    }

    let fejer = |k: i64| 1.0 - k.abs() as f64 / (m + 1) as f64;
    let mut coefficients = Vec::new();
    let mut sum = 0.0;
    match d {
        1 => {
            let samples: Vec<Complex64> =
                (0..n).map(|i| f(&[i as f64 / n as f64])).collect();
            for &k in &freqs {
                let mut acc = Complex64::zero();
                for (i, s) in samples.iter().enumerate() {
                    acc += s * crate::cyclic::phase(-(k as f64) * i as f64 / n as f64);
                }
                let c = acc / n as f64 * fejer(k);
                if c.norm() > 1e-15 {
                    sum += c.norm();
                    coefficients.push((alloc::vec![k], c));
                }
            }
        }
        _ => {
            let samples: Vec<Vec<Complex64>> = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| f(&[i as f64 / n as f64, j as f64 / n as f64]))
                        .collect()
                })
                .collect();
            // Pass 1: transform the second coordinate.
            let mut partial: Vec<Vec<Complex64>> =
                alloc::vec![alloc::vec![Complex64::zero(); freqs.len()]; n];
            for i in 0..n {
                for (kj_idx, &kj) in freqs.iter().enumerate() {
                    let mut acc = Complex64::zero();
                    for (j, s) in samples[i].iter().enumerate() {
                        acc += s * crate::cyclic::phase(-(kj as f64) * j as f64 / n as f64);
                    }
                    partial[i][kj_idx] = acc / n as f64;
                }
            }
            // Pass 2: transform the first coordinate.
            for &ki in &freqs {
                for (kj_idx, &kj) in freqs.iter().enumerate() {
                    let mut acc = Complex64::zero();
                    for (i, row) in partial.iter().enumerate() {
                        acc += row[kj_idx]
                            * crate::cyclic::phase(-(ki as f64) * i as f64 / n as f64);
                    }
                    let c = acc / n as f64 * fejer(ki) * fejer(kj);
                    if c.norm() > 1e-15 {
                        sum += c.norm();
                        coefficients.push((alloc::vec![ki, kj], c));
                    }
                }
            }
        }
    }
    Ok(RawApprox { coefficients, coeff_abs_sum: sum })
}

// ---------------------------------------------------------------------------
// Circle partition of unity
// ---------------------------------------------------------------------------

/// `m` smooth bumps `χ_j` on `R/Z`, `supp(χ_j) ⊆ [j/m, (j+2)/m) mod 1`,
/// summing identically to 1.
#[derive(Debug, Clone, Copy)]
pub struct CirclePartition {
    pub m: u64,
}

fn smooth_step(t: f64) -> f64 {
    // C^∞ transition: 0 on t ≤ 0, 1 on t ≥ 1.
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

/// Build the partition; `m ≥ 2`.
pub fn circle_partition_of_unity(m: u64) -> CirclePartition {
    assert!(m >= 2, "need at least two bumps");
    CirclePartition { m }
}

impl CirclePartition {
    /// `χ_j(x)`.
    pub fn eval(&self, j: u64, x: f64) -> f64 {
        let m = self.m;
        let u = (x - x.floor()) * m as f64; // position in window units, [0, m)
        let cell = u.floor() as u64 % m;
        let t = u - u.floor();
        if cell == j % m {
            smooth_step(t)
        } else if (cell + m - 1) % m == j % m {
            1.0 - smooth_step(t)
        } else {
            0.0
        }
    }

    /// `Σ_j χ_j(x)`; identically 1 by construction, exposed for checks.
    pub fn sum(&self, x: f64) -> f64 {
        (0..self.m).map(|j| self.eval(j, x)).sum()
    }
}
