//! Factors (partitions) of `Z/NZ`, conditional-expectation projections,
//! and the energy-increment loop.
//!
//! A factor stores a dense `residue → atom id` map with atoms labeled in
//! order of first appearance, so joins, projections, and tie-breaking are
//! all deterministic. Phase factors `B_{φ,K}` are built from exact
//! rational phase values with a fixed high-precision offset (`√2/(10K)`
//! truncated to 50 digits) standing in for the paper-style irrational
//! shift; a value landing exactly on a window boundary despite the offset
//! is a fatal configuration error, never a silent re-perturbation.
//!
//! The cubic-correlation search is a desk-scale stand-in for the `U⁴`
//! inverse theorem: it scans a configured grid of global cubic phases and
//! low-rank Bohr restrictions. Exhaustion is a normal, reported outcome —
//! it is *not* evidence that the function is uniform.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
use num_traits::Zero;

use crate::bohr::{bohr_member, BohrSpec};
use crate::cyclic::{phase_rat, CyclicFunction};
#[cfg(test)]
use crate::cyclic::inner_product;
use crate::gowers;
use crate::localpoly::PartialPhase;
use crate::ratmod::{self, Rat};

#[derive(Debug, Clone, PartialEq)]
pub enum FactorsError {
    ModulusMismatch { left: u64, right: u64 },
    /// A phase value sat exactly on a window boundary despite the offset.
    BoundaryCollision { x: u64 },
    /// The offset must be smaller than half a window.
    OffsetTooLarge,
    /// Resolution must be at least 1.
    ResolutionZero,
    /// Bohr machinery failed while realizing a witness factor.
    Bohr(crate::bohr::BohrError),
    Cyclic(crate::cyclic::CyclicError),
}

impl fmt::Display for FactorsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactorsError::ModulusMismatch { left, right } => {
                write!(f, "modulus mismatch: {left} vs {right}")
            }
            FactorsError::BoundaryCollision { x } => {
                write!(f, "phase value at x = {x} sits exactly on a window boundary")
            }
            FactorsError::OffsetTooLarge => write!(f, "offset must be < 1/(2K)"),
            FactorsError::ResolutionZero => write!(f, "resolution K must be >= 1"),
            FactorsError::Bohr(e) => write!(f, "bohr error: {e}"),
            FactorsError::Cyclic(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for FactorsError {}

impl From<crate::bohr::BohrError> for FactorsError {
    fn from(e: crate::bohr::BohrError) -> Self {
        FactorsError::Bohr(e)
    }
}

impl From<crate::cyclic::CyclicError> for FactorsError {
    fn from(e: crate::cyclic::CyclicError) -> Self {
        FactorsError::Cyclic(e)
    }
}

/// A partition of `Z/NZ` into nonempty atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factor {
    modulus: u64,
    atom_of: Vec<u32>,
    atom_sizes: Vec<u64>,
}

impl Factor {
    /// Canonicalize an arbitrary labeling: atoms are renumbered in order of
    /// first appearance, empty labels disappear.
    pub fn from_labels<L: Ord + Clone>(labels: &[L]) -> Self {
        let mut ids: BTreeMap<L, u32> = BTreeMap::new();
        let mut next = 0u32;
        let mut atom_of = Vec::with_capacity(labels.len());
        let mut atom_sizes = Vec::new();
        for l in labels {
            let id = match ids.get(l) {
                Some(&id) => id,
                None => {
                    ids.insert(l.clone(), next);
                    atom_sizes.push(0);
                    next += 1;
                    next - 1
                }
            };
            atom_of.push(id);
            atom_sizes[id as usize] += 1;
        }
        Self { modulus: labels.len() as u64, atom_of, atom_sizes }
    }

    /// The one-atom factor.
    pub fn trivial(modulus: u64) -> Self {
        Self {
            modulus,
            atom_of: alloc::vec![0; modulus as usize],
            atom_sizes: alloc::vec![modulus],
        }
    }

    /// The partition into singletons.
    pub fn discrete(modulus: u64) -> Self {
        Self {
            modulus,
            atom_of: (0..modulus as u32).collect(),
            atom_sizes: alloc::vec![1; modulus as usize],
        }
    }

    /// Two atoms: the given set and its complement (either may be absent).
    pub fn split(modulus: u64, set: &[u64]) -> Self {
        let mut labels = alloc::vec![0u8; modulus as usize];
        for &x in set {
            labels[(x % modulus) as usize] = 1;
        }
        // Order of first appearance keeps ids deterministic.
        Self::from_labels(&labels)
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn atom_count(&self) -> usize {
        self.atom_sizes.len()
    }

    pub fn atom_of(&self, x: u64) -> u32 {
        self.atom_of[(x % self.modulus) as usize]
    }

    pub fn atom_size(&self, id: u32) -> u64 {
        self.atom_sizes[id as usize]
    }

    pub fn atom_members(&self, id: u32) -> Vec<u64> {
        (0..self.modulus).filter(|&x| self.atom_of[x as usize] == id).collect()
    }

    /// True when every atom of `self` is contained in an atom of `other`.
    pub fn refines(&self, other: &Factor) -> bool {
        if self.modulus != other.modulus {
            return false;
        }
        let mut image: Vec<Option<u32>> = alloc::vec![None; self.atom_count()];
        for x in 0..self.modulus as usize {
            let a = self.atom_of[x] as usize;
            let b = other.atom_of[x];
            match image[a] {
                None => image[a] = Some(b),
                Some(prev) if prev != b => return false,
                _ => {}
            }
        }
        true
    }
}

/// Common refinement `a ∨ b`: atoms are the nonempty intersections.
pub fn join(a: &Factor, b: &Factor) -> Result<Factor, FactorsError> {
    if a.modulus != b.modulus {
        return Err(FactorsError::ModulusMismatch { left: a.modulus, right: b.modulus });
    }
    let labels: Vec<(u32, u32)> =
        (0..a.modulus as usize).map(|x| (a.atom_of[x], b.atom_of[x])).collect();
    Ok(Factor::from_labels(&labels))
}

/// Conditional expectation `Π_B f(x) = E_{y ∈ B(x)} f(y)`.
pub fn project(f: &CyclicFunction, b: &Factor) -> Result<CyclicFunction, FactorsError> {
    if f.modulus() as u64 != b.modulus {
        return Err(FactorsError::ModulusMismatch {
            left: f.modulus() as u64,
            right: b.modulus,
        });
    }
    let mut sums = alloc::vec![Complex64::zero(); b.atom_count()];
    for x in 0..f.modulus() {
        sums[b.atom_of[x] as usize] += f.values()[x];
    }
    for (s, &size) in sums.iter_mut().zip(&b.atom_sizes) {
        *s /= size as f64;
    }
    Ok(CyclicFunction::from_fn(f.modulus(), |x| sums[b.atom_of[x] as usize]))
}

/// Per-atom means of a real-valued function.
pub fn atom_means(f: &CyclicFunction, b: &Factor) -> Result<Vec<f64>, FactorsError> {
    if f.modulus() as u64 != b.modulus {
        return Err(FactorsError::ModulusMismatch {
            left: f.modulus() as u64,
            right: b.modulus,
        });
    }
    let mut sums = alloc::vec![0.0; b.atom_count()];
    for x in 0..f.modulus() {
        sums[b.atom_of[x] as usize] += f.values()[x].re;
    }
    Ok(sums.iter().zip(&b.atom_sizes).map(|(s, &n)| s / n as f64).collect())
}

/// Phase factor input: a partial phase, a resolution, and the
/// boundary-dodging offset (must be `< 1/(2K)`).
#[derive(Debug, Clone)]
pub struct PhaseFactorSpec<'a> {
    pub phase: &'a PartialPhase,
    pub resolution: u64,
    pub offset: Rat,
}

impl<'a> PhaseFactorSpec<'a> {
    /// Standard spec with offset `√2/(10K)` truncated to 50 digits.
    pub fn standard(phase: &'a PartialPhase, resolution: u64) -> Self {
        let offset = ratmod::sqrt2_50() / ratmod::rat_int(10 * resolution as i64);
        Self { phase, resolution, offset }
    }
}

/// `B_{φ,K}`: window atoms `{x : ‖φ(x)+offset − j/K‖ ≤ 1/(2K)}` for
/// `0 ≤ j < K`, plus the off-domain atom; empty windows disappear.
pub fn build_phase_factor(spec: &PhaseFactorSpec<'_>) -> Result<Factor, FactorsError> {
    let k = spec.resolution;
    if k == 0 {
        return Err(FactorsError::ResolutionZero);
    }
    let half_window = ratmod::rat(1, 2 * k as i64);
    if spec.offset >= half_window || spec.offset <= -half_window.clone() {
        return Err(FactorsError::OffsetTooLarge);
    }
    let n = spec.phase.modulus();
    let mut labels: Vec<i64> = alloc::vec![-1; n as usize];
    for (&x, value) in spec.phase.entries() {
        let v = ratmod::frac(&(value + &spec.offset));
        // Nearest window center j/K; exact distance comparison.
        let j = ratmod::floor_int(&(&v * ratmod::rat_int(k as i64) + ratmod::rat(1, 2)));
        let j_mod: i64 = {
            use num_traits::ToPrimitive;
            (j.to_i64().expect("j fits") % k as i64 + k as i64) % k as i64
        };
        let dist = ratmod::circle_norm(&(&v - ratmod::rat(j_mod, k as i64)));
        if dist == half_window {
            return Err(FactorsError::BoundaryCollision { x });
        }
        debug_assert!(dist < half_window);
        labels[x as usize] = j_mod;
    }
    Ok(Factor::from_labels(&labels))
}

// ---------------------------------------------------------------------------
// Correlation-search oracle
// ---------------------------------------------------------------------------

/// Search-space configuration for the cubic-correlation oracle.
#[derive(Debug, Clone)]
pub struct OracleConfig {
    /// Maximum number of `(S, y, coefficients)` candidates tried.
    pub budget: u64,
    /// Minimum correlation for a witness to count.
    pub threshold: f64,
    /// Grid size per cubic coefficient (values `⌊jN/G⌋`, `j < G`).
    pub coeff_grid: u64,
    /// Candidate Bohr frequencies (residues mod N).
    pub frequencies: Vec<u64>,
    /// Number of shift candidates (`⌊jN/S⌋`, `j < S`); 0 means centered only.
    pub shift_grid: u64,
    /// Maximum Bohr rank searched (0, 1, or 2).
    pub rank_cap: usize,
    /// Bohr radius for restricted candidates.
    pub bohr_radius: Rat,
}

impl OracleConfig {
    pub fn desk_default(threshold: f64) -> Self {
        // Radius 1/8 keeps K·ρ ≥ 4 at desk resolutions, so restricted
        // witnesses survive the window trimming of the factor build.
        Self {
            budget: 200_000,
            threshold,
            coeff_grid: 16,
            frequencies: Vec::new(),
            shift_grid: 8,
            rank_cap: 1,
            bohr_radius: ratmod::rat(1, 8),
        }
    }
}

/// A located correlation: `|E_t 1_{t ∈ y+B} f(t) e(−φ(t))| = correlation`
/// for the global cubic `φ(t) = (a t³ + b t² + c t)/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationWitness {
    pub modulus: u64,
    /// Frequencies of the Bohr restriction (empty for the full space).
    pub frequencies: Vec<u64>,
    /// The translate `y` of the Bohr set.
    pub shift: u64,
    pub radius: Rat,
    /// Cubic coefficients `(a, b, c)` as residues.
    pub cubic: [u64; 3],
    pub correlation: f64,
}

impl CorrelationWitness {
    /// The shifted Bohr set this witness restricts to.
    pub fn bohr_spec(&self) -> Result<BohrSpec, crate::bohr::BohrError> {
        BohrSpec::shifted(self.modulus, &self.frequencies, self.radius.clone(), self.shift)
    }

    /// The cubic phase as an exact rational partial phase on `domain`.
    pub fn cubic_phase(&self, domain: impl IntoIterator<Item = u64>) -> PartialPhase {
        let n = self.modulus;
        PartialPhase::from_fn(n, domain, |t| {
            let t = t as u128;
            let [a, b, c] = self.cubic;
            let v = (a as u128 * mulmod3(t, n) % n as u128
                + b as u128 * (t * t % n as u128) % n as u128
                + c as u128 * t % n as u128)
                % n as u128;
            ratmod::rat(v as i64, n as i64)
        })
    }

    /// Recompute the correlation from the stored fields.
    pub fn recompute(&self, f: &CyclicFunction) -> Result<f64, FactorsError> {
        let spec = self.bohr_spec()?;
        let n = self.modulus;
        let mut acc = Complex64::zero();
        for t in 0..n {
            if bohr_member(t, &spec) {
                let phi = self.cubic_phase([t]);
                acc += f.values()[t as usize] * phase_rat(phi.value(t).expect("set")).conj();
            }
        }
        Ok((acc / n as f64).norm())
    }
}

fn mulmod3(t: u128, n: u64) -> u128 {
    t * t % n as u128 * t % n as u128
}

fn coeff_grid_values(n: u64, grid: u64) -> Vec<u64> {
    let g = grid.min(n).max(1);
    let mut vals: Vec<u64> = (0..g).map(|j| j * n / g).collect();
    vals.dedup();
    vals
}

/// Best witness with correlation at least the configured threshold, or
/// `None` if the budget is exhausted first. `None` is *not* evidence of
/// `U⁴`-uniformity; the search space is a configured grid.
pub fn cubic_correlation_search(
    f: &CyclicFunction,
    cfg: &OracleConfig,
) -> Option<CorrelationWitness> {
    best_correlation(f, cfg).filter(|w| w.correlation >= cfg.threshold)
}

/// Best witness found within the budget regardless of threshold.
pub fn best_correlation(f: &CyclicFunction, cfg: &OracleConfig) -> Option<CorrelationWitness> {
    let n = f.modulus() as u64;
    let coeffs = coeff_grid_values(n, cfg.coeff_grid);
    let shifts: Vec<u64> = if cfg.shift_grid == 0 {
        alloc::vec![0]
    } else {
        let g = cfg.shift_grid.min(n);
        let mut v: Vec<u64> = (0..g).map(|j| j * n / g).collect();
        v.dedup();
        v
    };

    // Candidate Bohr restrictions in deterministic order: rank 0, then
    // rank 1 over configured frequencies, then rank 2 over pairs.
    let mut restrictions: Vec<(Vec<u64>, u64)> = alloc::vec![(Vec::new(), 0)];
    if cfg.rank_cap >= 1 {
        for &xi in &cfg.frequencies {
            for &y in &shifts {
                restrictions.push((alloc::vec![xi], y));
            }
        }
    }
    if cfg.rank_cap >= 2 {
        for (i, &xi) in cfg.frequencies.iter().enumerate() {
            for &xj in cfg.frequencies.iter().skip(i + 1) {
                for &y in &shifts {
                    restrictions.push((alloc::vec![xi, xj], y));
                }
            }
        }
    }

    let mut tried = 0u64;
    let mut best: Option<CorrelationWitness> = None;
    // Exact-index phase table e(−j/N); shared across all candidates.
    let roots: Vec<Complex64> =
        (0..n).map(|j| crate::cyclic::phase(-(j as f64) / n as f64)).collect();

    'outer: for (freqs, y) in restrictions {
        let members: Vec<u64> = if freqs.is_empty() {
            (0..n).collect()
        } else {
            let spec = BohrSpec::shifted(n, &freqs, cfg.bohr_radius.clone(), y).ok()?;
            (0..n).filter(|&t| bohr_member(t, &spec)).collect()
        };
        if members.is_empty() {
            continue;
        }
        // Precompute member values and monomials once per restriction;
        // exact zeros of f contribute nothing and are skipped.
        let data: Vec<(Complex64, u64, u64, u64)> = members
            .iter()
            .filter(|&&t| f.values()[t as usize] != Complex64::zero())
            .map(|&t| {
                let t128 = t as u128;
                (
                    f.values()[t as usize],
                    (mulmod3(t128, n)) as u64,
                    (t128 * t128 % n as u128) as u64,
                    t,
                )
            })
            .collect();
        for &a in &coeffs {
            for &b in &coeffs {
                for &c in &coeffs {
                    if tried >= cfg.budget {
                        break 'outer;
                    }
                    tried += 1;
                    let mut acc = Complex64::zero();
                    for &(fv, t3, t2, t1) in &data {
                        let angle = (a as u128 * t3 as u128
                            + b as u128 * t2 as u128
                            + c as u128 * t1 as u128)
                            % n as u128;
                        acc += fv * roots[angle as usize];
                    }
                    let corr = (acc / n as f64).norm();
                    let better = match &best {
                        None => true,
                        // Strict improvement only: earlier candidates win ties,
                        // and enumeration order is the lexicographic encoding.
                        Some(w) => corr > w.correlation,
                    };
                    if better {
                        best = Some(CorrelationWitness {
                            modulus: n,
                            frequencies: freqs.clone(),
                            shift: y,
                            radius: cfg.bohr_radius.clone(),
                            cubic: [a, b, c],
                            correlation: corr,
                        });
                    }
                }
            }
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Witness factors and the Koopman–von Neumann loop
// ---------------------------------------------------------------------------

/// The factor realized from a witness: linear window factors for each Bohr
/// frequency, joined with the resolution-K factor of the cubic phase
/// restricted to a union of linear atoms.
#[derive(Debug, Clone)]
pub struct WitnessFactor {
    pub factor: Factor,
    pub linear_join: Factor,
    /// The resolution-K factor of the cubic phase alone.
    pub cubic_factor: Factor,
    /// Domain of the cubic phase: the trimmed set inside `y + B`, a union
    /// of atoms of `linear_join`.
    pub cubic_domain: Vec<u64>,
}

/// Realize the complexity-`(rank, 1)` factor of a witness at resolution K.
pub fn witness_factor(
    witness: &CorrelationWitness,
    resolution: u64,
) -> Result<WitnessFactor, FactorsError> {
    let n = witness.modulus;
    let k = resolution;
    if k == 0 {
        return Err(FactorsError::ResolutionZero);
    }
    let offset = ratmod::sqrt2_50() / ratmod::rat_int(10 * k as i64);

    // Linear phases φ_ξ(x) = ξ(x−y)/N + offset on all of Z/NZ.
    let mut linear_join = Factor::trivial(n);
    for &xi in &witness.frequencies {
        let phase = PartialPhase::from_fn(n, 0..n, |x| {
            ratmod::rat(
                ((xi as u128 * ((x + n - witness.shift % n) % n) as u128) % n as u128) as i64,
                n as i64,
            )
        });
        let spec = PhaseFactorSpec { phase: &phase, resolution: k, offset: offset.clone() };
        let lin = build_phase_factor(&spec)?;
        linear_join = join(&linear_join, &lin)?;
    }

    // Trimmed host set: ‖ξ(x−y)/N + offset‖ ≤ (2⌊Kρ⌋−1)/(2K) for all ξ.
    // This is a union of atoms of the linear join, and sits inside y + B.
    let m = ratmod::floor_int(&(&witness.radius * ratmod::rat_int(k as i64)));
    use num_traits::ToPrimitive;
    let m = m.to_i64().unwrap_or(0);
    let cubic_domain: Vec<u64> = if witness.frequencies.is_empty() {
        (0..n).collect()
    } else if m < 1 {
        Vec::new()
    } else {
        let bound = ratmod::rat(2 * m - 1, 2 * k as i64);
        (0..n)
            .filter(|&x| {
                witness.frequencies.iter().all(|&xi| {
                    let v = ratmod::rat(
                        ((xi as u128 * ((x + n - witness.shift % n) % n) as u128) % n as u128)
                            as i64,
                        n as i64,
                    ) + &offset;
                    ratmod::circle_norm(&v) <= bound
                })
            })
            .collect()
    };

    // Cubic phase (plus the same offset, inside build_phase_factor) on the
    // trimmed domain.
    let cubic = witness.cubic_phase(cubic_domain.iter().copied());
    let spec = PhaseFactorSpec { phase: &cubic, resolution: k, offset };
    let cubic_factor = build_phase_factor(&spec)?;
    let factor = join(&linear_join, &cubic_factor)?;

    debug_assert!(factor.refines(&linear_join));
    Ok(WitnessFactor { factor, linear_join, cubic_factor, cubic_domain })
}

/// Caps for the energy-increment loop.
#[derive(Debug, Clone)]
pub struct KvnCaps {
    pub max_iterations: u32,
    pub max_atoms: usize,
    /// Tuple budget for certifying `‖·‖_{U⁴}`; above it the certificate is
    /// skipped and recorded as such.
    pub u4_work_cap: u128,
    /// Resolution K of the factors built from witnesses.
    pub resolution: u64,
}

impl Default for KvnCaps {
    fn default() -> Self {
        Self {
            max_iterations: 16,
            max_atoms: 4096,
            u4_work_cap: gowers::DEFAULT_WORK_CAP,
            resolution: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum KvnTermination {
    /// `‖f − Π_B f‖_{U⁴} ≤ η`, certified.
    EtaReached { u4: f64 },
    /// The oracle produced nothing usable above the threshold. This is an
    /// outcome about the search space, not a uniformity certificate.
    OracleExhausted { best: Option<CorrelationWitness> },
    /// An iteration or atom cap stopped the loop.
    CapsHit { cap: &'static str },
}

/// One accepted refinement step.
#[derive(Debug, Clone)]
pub struct KvnStep {
    pub iteration: u32,
    /// `‖f − Π_B f‖_{U⁴}` before this step, when affordable.
    pub residual_u4: Option<f64>,
    pub witness: CorrelationWitness,
    /// `E|Π_{B'}(f − Π_B f)|`, the realized projected mass.
    pub realized_l1: f64,
    /// `‖Π_{B'}f‖² − ‖Π_B f‖²`; at least `realized_l1²` by Cauchy–Schwarz.
    pub energy_gain: f64,
    /// `‖Π_{B'}f‖²` after the step.
    pub energy: f64,
}

#[derive(Debug, Clone)]
pub struct KvnResult {
    pub factor: Factor,
    pub termination: KvnTermination,
    pub initial_energy: f64,
    pub steps: Vec<KvnStep>,
}

/// Koopman–von Neumann decomposition: refine the factor with oracle
/// witnesses until the residual is `U⁴`-small, the oracle runs dry, or a
/// cap is hit. A witness is accepted only when the *realized* projected
/// mass of the residual reaches the oracle threshold, which forces the
/// recorded energies to increase by at least `threshold²` per step.
pub fn kvn_decompose(
    f: &CyclicFunction,
    eta: f64,
    oracle: &OracleConfig,
    caps: &KvnCaps,
    initial: &Factor,
) -> Result<KvnResult, FactorsError> {
    let n = f.modulus();
    let mut factor = initial.clone();
    let mut energy = {
        let p = project(f, &factor)?;
        p.l2_norm().powi(2)
    };
    let initial_energy = energy;
    let mut steps: Vec<KvnStep> = Vec::new();

    for iteration in 0..=caps.max_iterations {
        let projected = project(f, &factor)?;
        let residual = f.sub(&projected)?;
        let u4_budget = (n as u128).saturating_pow(5);
        let residual_u4 = if u4_budget <= caps.u4_work_cap {
            Some(gowers::u_norm_with_cap(&residual, 4, caps.u4_work_cap).expect("within cap"))
        } else {
            None
        };
        if let Some(u4) = residual_u4 {
            if u4 <= eta {
                return Ok(KvnResult {
                    factor,
                    termination: KvnTermination::EtaReached { u4 },
                    initial_energy,
                    steps,
                });
            }
        }
        if iteration == caps.max_iterations {
            return Ok(KvnResult {
                factor,
                termination: KvnTermination::CapsHit { cap: "max_iterations" },
                initial_energy,
                steps,
            });
        }

        let witness = match cubic_correlation_search(&residual, oracle) {
            Some(w) => w,
            None => {
                let best = best_correlation(&residual, oracle);
                return Ok(KvnResult {
                    factor,
                    termination: KvnTermination::OracleExhausted { best },
                    initial_energy,
                    steps,
                });
            }
        };

        let wf = witness_factor(&witness, caps.resolution)?;
        let refined = join(&factor, &wf.factor)?;
        if refined.atom_count() > caps.max_atoms {
            return Ok(KvnResult {
                factor,
                termination: KvnTermination::CapsHit { cap: "max_atoms" },
                initial_energy,
                steps,
            });
        }
        // Realized projected mass of the residual after trimming losses.
        let realized = project(&residual, &refined)?.l1_norm();
        if realized < oracle.threshold {
            return Ok(KvnResult {
                factor,
                termination: KvnTermination::OracleExhausted { best: Some(witness) },
                initial_energy,
                steps,
            });
        }
        let new_energy = project(f, &refined)?.l2_norm().powi(2);
        let gain = new_energy - energy;
        // Pythagoras + Cauchy–Schwarz: gain = ‖Π_{B'}g‖₂² ≥ (E|Π_{B'}g|)².
        debug_assert!(gain >= realized * realized - 1e-12);
        steps.push(KvnStep {
            iteration,
            residual_u4,
            witness,
            realized_l1: realized,
            energy_gain: gain,
            energy: new_energy,
        });
        factor = refined;
        energy = new_energy;
    }
    unreachable!("loop returns from within");
}

/// The atom of `b` with maximal conditional mean among atoms of measure at
/// least `size_floor` and mean at least `(1+c′)δ`; ties go to the lowest
/// atom id. `None` is a normal outcome.
pub fn find_increment_atom(
    f: &CyclicFunction,
    b: &Factor,
    delta: f64,
    c_prime: f64,
    size_floor: f64,
) -> Result<Option<u32>, FactorsError> {
    let means = atom_means(f, b)?;
    let n = b.modulus() as f64;
    let needed = (1.0 + c_prime) * delta;
    let mut best: Option<(u32, f64)> = None;
    for (id, &mean) in means.iter().enumerate() {
        if (b.atom_size(id as u32) as f64) / n < size_floor || mean < needed {
            continue;
        }
        let better = match best {
            None => true,
            Some((_, m)) => mean > m,
        };
        if better {
            best = Some((id as u32, mean));
        }
    }
    Ok(best.map(|(id, _)| id))
}
