//! Partitioning progressions so that cubic phases become near-constant.
//!
//! The contract everywhere is *exact cover*: every operation outputs
//! progressions whose concatenated elements equal the input as a multiset.
//! Quantitative piece-count bounds are reported, not enforced; what is
//! enforced is the verified per-piece phase variation, checked by direct
//! scan since desk-scale pieces are small. Degenerate fallbacks to
//! length-1 pieces are always legal and keep the cover exact.

use alloc::vec::Vec;
use core::fmt;


use crate::cyclic::frac_norm;
use crate::ratmod::{self, Rat};
use crate::schmidt::{recurrence_search, SchmidtError};

#[derive(Debug, Clone, PartialEq)]
pub enum PartitionerError {
    /// Progression length exceeds the work cap.
    WorkCapExceeded { len: u64, cap: u64 },
    /// A window cut retained more than 7 runs: the variation precondition
    /// was violated (eps too large for the resolution).
    TooManyRuns { runs: usize },
    /// A produced piece failed its variation scan; indicates a bug or an
    /// unreasonable eps, never silently accepted.
    VariationExceeded { piece_base: i64, measured: f64, eps: f64 },
    /// Progressions must have nonzero step and positive length.
    Malformed,
    Recurrence(SchmidtError),
}

impl fmt::Display for PartitionerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartitionerError::WorkCapExceeded { len, cap } => {
                write!(f, "progression length {len} exceeds cap {cap}")
            }
            PartitionerError::TooManyRuns { runs } => {
                write!(f, "window cut retained {runs} runs (> 7)")
            }
            PartitionerError::VariationExceeded { piece_base, measured, eps } => {
                write!(f, "piece at {piece_base} has variation {measured} >= eps {eps}")
            }
            PartitionerError::Malformed => write!(f, "progression needs len >= 1, step != 0"),
            PartitionerError::Recurrence(e) => write!(f, "recurrence search failed: {e}"),
        }
    }
}

impl core::error::Error for PartitionerError {}

impl From<SchmidtError> for PartitionerError {
    fn from(e: SchmidtError) -> Self {
        PartitionerError::Recurrence(e)
    }
}

/// The arithmetic progression `{base + step·t : 0 ≤ t < len}` in `Z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Progression {
    pub base: i64,
    pub step: i64,
    pub len: u64,
}

impl Progression {
    pub fn new(base: i64, step: i64, len: u64) -> Result<Self, PartitionerError> {
        if len == 0 || step == 0 {
            return Err(PartitionerError::Malformed);
        }
        Ok(Self { base, step, len })
    }

    pub fn nth(&self, t: u64) -> i64 {
        self.base + self.step * t as i64
    }

    pub fn elements(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.len).map(move |t| self.nth(t))
    }

    /// Sub-progression at indices `start + stride·u`, `u < count`.
    fn sub(&self, start: u64, stride: u64, count: u64) -> Self {
        Self { base: self.nth(start), step: self.step * stride as i64, len: count }
    }
}

/// A cubic phase in a progression's own index:
/// `φ(base + step·n) = α n³ + β n² + γ n + κ (mod 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicPhaseOnProgression {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub kappa: f64,
}

impl CubicPhaseOnProgression {
    pub fn constant(kappa: f64) -> Self {
        Self { alpha: 0.0, beta: 0.0, gamma: 0.0, kappa }
    }

    /// Raw (unreduced) value at local index `n`.
    pub fn eval(&self, n: u64) -> f64 {
        let x = n as f64;
        ((self.alpha * x + self.beta) * x + self.gamma) * x + self.kappa
    }

    /// Reparametrize to `n = n0 + r·u` and reduce all coefficients to
    /// signed fractional parts (valid mod 1 since `u^j` are integers).
    fn shifted(&self, n0: u64, r: u64) -> Self {
        let n0 = n0 as f64;
        let r = r as f64;
        let a = self.alpha;
        let b = self.beta;
        let g = self.gamma;
        let reduce = |x: f64| x - x.round();
        Self {
            alpha: reduce(a * r * r * r),
            beta: reduce((3.0 * a * n0 + b) * r * r),
            gamma: reduce(((3.0 * a * n0 + 2.0 * b) * n0 + g) * r),
            kappa: reduce(self.eval(0) + ((a * n0 + b) * n0 + g) * n0),
        }
    }

    /// From an exact rational polynomial `Σ poly[i]·xⁱ` in the ambient
    /// variable, restricted to the progression and reduced mod 1.
    pub fn from_rational_poly(poly: &[Rat; 4], prog: &Progression) -> Self {
        let a0 = ratmod::rat_int(prog.base);
        let b0 = ratmod::rat_int(prog.step);
        // Expand p(a0 + b0 n) by Horner in (a0 + b0 n) symbolically:
        // coefficients of n^j via binomial expansion.
        let mut coeffs = [
            ratmod::rat_int(0),
            ratmod::rat_int(0),
            ratmod::rat_int(0),
            ratmod::rat_int(0),
        ];
        // (a0 + b0 n)^i expanded iteratively.
        let mut power = [
            ratmod::rat_int(1),
            ratmod::rat_int(0),
            ratmod::rat_int(0),
            ratmod::rat_int(0),
        ];
        for p in poly.iter() {
            for (c, pw) in coeffs.iter_mut().zip(power.iter()) {
                *c += p * pw;
            }
            // power ← power · (a0 + b0 n)
            let mut next = [
                ratmod::rat_int(0),
                ratmod::rat_int(0),
                ratmod::rat_int(0),
                ratmod::rat_int(0),
            ];
            for j in 0..4 {
                next[j] += &power[j] * &a0;
                if j + 1 < 4 {
                    let carried = &power[j] * &b0;
                    next[j + 1] += carried;
                }
            }
            power = next;
        }
        let red = |x: &Rat| ratmod::to_f64(&ratmod::signed_frac(x));
        Self {
            kappa: red(&coeffs[0]),
            gamma: red(&coeffs[1]),
            beta: red(&coeffs[2]),
            alpha: red(&coeffs[3]),
        }
    }

    /// Check agreement with a parent phase (values mod 1) on three sample
    /// points of the progression.
    pub fn agrees_with(
        &self,
        prog: &Progression,
        parent: impl Fn(i64) -> Option<f64>,
        tol: f64,
    ) -> bool {
        let samples = [0, prog.len / 2, prog.len - 1];
        samples.iter().all(|&t| match parent(prog.nth(t)) {
            Some(v) => frac_norm(self.eval(t) - v).map(|d| d <= tol).unwrap_or(false),
            None => false,
        })
    }
}

/// Circle-distance variation of a phase over a piece, by direct scan.
fn scan_variation(phase: &CubicPhaseOnProgression, len: u64) -> f64 {
    let values: Vec<f64> = (0..len).map(|n| phase.eval(n)).collect();
    let mut worst = 0.0f64;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            worst = worst.max(frac_norm(values[i] - values[j]).unwrap_or(f64::INFINITY));
        }
    }
    worst
}

fn check_exact_cover(input: &Progression, pieces: &[Progression]) -> bool {
    let mut got: Vec<i64> = pieces.iter().flat_map(|p| p.elements()).collect();
    got.sort_unstable();
    let mut want: Vec<i64> = input.elements().collect();
    want.sort_unstable();
    got == want
}

/// Partition `T` into subprogressions on which every linear phase varies
/// (in `R/Z`) by less than `eps`.
///
/// A common difference `r` with all `‖α_i·step·r‖` small comes from the
/// `k = 1` recurrence search; `T` splits into `r` residue classes of
/// difference `r·step`, each chopped so the accumulated drift stays under
/// `eps`. The result is scan-verified.
pub fn partition_by_linear(
    t: &Progression,
    linear_phases: &[f64],
    eps: f64,
    cap: u64,
) -> Result<Vec<Progression>, PartitionerError> {
    if t.len > cap {
        return Err(PartitionerError::WorkCapExceeded { len: t.len, cap });
    }
    if linear_phases.is_empty() || t.len == 1 {
        return Ok(alloc::vec![*t]);
    }
    let increments: Vec<f64> = linear_phases.iter().map(|&a| a * t.step as f64).collect();
    let search = recurrence_search(&increments, 1, t.len, cap, 0.1)?;
    let r = search.n_star;
    let v = search.value;
    let chunk = if v == 0.0 { t.len } else { (eps / v).floor().max(1.0) as u64 };

    let mut out = Vec::new();
    for s in 0..r {
        let class_len = (t.len - s).div_ceil(r);
        let mut u = 0;
        while u < class_len {
            let m = chunk.min(class_len - u);
            out.push(t.sub(s + u * r, r, m));
            u += m;
        }
    }
    debug_assert!(check_exact_cover(t, &out));

    // Verified postcondition: pairwise variation of each phase per piece.
    for piece in &out {
        for &a in linear_phases {
            let mut worst = 0.0f64;
            for x in piece.elements() {
                for y in piece.elements() {
                    worst = worst.max(frac_norm(a * (x - y) as f64).unwrap_or(f64::INFINITY));
                }
            }
            if worst >= eps && piece.len > 1 {
                return Err(PartitionerError::VariationExceeded {
                    piece_base: piece.base,
                    measured: worst,
                    eps,
                });
            }
        }
    }
    Ok(out)
}

/// A fully reduced piece: the progression, each phase reparametrized to the
/// piece's own index with small non-constant coefficients, the constant
/// `κ` per phase, and the residual per-phase variation bound.
#[derive(Debug, Clone)]
pub struct ReducedPiece {
    pub prog: Progression,
    pub phases: Vec<CubicPhaseOnProgression>,
    pub kappas: Vec<f64>,
    /// Scan-measured variation of each phase over the piece; `< eps`.
    pub residual_variation: Vec<f64>,
}

/// Iterative degree reduction (3 → 2 → 1): each round kills the leading
/// coefficients with a recurrence-search difference and chops pieces so the
/// killed term contributes variation below `eps/6`; final pieces are
/// scan-verified to have total variation below `eps`. The output partitions
/// `T` exactly; length-1 fallbacks are always permitted.
pub fn reduce_degree_partition(
    t: &Progression,
    cubics: &[CubicPhaseOnProgression],
    eps: f64,
    cap: u64,
) -> Result<Vec<ReducedPiece>, PartitionerError> {
    if t.len > cap {
        return Err(PartitionerError::WorkCapExceeded { len: t.len, cap });
    }
    // Local pieces carry (start offset bookkeeping via Progression, plus
    // phases in their own index).
    let mut pieces: Vec<(Progression, Vec<CubicPhaseOnProgression>)> =
        alloc::vec![(*t, cubics.to_vec())];

    for deg in [3u32, 2, 1] {
        let mut next = Vec::new();
        for (prog, phases) in pieces {
            if prog.len == 1 || phases.is_empty() {
                next.push((prog, phases));
                continue;
            }
            let leading: Vec<f64> = phases
                .iter()
                .map(|p| match deg {
                    3 => p.alpha,
                    2 => p.beta,
                    _ => p.gamma,
                })
                .collect();
            let r_cap = ((prog.len as f64).powf(1.0 / deg as f64).floor() as u64)
                .clamp(1, prog.len);
            let search = recurrence_search(&leading, deg, r_cap, cap, 0.1)?;
            let r = search.n_star;
            let v = search.value;
            let chunk = if v == 0.0 {
                prog.len
            } else {
                ((eps / (6.0 * v)).powf(1.0 / deg as f64).floor().max(1.0)) as u64
            };
            for s in 0..r {
                let class_len = (prog.len - s).div_ceil(r);
                let mut u = 0;
                while u < class_len {
                    let m = chunk.min(class_len - u);
                    let sub = prog.sub(s + u * r, r, m);
                    let shifted: Vec<CubicPhaseOnProgression> =
                        phases.iter().map(|p| p.shifted(s + u * r, r)).collect();
                    next.push((sub, shifted));
                    u += m;
                }
            }
        }
        pieces = next;
    }

    let input_pieces: Vec<Progression> = pieces.iter().map(|(p, _)| *p).collect();
    debug_assert!(check_exact_cover(t, &input_pieces));

    let mut out = Vec::with_capacity(pieces.len());
    for (prog, phases) in pieces {
        let mut kappas = Vec::with_capacity(phases.len());
        let mut residual_variation = Vec::with_capacity(phases.len());
        for p in &phases {
            kappas.push(p.kappa - p.kappa.floor());
            let variation = scan_variation(p, prog.len);
            if variation >= eps && prog.len > 1 {
                return Err(PartitionerError::VariationExceeded {
                    piece_base: prog.base,
                    measured: variation,
                    eps,
                });
            }
            residual_variation.push(variation);
        }
        out.push(ReducedPiece { prog, phases, kappas, residual_variation });
    }
    Ok(out)
}

/// Retained runs of a window cut, with the total run count (in and out).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutRuns {
    pub retained: Vec<Progression>,
    pub total_runs: usize,
}

/// Cut one piece by a pointwise membership predicate: split into maximal
/// runs of constant membership, keep the inside runs. Membership is ground
/// truth; the run structure is presentation. More than 7 retained runs
/// violates the near-constancy precondition and is an error.
pub fn cut_by_membership(
    piece: &Progression,
    in_window: impl Fn(i64) -> bool,
) -> Result<CutRuns, PartitionerError> {
    let mut retained = Vec::new();
    let mut total_runs = 0usize;
    let mut run_start: Option<u64> = None;
    let mut prev_state: Option<bool> = None;
    for u in 0..piece.len {
        let state = in_window(piece.nth(u));
        if prev_state != Some(state) {
            total_runs += 1;
            if let Some(start) = run_start.take() {
                retained.push(piece.sub(start, 1, u - start));
            }
            if state {
                run_start = Some(u);
            }
        }
        prev_state = Some(state);
    }
    if let Some(start) = run_start {
        retained.push(piece.sub(start, 1, piece.len - start));
    }
    if retained.len() > 7 {
        return Err(PartitionerError::TooManyRuns { runs: retained.len() });
    }
    Ok(CutRuns { retained, total_runs })
}

/// Cut pieces by the resolution window `‖φ(n) − j/K‖ ≤ 1/(2K)` of their
/// carried phase, evaluated pointwise.
pub fn cut_by_window(
    pieces: &[(Progression, CubicPhaseOnProgression)],
    window: (u64, u64),
) -> Result<Vec<Progression>, PartitionerError> {
    let (j, k) = window;
    let center = j as f64 / k as f64;
    let half = 1.0 / (2.0 * k as f64);
    let mut out = Vec::new();
    for (prog, phase) in pieces {
        let runs = cut_by_membership(prog, |x| {
            // x is an ambient element; recover the local index.
            let u = ((x - prog.base) / prog.step) as u64;
            frac_norm(phase.eval(u) - center).map(|d| d <= half).unwrap_or(false)
        })?;
        out.extend(runs.retained);
    }
    Ok(out)
}
