//! End-to-end density-increment experiments.
//!
//! A step embeds a set `A ⊆ [N′]` into `Z/NZ` for the smallest prime
//! `N ∈ [1024N′, 2048N′]`, compares the 5-AP operator against its value on
//! the constant of the same density, and either certifies closeness, or
//! chases a density increment through the energy-increment loop, atom
//! selection, and the progression partition pipeline. Where the paper's
//! asymptotic thresholds `M(δ)` would appear, explicit configured floors
//! and caps stand in; every trace records enough to re-verify each claim
//! from the raw set.
//!
//! The correlation oracle is a desk-scale search, so "no witness found" is
//! a first-class outcome ([`TrichotomyOutcome::OracleFailed`]), never
//! silently conflated with genuine uniformity.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::apcount::{self, ApcountError, SetInInterval};
use crate::arith::{self, SplitMix64};
use crate::cyclic::CyclicFunction;
use crate::factors::{
    self, CorrelationWitness, Factor, FactorsError, KvnCaps, KvnTermination, OracleConfig,
};
use crate::partitioner::{
    cut_by_membership, partition_by_linear, reduce_degree_partition, CubicPhaseOnProgression,
    PartitionerError, Progression,
};
use crate::ratmod::{self, Rat};

#[derive(Debug, Clone, PartialEq)]
pub enum DriverError {
    EmptySet,
    ConfigInvalid(String),
    Apcount(ApcountError),
    Factors(FactorsError),
    Partitioner(PartitionerError),
    /// An enforced postcondition failed; indicates a bug, reported loudly.
    PostconditionViolated(String),
}

impl fmt::Display for DriverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DriverError::EmptySet => write!(f, "input set is empty"),
            DriverError::ConfigInvalid(s) => write!(f, "invalid config: {s}"),
            DriverError::Apcount(e) => write!(f, "{e}"),
            DriverError::Factors(e) => write!(f, "{e}"),
            DriverError::Partitioner(e) => write!(f, "{e}"),
            DriverError::PostconditionViolated(s) => write!(f, "postcondition violated: {s}"),
        }
    }
}

impl core::error::Error for DriverError {}

impl From<ApcountError> for DriverError {
    fn from(e: ApcountError) -> Self {
        DriverError::Apcount(e)
    }
}
impl From<FactorsError> for DriverError {
    fn from(e: FactorsError) -> Self {
        DriverError::Factors(e)
    }
}
impl From<PartitionerError> for DriverError {
    fn from(e: PartitionerError) -> Self {
        DriverError::Partitioner(e)
    }
}

/// Tunable constants and caps for one experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Trichotomy closeness constant: `LambdaClose` when
    /// `|Λ(f) − Λ(δ1)| ≤ c·δ⁵`.
    pub c: f64,
    /// Increment constant: a step must reach density `(1+c′)δ`.
    pub c_prime: f64,
    /// Resolution `K ≥ 2` of the window factors.
    pub resolution: u64,
    /// Target `U⁴` bound for the residual in the energy-increment loop.
    pub eta: f64,
    pub oracle: OracleConfig,
    pub max_kvn_iterations: u32,
    pub max_atoms: usize,
    /// Work cap for `U⁴` certification inside the loop.
    pub u4_work_cap: u128,
    /// `SmallN` as soon as `N′ ≤` this floor.
    pub small_n_floor: u64,
    /// Minimum atom measure for increment selection.
    pub atom_measure_floor: f64,
    /// Phase-variation target for the partition pipeline.
    pub partition_eps: f64,
    /// Never return progressions shorter than this.
    pub min_progression_len: u64,
    /// Cap on partitioned progression lengths.
    pub partition_cap: u64,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn desk_default() -> Self {
        Self {
            c: 1e-8,
            c_prime: 1e-6,
            resolution: 16,
            eta: 0.1,
            oracle: OracleConfig::desk_default(0.01),
            max_kvn_iterations: 8,
            max_atoms: 4096,
            u4_work_cap: crate::gowers::DEFAULT_WORK_CAP,
            small_n_floor: 4,
            atom_measure_floor: 1e-6,
            partition_eps: 1.0 / 64.0,
            min_progression_len: 2,
            partition_cap: 1 << 22,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), DriverError> {
        if !(self.c > 0.0) {
            return Err(DriverError::ConfigInvalid(String::from("c must be positive")));
        }
        let bound = self.c.max(1.0) / 1e5;
        if !(self.c_prime > 0.0 && self.c_prime <= bound) {
            return Err(DriverError::ConfigInvalid(String::from(
                "c' must satisfy 0 < c' <= max(c,1)/1e5",
            )));
        }
        if self.resolution < 2 {
            return Err(DriverError::ConfigInvalid(String::from("resolution K must be >= 2")));
        }
        Ok(())
    }
}

/// Outcome of one trichotomy step. `OracleFailed` is the honest fourth
/// branch: the desk-scale oracle could not certify any of the others.
#[derive(Debug, Clone, PartialEq)]
pub enum TrichotomyOutcome {
    SmallN { n_prime: u64 },
    LambdaClose { deficit: f64 },
    Increment { progression: Progression, new_density: f64 },
    OracleFailed { best: Option<CorrelationWitness>, stage: &'static str },
}

/// Smallest prime in `[1024·N′, 2048·N′]`, deterministically.
pub fn prime_embed(n_prime_target: u64) -> u64 {
    assert!(n_prime_target >= 1);
    let lo = 1024 * n_prime_target;
    let hi = 2048 * n_prime_target;
    let mut n = lo;
    while n <= hi {
        if arith::is_prime(n) {
            return n;
        }
        n += 1;
    }
    // Bertrand's postulate guarantees a prime in [m, 2m].
    unreachable!("no prime in [{lo}, {hi}]: primality test is broken");
}

/// Exact scaled Λ-deficit data for an embedded set.
struct LambdaData {
    delta: f64,
    deficit: f64,
    threshold: f64,
}

fn lambda_deficit(a: &SetInInterval, n: u64, c: f64) -> Result<LambdaData, DriverError> {
    let n_prime = a.bound();
    let count_a = apcount::count_5aps(a, n)? as i128;
    let count_full = apcount::count_5aps_in_interval(n_prime) as i128;
    let size = a.len() as i128;
    let np5 = (n_prime as i128).pow(5);
    let size5 = size.pow(5);
    // deficit·N²·N′⁵ = |count_A·N′⁵ − |A|⁵·count_full|, exactly.
    let scaled = (count_a * np5 - size5 * count_full).unsigned_abs();
    let norm = (n as f64).powi(2) * (n_prime as f64).powi(5);
    let delta = a.len() as f64 / n_prime as f64;
    Ok(LambdaData {
        delta,
        deficit: scaled as f64 / norm,
        threshold: c * delta.powi(5),
    })
}

/// One run of the trichotomy: embed, compare Λ against the constant of the
/// same density, and otherwise chase an increment through KvN, atom
/// selection, and the partition pipeline.
pub fn trichotomy_step(
    a: &SetInInterval,
    cfg: &ExperimentConfig,
) -> Result<TrichotomyOutcome, DriverError> {
    cfg.validate()?;
    if a.is_empty() {
        return Err(DriverError::EmptySet);
    }
    let n_prime = a.bound();
    if n_prime <= cfg.small_n_floor {
        return Ok(TrichotomyOutcome::SmallN { n_prime });
    }
    let n = prime_embed(n_prime);
    let lambda = lambda_deficit(a, n, cfg.c)?;
    if lambda.deficit <= lambda.threshold {
        return Ok(TrichotomyOutcome::LambdaClose { deficit: lambda.deficit });
    }

    // Koopman–von Neumann refinement relative to the interval factor.
    let f = a.lift_indicator(n);
    let initial = Factor::split(n, &(1..=n_prime).collect::<Vec<u64>>());
    let caps = KvnCaps {
        max_iterations: cfg.max_kvn_iterations,
        max_atoms: cfg.max_atoms,
        u4_work_cap: cfg.u4_work_cap,
        resolution: cfg.resolution,
    };
    let kvn = factors::kvn_decompose(&f, cfg.eta, &cfg.oracle, &caps, &initial)?;

    // Increment atom: conditional density must clear (1+2c′)δ so that the
    // final progression still clears (1+c′)δ after discarding short pieces.
    let atom = factors::find_increment_atom(
        &f,
        &kvn.factor,
        lambda.delta,
        2.0 * cfg.c_prime,
        cfg.atom_measure_floor,
    )?;
    let atom_id = match atom {
        Some(id) => id,
        None => {
            let best = match kvn.termination {
                KvnTermination::OracleExhausted { best } => best,
                _ => None,
            };
            return Ok(TrichotomyOutcome::OracleFailed { best, stage: "atom-selection" });
        }
    };

    let progressions = partition_atom(n, &kvn, atom_id, cfg)?;
    let omega_size: u64 = kvn.factor.atom_size(atom_id);
    let produced: u64 = progressions.iter().map(|p| p.len).sum();
    if produced != omega_size {
        return Err(DriverError::PostconditionViolated(String::from(
            "partition does not cover the atom exactly",
        )));
    }

    // Short-progression floor: pieces of length at most c′δ|Ω*|/X cannot
    // carry the increment.
    let x_count = progressions.len() as f64;
    let floor_len = cfg.c_prime * lambda.delta * omega_size as f64 / x_count;
    let mut best: Option<(Progression, f64)> = None;
    for p in &progressions {
        if (p.len as f64) <= floor_len || p.len < cfg.min_progression_len {
            continue;
        }
        let hits = p.elements().filter(|&x| x >= 1 && a.contains(x as u64)).count();
        let density = hits as f64 / p.len as f64;
        if density >= (1.0 + cfg.c_prime) * lambda.delta {
            let better = match &best {
                None => true,
                Some((bp, _)) => p.len > bp.len,
            };
            if better {
                best = Some((*p, density));
            }
        }
    }
    match best {
        Some((progression, new_density)) => {
            Ok(TrichotomyOutcome::Increment { progression, new_density })
        }
        None => {
            let best = match kvn.termination {
                KvnTermination::OracleExhausted { best } => best,
                _ => None,
            };
            Ok(TrichotomyOutcome::OracleFailed { best, stage: "no-long-progression" })
        }
    }
}

/// Partition the selected atom into progressions on which every witness
/// phase is near-constant, then cut by the exact window conditions. The
/// output partitions the atom exactly; every membership decision is made
/// in exact rational arithmetic through the factor structure.
fn partition_atom(
    n: u64,
    kvn: &factors::KvnResult,
    atom_id: u32,
    cfg: &ExperimentConfig,
) -> Result<Vec<Progression>, DriverError> {
    let members = kvn.factor.atom_members(atom_id);
    debug_assert!(!members.is_empty());
    let lo = *members.first().expect("nonempty atom") as i64;
    let hi = *members.last().expect("nonempty atom") as i64;
    let interval = Progression::new(lo, 1, (hi - lo + 1) as u64)
        .map_err(DriverError::Partitioner)?;

    // Rebuild the per-witness factor structure (deterministic).
    let witness_factors: Vec<factors::WitnessFactor> = kvn
        .steps
        .iter()
        .map(|s| factors::witness_factor(&s.witness, cfg.resolution))
        .collect::<Result<_, _>>()?;

    // Step 2 (linear): partition the covering interval so every linear
    // frequency phase is near-constant.
    let slopes: Vec<f64> = kvn
        .steps
        .iter()
        .flat_map(|s| s.witness.frequencies.iter().map(|&xi| xi as f64 / n as f64))
        .collect();
    let pieces = partition_by_linear(&interval, &slopes, cfg.partition_eps, cfg.partition_cap)?;

    // Cut to the joint linear atom (and the interval factor): membership is
    // the exact factor lookup. The full factor refines the linear joins, so
    // using the final atom's linear profile is exact.
    let x0 = members[0];
    let linear_profile: Vec<u32> =
        witness_factors.iter().map(|wf| wf.linear_join.atom_of(x0)).collect();
    let in_linear_atom = |x: i64| -> bool {
        if x < 0 || x as u64 >= n {
            return false;
        }
        witness_factors
            .iter()
            .zip(&linear_profile)
            .all(|(wf, &id)| wf.linear_join.atom_of(x as u64) == id)
    };
    let mut current: Vec<Progression> = Vec::new();
    for piece in pieces {
        let runs = cut_by_membership(&piece, in_linear_atom)?;
        current.extend(runs.retained);
    }

    // Step 2' (cubic): reduce each witness cubic to near-constancy.
    let cubic_polys: Vec<[Rat; 4]> = kvn
        .steps
        .iter()
        .map(|s| {
            let [ca, cb, cc] = s.witness.cubic;
            [
                ratmod::rat(0, 1),
                ratmod::rat(cc as i64, n as i64),
                ratmod::rat(cb as i64, n as i64),
                ratmod::rat(ca as i64, n as i64),
            ]
        })
        .collect();
    if !cubic_polys.is_empty() {
        let mut reduced: Vec<Progression> = Vec::new();
        for piece in current {
            let cubics: Vec<CubicPhaseOnProgression> = cubic_polys
                .iter()
                .map(|poly| CubicPhaseOnProgression::from_rational_poly(poly, &piece))
                .collect();
            let out = reduce_degree_partition(&piece, &cubics, cfg.partition_eps, cfg.partition_cap)?;
            reduced.extend(out.into_iter().map(|r| r.prog));
        }
        current = reduced;
    }

    // Step 3: cut by each witness's cubic window (at most 7 runs per piece
    // per condition under the variation precondition).
    for wf in &witness_factors {
        let target = wf.cubic_factor.atom_of(x0);
        let mut next = Vec::new();
        for piece in &current {
            let runs = cut_by_membership(piece, |x| {
                x >= 0 && (x as u64) < n && wf.cubic_factor.atom_of(x as u64) == target
            })?;
            next.extend(runs.retained);
        }
        current = next;
    }

    // Final safety: the runs must lie inside the atom (they do, because the
    // full factor is exactly the join of the pieces used for cutting, plus
    // the initial split which the linear stage respects through x0).
    let mut covered: Vec<u64> = current
        .iter()
        .flat_map(|p| p.elements().map(|x| x as u64))
        .collect();
    covered.sort_unstable();
    if covered != members {
        return Err(DriverError::PostconditionViolated(String::from(
            "window cuts did not reproduce the atom",
        )));
    }
    Ok(current)
}

/// One recorded step of a density-increment run.
#[derive(Debug, Clone)]
pub struct RunStep {
    pub index: u32,
    pub n_prime: u64,
    pub delta: f64,
    pub outcome: TrichotomyOutcome,
}

/// Full trace of a run.
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub steps: Vec<RunStep>,
}

/// Iterate the trichotomy, rescaling `A ∩ P` to a fresh interval on every
/// increment. Stops on any non-increment outcome; densities must grow by
/// `(1+c′)` each increment and the iteration count is hard-capped by
/// `⌈log(1/δ₀)/log(1+c′)⌉ + 1`.
pub fn density_increment_run(
    a: &SetInInterval,
    cfg: &ExperimentConfig,
) -> Result<RunTrace, DriverError> {
    cfg.validate()?;
    if a.is_empty() {
        return Err(DriverError::EmptySet);
    }
    let delta0 = a.density();
    let max_steps = if delta0 >= 1.0 {
        1
    } else {
        ((1.0 / delta0).ln() / (1.0 + cfg.c_prime).ln()).ceil() as u32 + 1
    };
    let mut current = a.clone();
    let mut steps = Vec::new();
    let mut prev_delta = 0.0f64;
    for index in 0..=max_steps {
        let delta = current.density();
        if index > 0 && delta < (1.0 + cfg.c_prime) * prev_delta {
            return Err(DriverError::PostconditionViolated(String::from(
                "density did not increase by (1+c') on an increment step",
            )));
        }
        prev_delta = delta;
        let outcome = trichotomy_step(&current, cfg)?;
        steps.push(RunStep { index, n_prime: current.bound(), delta, outcome: outcome.clone() });
        match outcome {
            TrichotomyOutcome::Increment { progression, .. } => {
                // Rescale A ∩ P to an interval starting at 1 with step 1.
                let elements: Vec<u64> = (0..progression.len)
                    .filter(|&t| {
                        let x = progression.nth(t);
                        x >= 1 && current.contains(x as u64)
                    })
                    .map(|t| t + 1)
                    .collect();
                current = SetInInterval::new(progression.len, elements)?;
            }
            _ => return Ok(RunTrace { steps }),
        }
    }
    Err(DriverError::PostconditionViolated(String::from(
        "iteration bound exceeded without termination",
    )))
}

/// Strategy for generating 5-AP-free sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApFreeStrategy {
    Greedy,
    RandomGreedy,
}

fn would_complete_5ap(chosen: &[u64], cand: u64, bound: u64) -> bool {
    let max_d = bound / 4;
    for d in 1..=max_d.max(1) {
        for pos in 0..5u64 {
            if cand < pos * d {
                continue;
            }
            let a = cand - pos * d;
            if a == 0 || a + 4 * d > bound {
                continue;
            }
            let complete = (0..5u64).all(|k| {
                let p = a + k * d;
                p == cand || chosen.binary_search(&p).is_ok()
            });
            if complete {
                return true;
            }
        }
    }
    false
}

/// Generate a 5-AP-free subset of `[1, N′]`, certified by the exact
/// counter: `count_5aps(A) = |A|` (trivial progressions only).
pub fn generate_ap_free_set(
    n_prime: u64,
    strategy: ApFreeStrategy,
    seed: u64,
) -> Result<SetInInterval, DriverError> {
    assert!(n_prime >= 1);
    let mut order: Vec<u64> = (1..=n_prime).collect();
    if strategy == ApFreeStrategy::RandomGreedy {
        let mut rng = SplitMix64::new(seed);
        // Fisher–Yates with the deterministic generator.
        for i in (1..order.len()).rev() {
            let j = rng.next_below(i as u64 + 1) as usize;
            order.swap(i, j);
        }
    }
    let mut chosen: Vec<u64> = Vec::new();
    for cand in order {
        if !would_complete_5ap(&chosen, cand, n_prime) {
            let pos = chosen.binary_search(&cand).unwrap_err();
            chosen.insert(pos, cand);
        }
    }
    let set = SetInInterval::new(n_prime, chosen)?;
    let n = prime_embed(n_prime);
    let count = apcount::count_5aps(&set, n)?;
    if count != set.len() as u64 {
        return Err(DriverError::PostconditionViolated(String::from(
            "generated set contains a nontrivial 5-AP",
        )));
    }
    Ok(set)
}

/// Λ(δ·1_{[N′]}) through the closed-form count, for consistency checks
/// against the brute-force operator.
pub fn lambda_of_constant(n_prime: u64, n: u64, delta: f64) -> f64 {
    delta.powi(5) * apcount::count_5aps_in_interval(n_prime) as f64 / (n as f64 * n as f64)
}

/// Build the lifted constant `δ·1_{[N′]}` for operator cross-checks.
pub fn lifted_constant(n_prime: u64, n: u64, delta: f64) -> CyclicFunction {
    CyclicFunction::from_fn(n as usize, |x| {
        if x >= 1 && x as u64 <= n_prime {
            Complex64::new(delta, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}
