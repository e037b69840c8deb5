//! On-disk formats: set files, JSON fixtures, configs, and trace emission.
//!
//! Set files carry one integer per line (blank lines and `#` comments are
//! skipped). Rationals in JSON are `[numerator, denominator]` pairs so that
//! exact quantities stay exact through the round trip. Traces are CSV with
//! the columns `step,n_prime,delta,outcome,progression`.

use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use aplab_core::apcount::SetInInterval;
use aplab_core::driver::{ExperimentConfig, RunTrace, TrichotomyOutcome};
use aplab_core::factors::OracleConfig;
use aplab_core::nilpotent::NilAlgebra;
use aplab_core::ratmod::{rat, Rat};
use aplab_core::schmidt::Lattice;

/// Parse a set file: one integer per line.
pub fn parse_set_file(text: &str, bound: Option<u64>) -> Result<SetInInterval> {
    let mut elements = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let value: u64 = line
            .parse()
            .with_context(|| format!("line {}: expected an integer, got {line:?}", idx + 1))?;
        elements.push(value);
    }
    let bound = match bound {
        Some(b) => b,
        None => *elements.iter().max().context("set file has no elements")?,
    };
    SetInInterval::new(bound, elements).map_err(|e| anyhow::anyhow!("{e}"))
}

/// Parse a function file: one sample per line, `re` or `re im`.
pub fn parse_function_file(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut values = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let re: f64 = parts
            .next()
            .context("empty line")?
            .parse()
            .with_context(|| format!("line {}: bad real part", idx + 1))?;
        let im: f64 = match parts.next() {
            Some(s) => s.parse().with_context(|| format!("line {}: bad imaginary part", idx + 1))?,
            None => 0.0,
        };
        values.push((re, im));
    }
    if values.is_empty() {
        bail!("function file has no samples");
    }
    Ok(values)
}

fn rat_from_pair(pair: &[i64; 2]) -> Result<Rat> {
    if pair[1] == 0 {
        bail!("rational denominator must be nonzero");
    }
    Ok(rat(pair[0], pair[1]))
}

/// JSON form of a Bohr set query.
#[derive(Debug, Deserialize)]
pub struct BohrSpecFile {
    pub modulus: u64,
    pub frequencies: Vec<u64>,
    /// Radius as an exact `[numerator, denominator]` pair.
    pub radius: [i64; 2],
    /// Optional translate `y` (builds `y + B(S, ρ)`).
    #[serde(default)]
    pub shift: Option<u64>,
}

impl BohrSpecFile {
    pub fn to_spec(&self) -> Result<aplab_core::bohr::BohrSpec> {
        let radius = rat_from_pair(&self.radius)?;
        let spec = match self.shift {
            Some(y) => {
                aplab_core::bohr::BohrSpec::shifted(self.modulus, &self.frequencies, radius, y)
            }
            None => aplab_core::bohr::BohrSpec::new(self.modulus, &self.frequencies, radius),
        };
        spec.map_err(|e| anyhow::anyhow!("{e}"))
    }
}

/// JSON form of a lattice/averaged-theta fixture:
/// `{basis, alpha, k, n, expected?}` with basis columns.
#[derive(Debug, Deserialize, Serialize)]
pub struct LatticeFixture {
    pub basis: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
    pub k: u32,
    pub n: f64,
    #[serde(default)]
    pub expected: Option<f64>,
    #[serde(default)]
    pub tolerance: Option<f64>,
}

impl LatticeFixture {
    pub fn to_lattice(&self) -> Result<Lattice> {
        Lattice::new(self.basis.clone()).map_err(|e| anyhow::anyhow!("{e}"))
    }
}

/// JSON form of a nilpotent algebra fixture:
/// `{dimension, degree, filtration_dims: [d1, d2, d3],
///   constants: [[i, j, k, p, q], ...]}` with 1-based basis indices and
/// structure constants `p/q`.
#[derive(Debug, Deserialize, Serialize)]
pub struct NilFixture {
    pub dimension: usize,
    pub degree: u32,
    pub filtration_dims: [usize; 3],
    pub constants: Vec<[i64; 5]>,
}

impl NilFixture {
    pub fn to_algebra(&self) -> Result<NilAlgebra> {
        let mut entries = Vec::with_capacity(self.constants.len());
        for row in &self.constants {
            let [i, j, k, p, q] = *row;
            if i < 1 || j < 1 || k < 1 {
                bail!("constants use 1-based basis indices");
            }
            entries.push((
                (i - 1) as usize,
                (j - 1) as usize,
                (k - 1) as usize,
                rat_from_pair(&[p, q])?,
            ));
        }
        if self.filtration_dims[2] != self.dimension {
            bail!("filtration_dims must end at the dimension");
        }
        NilAlgebra::new(
            self.dimension,
            self.degree,
            self.filtration_dims[0],
            self.filtration_dims[1],
            &entries,
        )
        .map_err(|e| anyhow::anyhow!("{e}"))
    }
}

/// JSON form of [`OracleConfig`].
#[derive(Debug, Deserialize, Serialize)]
pub struct OracleConfigFile {
    #[serde(default = "default_budget")]
    pub budget: u64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_coeff_grid")]
    pub coeff_grid: u64,
    #[serde(default)]
    pub frequencies: Vec<u64>,
    #[serde(default = "default_shift_grid")]
    pub shift_grid: u64,
    #[serde(default = "default_rank_cap")]
    pub rank_cap: usize,
    #[serde(default = "default_radius")]
    pub bohr_radius: [i64; 2],
}

fn default_budget() -> u64 {
    200_000
}
fn default_threshold() -> f64 {
    0.01
}
fn default_coeff_grid() -> u64 {
    16
}
fn default_shift_grid() -> u64 {
    8
}
fn default_rank_cap() -> usize {
    1
}
fn default_radius() -> [i64; 2] {
    [1, 8]
}

impl Default for OracleConfigFile {
    fn default() -> Self {
        Self {
            budget: default_budget(),
            threshold: default_threshold(),
            coeff_grid: default_coeff_grid(),
            frequencies: Vec::new(),
            shift_grid: default_shift_grid(),
            rank_cap: default_rank_cap(),
            bohr_radius: default_radius(),
        }
    }
}

/// JSON form of [`ExperimentConfig`]; omitted fields take desk defaults.
#[derive(Debug, Deserialize, Serialize)]
pub struct ExperimentConfigFile {
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_c_prime")]
    pub c_prime: f64,
    #[serde(default = "default_resolution")]
    pub resolution: u64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default)]
    pub oracle: OracleConfigFile,
    #[serde(default = "default_kvn_iterations")]
    pub max_kvn_iterations: u32,
    #[serde(default = "default_max_atoms")]
    pub max_atoms: usize,
    #[serde(default = "default_u4_cap")]
    pub u4_work_cap: u128,
    #[serde(default = "default_small_n_floor")]
    pub small_n_floor: u64,
    #[serde(default = "default_atom_floor")]
    pub atom_measure_floor: f64,
    #[serde(default = "default_partition_eps")]
    pub partition_eps: f64,
    #[serde(default = "default_min_len")]
    pub min_progression_len: u64,
    #[serde(default = "default_partition_cap")]
    pub partition_cap: u64,
    #[serde(default)]
    pub seed: u64,
}

fn default_c() -> f64 {
    1e-8
}
fn default_c_prime() -> f64 {
    1e-6
}
fn default_resolution() -> u64 {
    16
}
fn default_eta() -> f64 {
    0.1
}
fn default_kvn_iterations() -> u32 {
    8
}
fn default_max_atoms() -> usize {
    4096
}
fn default_u4_cap() -> u128 {
    1_000_000_000
}
fn default_small_n_floor() -> u64 {
    4
}
fn default_atom_floor() -> f64 {
    1e-6
}
fn default_partition_eps() -> f64 {
    1.0 / 64.0
}
fn default_min_len() -> u64 {
    2
}
fn default_partition_cap() -> u64 {
    1 << 22
}

impl Default for ExperimentConfigFile {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl ExperimentConfigFile {
    pub fn to_config(&self) -> Result<ExperimentConfig> {
        let oracle = OracleConfig {
            budget: self.oracle.budget,
            threshold: self.oracle.threshold,
            coeff_grid: self.oracle.coeff_grid,
            frequencies: self.oracle.frequencies.clone(),
            shift_grid: self.oracle.shift_grid,
            rank_cap: self.oracle.rank_cap,
            bohr_radius: rat_from_pair(&self.oracle.bohr_radius)?,
        };
        let cfg = ExperimentConfig {
            c: self.c,
            c_prime: self.c_prime,
            resolution: self.resolution,
            eta: self.eta,
            oracle,
            max_kvn_iterations: self.max_kvn_iterations,
            max_atoms: self.max_atoms,
            u4_work_cap: self.u4_work_cap,
            small_n_floor: self.small_n_floor,
            atom_measure_floor: self.atom_measure_floor,
            partition_eps: self.partition_eps,
            min_progression_len: self.min_progression_len,
            partition_cap: self.partition_cap,
            seed: self.seed,
        };
        cfg.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
        Ok(cfg)
    }
}

fn outcome_cell(outcome: &TrichotomyOutcome) -> (String, String) {
    match outcome {
        TrichotomyOutcome::SmallN { .. } => ("small_n".into(), String::new()),
        TrichotomyOutcome::LambdaClose { deficit } => {
            (format!("lambda_close:{deficit}"), String::new())
        }
        TrichotomyOutcome::Increment { progression, new_density } => (
            format!("increment:{new_density}"),
            format!("{}+{}t:{}", progression.base, progression.step, progression.len),
        ),
        TrichotomyOutcome::OracleFailed { stage, .. } => {
            (format!("oracle_failed:{stage}"), String::new())
        }
    }
}

/// Render the run trace as CSV: `step,n_prime,delta,outcome,progression`.
pub fn trace_to_csv(trace: &RunTrace) -> String {
    let mut out = String::from("step,n_prime,delta,outcome,progression\n");
    for step in &trace.steps {
        let (outcome, progression) = outcome_cell(&step.outcome);
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            step.index, step.n_prime, step.delta, outcome, progression
        );
    }
    out
}

/// Render the run trace (with witnesses and certificates) as JSON.
pub fn trace_to_json(trace: &RunTrace) -> serde_json::Value {
    let steps: Vec<serde_json::Value> = trace
        .steps
        .iter()
        .map(|step| {
            let outcome = match &step.outcome {
                TrichotomyOutcome::SmallN { n_prime } => serde_json::json!({
                    "kind": "small_n", "n_prime": n_prime,
                }),
                TrichotomyOutcome::LambdaClose { deficit } => serde_json::json!({
                    "kind": "lambda_close", "deficit": deficit,
                }),
                TrichotomyOutcome::Increment { progression, new_density } => serde_json::json!({
                    "kind": "increment",
                    "new_density": new_density,
                    "progression": {
                        "base": progression.base,
                        "step": progression.step,
                        "len": progression.len,
                    },
                }),
                TrichotomyOutcome::OracleFailed { best, stage } => serde_json::json!({
                    "kind": "oracle_failed",
                    "stage": stage,
                    "best_witness": best.as_ref().map(witness_json),
                }),
            };
            serde_json::json!({
                "step": step.index,
                "n_prime": step.n_prime,
                "delta": step.delta,
                "outcome": outcome,
            })
        })
        .collect();
    serde_json::json!({ "steps": steps })
}

pub fn witness_json(w: &aplab_core::factors::CorrelationWitness) -> serde_json::Value {
    serde_json::json!({
        "modulus": w.modulus,
        "frequencies": w.frequencies,
        "shift": w.shift,
        "radius": [w.radius.numer().to_string(), w.radius.denom().to_string()],
        "cubic": w.cubic,
        "correlation": w.correlation,
    })
}
