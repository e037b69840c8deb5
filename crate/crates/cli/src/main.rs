//! Command-line front end for the density-increment laboratory.
//!
//! Exit codes: 0 on success, 2 on precondition or validation failures,
//! 3 when a work cap is exhausted.

mod formats;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use aplab_core::apcount;
use aplab_core::bohr;
use aplab_core::cyclic::CyclicFunction;
use aplab_core::driver;
use aplab_core::gowers;
use aplab_core::schmidt;

#[derive(Parser)]
#[command(name = "aplab", version, about = "Desk-scale laboratory for 5-AP density increments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Gowers U^k norm of a sampled function (one `re [im]` pair per line).
    Unorm {
        /// Function sample file.
        #[arg(long)]
        function: PathBuf,
        /// Norm degree k (1..=5).
        #[arg(long)]
        k: u32,
        /// Tuple-evaluation budget.
        #[arg(long, default_value_t = gowers::DEFAULT_WORK_CAP)]
        cap: u128,
    },
    /// Exact 5-AP data of a set: count, Λ(1_A), density.
    Lambda {
        /// Set file (one integer per line).
        #[arg(long)]
        set: PathBuf,
        /// Interval bound N′ (defaults to the maximum element).
        #[arg(long)]
        bound: Option<u64>,
    },
    /// Enumerate a Bohr set from a JSON spec.
    Bohr {
        /// Spec file: {modulus, frequencies, radius: [p,q], shift?}.
        #[arg(long)]
        spec: PathBuf,
        /// Enumeration cap.
        #[arg(long, default_value_t = 1 << 24)]
        cap: u64,
    },
    /// Brute-force simultaneous recurrence min max_i ‖α_i n^k‖.
    Recur {
        /// Frequencies α_i (repeatable).
        #[arg(long = "alpha", required = true)]
        alphas: Vec<f64>,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        n: u64,
        /// Exponent constant in the reported bound template d·N^{−c/d²}.
        #[arg(long, default_value_t = 0.1)]
        c: f64,
        #[arg(long, default_value_t = 1 << 24)]
        cap: u64,
    },
    /// Averaged theta F_{Λ,α}(N) from a lattice fixture (Poisson-validated).
    Favg {
        /// Fixture file: {basis, alpha, k, n, expected?, tolerance?}.
        #[arg(long)]
        fixture: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Validate a nilpotent-algebra fixture and run its self-checks.
    Nilcheck {
        /// Fixture file: {dimension, degree, filtration_dims, constants}.
        #[arg(long)]
        fixture: PathBuf,
    },
    /// Run the density-increment loop on a set.
    Increment {
        /// Set file (one integer per line).
        #[arg(long)]
        set: PathBuf,
        /// Experiment config JSON (desk defaults when omitted).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Interval bound N′ (defaults to the maximum element).
        #[arg(long)]
        bound: Option<u64>,
        /// Write the CSV trace here (also printed to stdout).
        #[arg(long)]
        trace_csv: Option<PathBuf>,
        /// Write the witness/certificate JSON here.
        #[arg(long)]
        witness_json: Option<PathBuf>,
    },
}

/// Error class for exit-code mapping.
fn is_work_cap(msg: &str) -> bool {
    msg.contains("cap") || msg.contains("exceeds") || msg.contains("budget")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if is_work_cap(&format!("{e:#}")) {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Unorm { function, k, cap } => {
            let text = fs::read_to_string(&function)
                .with_context(|| format!("reading {}", function.display()))?;
            let samples = formats::parse_function_file(&text)?;
            let f = CyclicFunction::new(
                samples.len(),
                samples.iter().map(|&(re, im)| num_complex::Complex64::new(re, im)).collect(),
            )
            .map_err(|e| anyhow::anyhow!("{e}"))?;
            let value = gowers::u_norm_with_cap(&f, k, cap).map_err(|e| anyhow::anyhow!("{e}"))?;
            println!(
                "{}",
                serde_json::json!({ "modulus": f.modulus(), "k": k, "u_norm": value })
            );
        }
        Command::Lambda { set, bound } => {
            let text =
                fs::read_to_string(&set).with_context(|| format!("reading {}", set.display()))?;
            let a = formats::parse_set_file(&text, bound)?;
            let n = driver::prime_embed(a.bound());
            let count = apcount::count_5aps(&a, n).map_err(|e| anyhow::anyhow!("{e}"))?;
            let lambda = count as f64 / (n as f64 * n as f64);
            println!(
                "{}",
                serde_json::json!({
                    "bound": a.bound(),
                    "size": a.len(),
                    "density": a.density(),
                    "embedded_modulus": n,
                    "count_5aps": count,
                    "lambda": lambda,
                    "ap_free": count == a.len() as u64,
                })
            );
        }
        Command::Bohr { spec, cap } => {
            let text =
                fs::read_to_string(&spec).with_context(|| format!("reading {}", spec.display()))?;
            let file: formats::BohrSpecFile = serde_json::from_str(&text)?;
            let spec = file.to_spec()?;
            let members = bohr::bohr_enumerate(&spec, cap).map_err(|e| anyhow::anyhow!("{e}"))?;
            println!(
                "{}",
                serde_json::json!({
                    "modulus": spec.modulus(),
                    "rank": spec.rank(),
                    "size": members.len(),
                    "members": members,
                })
            );
        }
        Command::Recur { alphas, k, n, c, cap } => {
            let result = schmidt::recurrence_search(&alphas, k, n, cap, c)
                .map_err(|e| anyhow::anyhow!("{e}"))?;
            println!(
                "{}",
                serde_json::json!({
                    "n_star": result.n_star,
                    "value": result.value,
                    "bound_template": result.bound_template,
                    "bound_holds": result.bound_holds,
                })
            );
        }
        Command::Favg { fixture, tol } => {
            let text = fs::read_to_string(&fixture)
                .with_context(|| format!("reading {}", fixture.display()))?;
            let file: formats::LatticeFixture = serde_json::from_str(&text)?;
            let lam = file.to_lattice()?;
            let value = schmidt::f_avg(&lam, &file.alpha, file.k, file.n, tol)
                .map_err(|e| anyhow::anyhow!("{e}"))?;
            let matches_expected = file.expected.map(|e| {
                let tolerance = file.tolerance.unwrap_or(1e-7);
                (value - e).abs() <= tolerance
            });
            if matches_expected == Some(false) {
                anyhow::bail!(
                    "favg value {value} does not match expected {:?}",
                    file.expected
                );
            }
            println!(
                "{}",
                serde_json::json!({
                    "dim": lam.dim(),
                    "det": lam.det(),
                    "f_avg": value,
                    "expected_ok": matches_expected,
                })
            );
        }
        Command::Nilcheck { fixture } => {
            let text = fs::read_to_string(&fixture)
                .with_context(|| format!("reading {}", fixture.display()))?;
            let file: formats::NilFixture = serde_json::from_str(&text)?;
            let alg = file.to_algebra()?;
            // Deterministic spot checks on top of construction validation.
            let d = alg.dim();
            let mut rng = aplab_core::arith::SplitMix64::new(0xA11A6);
            let mut point = || -> Vec<aplab_core::ratmod::Rat> {
                (0..d)
                    .map(|_| {
                        aplab_core::ratmod::rat(
                            rng.next_below(19) as i64 - 9,
                            1 + rng.next_below(4) as i64,
                        )
                    })
                    .collect()
            };
            let mut associativity_ok = true;
            for _ in 0..20 {
                let (x, y, z) = (point(), point(), point());
                let left = alg.bch(&alg.bch(&x, &y), &z);
                let right = alg.bch(&x, &alg.bch(&y, &z));
                if left != right {
                    associativity_ok = false;
                }
            }
            let forms = alg.multiplication_forms();
            let (d1, d2, _) = alg.filtration();
            println!(
                "{}",
                serde_json::json!({
                    "dimension": alg.dim(),
                    "degree": alg.degree(),
                    "jacobi_ok": true,
                    "bch_associative": associativity_ok,
                    "twelve_divisible": alg.is_twelve_divisible(),
                    "forms_integral": forms.all_integral(),
                    "first_coordinates_add": forms.first_coordinates_add(d1),
                    "box_vanishes": forms.box_vanishes(d1, d2),
                })
            );
            if !associativity_ok {
                anyhow::bail!("BCH associativity failed on spot checks");
            }
        }
        Command::Increment { set, config, bound, trace_csv, witness_json } => {
            let text =
                fs::read_to_string(&set).with_context(|| format!("reading {}", set.display()))?;
            let a = formats::parse_set_file(&text, bound)?;
            let cfg_file: formats::ExperimentConfigFile = match config {
                Some(path) => {
                    let text = fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    serde_json::from_str(&text)?
                }
                None => Default::default(),
            };
            let cfg = cfg_file.to_config()?;
            let trace =
                driver::density_increment_run(&a, &cfg).map_err(|e| anyhow::anyhow!("{e}"))?;
            let csv = formats::trace_to_csv(&trace);
            print!("{csv}");
            if let Some(path) = trace_csv {
                fs::write(&path, &csv).with_context(|| format!("writing {}", path.display()))?;
            }
            if let Some(path) = witness_json {
                let json = serde_json::to_string_pretty(&formats::trace_to_json(&trace))?;
                fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?;
            }
        }
    }
    Ok(())
}
