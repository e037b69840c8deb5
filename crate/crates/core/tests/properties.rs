//! Property tests for the structural invariants: things that must hold for
//! arbitrary inputs, not just the pinned fixtures.

use aplab_core::apcount::{lambda5_diag, SetInInterval};
use aplab_core::bohr::{bohr_enumerate, BohrSpec};
use aplab_core::cyclic::{dft, frac_norm, CyclicFunction};
use aplab_core::factors::{join, project, Factor};
use aplab_core::gowers::{u_norm, u_norm_reference};
use aplab_core::localpoly::verify_bracket_identities;
use aplab_core::partitioner::{partition_by_linear, reduce_degree_partition, CubicPhaseOnProgression, Progression};
use aplab_core::ratmod::{rat, Rat};

use num_complex::Complex64;
use num_traits::Zero;
use proptest::prelude::*;

fn complex_unit() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| {
        let z = Complex64::new(re, im);
        z / z.norm().max(1.0)
    })
}

fn cyclic_function(n: usize) -> impl Strategy<Value = CyclicFunction> {
    proptest::collection::vec(complex_unit(), n)
        .prop_map(move |values| CyclicFunction::new(n, values).expect("validated length"))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn frac_norm_symmetric_and_periodic(x in -100.0..100.0f64, k in -20i32..20) {
        let base = frac_norm(x).unwrap();
        prop_assert!((frac_norm(-x).unwrap() - base).abs() < 1e-9);
        prop_assert!((frac_norm(x + k as f64).unwrap() - base).abs() < 1e-9);
        prop_assert!((0.0..=0.5).contains(&base));
    }

    #[test]
    fn parseval_holds(f in cyclic_function(24)) {
        let physical: f64 = f.values().iter().map(|v| v.norm_sqr()).sum::<f64>() / 24.0;
        let spectral: f64 = dft(&f).values().iter().map(|v| v.norm_sqr()).sum();
        prop_assert!((physical - spectral).abs() < 1e-10);
    }

    #[test]
    fn u_norm_scaling(f in cyclic_function(10), re in -1.0..1.0f64, im in -1.0..1.0f64) {
        let c = Complex64::new(re, im);
        for k in 1..=3u32 {
            let base = u_norm(&f, k).unwrap();
            let scaled = u_norm(&f.scaled(c), k).unwrap();
            prop_assert!((scaled - c.norm() * base).abs() < 1e-9);
        }
    }

    #[test]
    fn u_norm_fast_path_matches_reference(f in cyclic_function(7)) {
        for k in 1..=3u32 {
            let fast = u_norm(&f, k).unwrap();
            let slow = u_norm_reference(&f, k, 1 << 40).unwrap();
            prop_assert!((fast - slow).abs() < 1e-10);
        }
    }

    #[test]
    fn lambda_at_least_trivial_progressions(
        elements in proptest::collection::btree_set(1u64..=40, 1..30)
    ) {
        let set = SetInInterval::new(40, elements.into_iter().collect()).unwrap();
        // Λ(1_A)·N² counts at least the |A| diagonal pairs.
        let n = 43u64;
        let f = set.lift_indicator(n);
        let lam = lambda5_diag(&f, 1 << 30).unwrap();
        prop_assert!(lam.re * (n * n) as f64 >= set.len() as f64 - 1e-6);
    }

    #[test]
    fn bohr_sets_symmetric_monotone(
        n in 11u64..200,
        xi1 in 1u64..1000,
        xi2 in 1u64..1000,
        num in 1i64..40,
    ) {
        let rho_small = rat(num, 100);
        let rho_big = rat(num + 10, 100);
        let small = BohrSpec::new(n, &[xi1 % n, xi2 % n], rho_small).unwrap();
        let big = BohrSpec::new(n, &[xi1 % n, xi2 % n], rho_big).unwrap();
        let members_small = bohr_enumerate(&small, 1 << 20).unwrap();
        let members_big = bohr_enumerate(&big, 1 << 20).unwrap();
        prop_assert!(members_small.contains(&0));
        for &x in &members_small {
            prop_assert!(members_small.binary_search(&((n - x) % n)).is_ok());
            prop_assert!(members_big.binary_search(&x).is_ok());
        }
    }

    #[test]
    fn projection_is_averaging(
        f in cyclic_function(30),
        labels in proptest::collection::vec(0u32..5, 30),
    ) {
        let b = Factor::from_labels(&labels);
        let p = project(&f, &b).unwrap();
        // Mean preserved and projection idempotent.
        prop_assert!((p.mean() - f.mean()).norm() < 1e-12);
        let pp = project(&p, &b).unwrap();
        for (a, c) in pp.values().iter().zip(p.values()) {
            prop_assert!((a - c).norm() < 1e-14);
        }
        // Join with itself changes nothing.
        let j = join(&b, &b).unwrap();
        prop_assert_eq!(j.atom_count(), b.atom_count());
    }

    #[test]
    fn partition_by_linear_covers(
        base in -50i64..50,
        step in 1i64..5,
        len in 1u64..120,
        num in 0i64..60,
        den in 1i64..60,
    ) {
        let t = Progression::new(base, step, len).unwrap();
        let phase = num as f64 / (num.max(den) as f64 + 1.0);
        let out = partition_by_linear(&t, &[phase], 0.07, 1 << 20).unwrap();
        let mut got: Vec<i64> = out.iter().flat_map(|p| p.elements()).collect();
        got.sort_unstable();
        let mut want: Vec<i64> = t.elements().collect();
        want.sort_unstable();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn degree_reduction_covers_and_verifies(
        base in -20i64..20,
        len in 1u64..150,
        a in 0u32..200u32,
        b in 0u32..200u32,
        g in 0u32..200u32,
    ) {
        let t = Progression::new(base, 1, len).unwrap();
        let cubic = CubicPhaseOnProgression {
            alpha: a as f64 / 201.0,
            beta: b as f64 / 201.0,
            gamma: g as f64 / 201.0,
            kappa: 0.13,
        };
        let out = reduce_degree_partition(&t, &[cubic], 0.05, 1 << 20).unwrap();
        let mut got: Vec<i64> = out.iter().flat_map(|r| r.prog.elements()).collect();
        got.sort_unstable();
        let mut want: Vec<i64> = t.elements().collect();
        want.sort_unstable();
        prop_assert_eq!(got, want);
        for piece in &out {
            prop_assert!(piece.residual_variation[0] < 0.05);
        }
    }

    #[test]
    fn bracket_identities_exact(
        xn in -3000i64..3000, xd in 1i64..50,
        yn in -3000i64..3000, yd in 1i64..50,
        an in -300i64..300, ad in 1i64..30,
        bn in -300i64..300, bd in 1i64..30,
        cn in -300i64..300, cd in 1i64..30,
        m in -25i64..25,
    ) {
        let report = verify_bracket_identities(
            &rat(xn, xd),
            &rat(yn, yd),
            (&rat(an, ad), &rat(bn, bd), &rat(cn, cd), m),
        );
        prop_assert!(report.product_identity_residual.is_zero());
        prop_assert!(report.nesting_identity_residual.is_zero());
        prop_assert!(report.dropped_term >= Rat::zero());
        prop_assert!(report.dropped_term < rat(1, 1));
    }
}
