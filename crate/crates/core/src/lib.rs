//! Computational kernels for density-increment experiments on sets without
//! five-term arithmetic progressions.
//!
//! The crate is a desk-scale laboratory: every object is built constructively
//! and checked against brute-force oracles rather than asymptotic bounds.
//! The pieces fit together as follows.
//!
//! * [`cyclic`] — complex-valued functions on `Z/NZ`, the fractional-part
//!   norm, and an expectation-normalized discrete Fourier transform.
//! * [`gowers`] — multiplicative/additive discrete derivatives and the
//!   Gowers `U^k` norms by exact enumeration.
//! * [`apcount`] — the quintilinear 5-AP operator `Λ` and exact integer
//!   progression counting after a Bertrand prime embedding.
//! * [`bohr`] — centered and shifted Bohr sets with exact rational
//!   membership.
//! * [`localpoly`] — locally polynomial phases on subsets of `Z/NZ`,
//!   shifted floor functions, and fractional-part identities.
//! * [`factors`] — partitions of `Z/NZ`, conditional-expectation
//!   projections, the correlation-search oracle, and the
//!   Koopman–von Neumann energy-increment loop.
//! * [`schmidt`] — lattice theta functions, the averaged theta
//!   `F_{Λ,α}(N)` with built-in Poisson validation, the Weyl test, the
//!   Schmidt alternative, lattice descent, and brute-force simultaneous
//!   recurrence search.
//! * [`partitioner`] — splitting progressions so that given cubic phases
//!   are near-constant mod 1, and cutting by resolution windows.
//! * [`nilpotent`] — exact-rational step-`≤3` nilpotent Lie algebras:
//!   BCH products, Mal'cev coordinates, lattice reduction, basis
//!   rescaling, polynomial-sequence logarithms, torus Fourier
//!   approximation, and the circle partition of unity.
//! * [`driver`] — prime embedding, the trichotomy step, the full
//!   density-increment loop, and AP-free set generation.
//!
//! All public operations are pure functions over immutable inputs; work
//! caps turn combinatorial blowups into reported errors instead of silent
//! sampling.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod apcount;
pub mod arith;
pub mod bohr;
pub mod cyclic;
pub mod driver;
pub mod factors;
pub mod gowers;
pub mod localpoly;
pub mod nilpotent;
pub mod partitioner;
pub mod ratmod;
pub mod schmidt;

pub use cyclic::CyclicFunction;
