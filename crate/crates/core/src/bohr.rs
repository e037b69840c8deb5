//! Centered and shifted Bohr sets over `Z/NZ`.
//!
//! `B_α(S, ρ) = {x : ‖ξx/N − a_ξ‖_{R/Z} < ρ for all ξ ∈ S}` with strict
//! inequality, exactly as defined; membership is decided in exact rational
//! arithmetic so it never depends on a tolerance. Frequencies are kept as
//! canonical residues `ξ ∈ Z/NZ`; the `(1/N)Z` presentation is the same
//! data via `ξ/N` (see [`crate::cyclic::RationalFrequency::residue_mod`]).

use alloc::vec::Vec;
use core::fmt;

use num_traits::Zero;

use crate::cyclic::RationalFrequency;
use crate::ratmod::{self, Rat};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BohrError {
    /// Radius must lie strictly between 0 and 1.
    RadiusOutOfRange,
    /// One shift per frequency.
    ShiftArityMismatch { frequencies: usize, shifts: usize },
    /// Modulus must be at least 1.
    ModulusZero,
    /// Enumeration over Z/NZ exceeds the cap.
    EnumerationCapExceeded { modulus: u64, cap: u64 },
    /// A rational frequency's denominator does not divide N.
    IncompatibleFrequency,
}

impl fmt::Display for BohrError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BohrError::RadiusOutOfRange => write!(f, "radius must satisfy 0 < rho < 1"),
            BohrError::ShiftArityMismatch { frequencies, shifts } => {
                write!(f, "{frequencies} frequencies but {shifts} shifts")
            }
            BohrError::ModulusZero => write!(f, "modulus must be >= 1"),
            BohrError::EnumerationCapExceeded { modulus, cap } => {
                write!(f, "enumeration over Z/{modulus}Z exceeds cap {cap}")
            }
            BohrError::IncompatibleFrequency => {
                write!(f, "frequency denominator does not divide the modulus")
            }
        }
    }
}

impl core::error::Error for BohrError {}

/// Specification of a (possibly shifted) Bohr set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BohrSpec {
    modulus: u64,
    frequencies: Vec<u64>,
    radius: Rat,
    /// Target phase `a_ξ ∈ R/Z` per frequency; all zero for centered sets.
    shifts: Vec<Rat>,
}

impl BohrSpec {
    /// Centered Bohr set `B(S, ρ)`.
    pub fn new(modulus: u64, frequencies: &[u64], radius: Rat) -> Result<Self, BohrError> {
        let shifts = alloc::vec![Rat::zero(); frequencies.len()];
        Self::with_shifts(modulus, frequencies, radius, shifts)
    }

    /// Uncentered Bohr set with explicit target phases.
    pub fn with_shifts(
        modulus: u64,
        frequencies: &[u64],
        radius: Rat,
        shifts: Vec<Rat>,
    ) -> Result<Self, BohrError> {
        if modulus == 0 {
            return Err(BohrError::ModulusZero);
        }
        if radius <= Rat::zero() || radius >= ratmod::rat_int(1) {
            return Err(BohrError::RadiusOutOfRange);
        }
        if shifts.len() != frequencies.len() {
            return Err(BohrError::ShiftArityMismatch {
                frequencies: frequencies.len(),
                shifts: shifts.len(),
            });
        }
        let frequencies = frequencies.iter().map(|&f| f % modulus).collect();
        let shifts = shifts.iter().map(ratmod::frac).collect();
        Ok(Self { modulus, frequencies, radius, shifts })
    }

    /// The translate `y + B(S, ρ)`, i.e. shifts `a_ξ = ξy/N`.
    pub fn shifted(
        modulus: u64,
        frequencies: &[u64],
        radius: Rat,
        y: u64,
    ) -> Result<Self, BohrError> {
        let shifts = frequencies
            .iter()
            .map(|&f| ratmod::frac(&ratmod::rat((f % modulus * (y % modulus)) as i64, modulus as i64)))
            .collect();
        Self::with_shifts(modulus, frequencies, radius, shifts)
    }

    /// Build from `(1/N)Z` frequencies, which must be compatible with N.
    pub fn from_rational_frequencies(
        modulus: u64,
        frequencies: &[RationalFrequency],
        radius: Rat,
    ) -> Result<Self, BohrError> {
        let residues: Option<Vec<u64>> =
            frequencies.iter().map(|f| f.residue_mod(modulus)).collect();
        match residues {
            Some(res) => Self::new(modulus, &res, radius),
            None => Err(BohrError::IncompatibleFrequency),
        }
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn rank(&self) -> usize {
        self.frequencies.len()
    }

    pub fn frequencies(&self) -> &[u64] {
        &self.frequencies
    }

    pub fn radius(&self) -> &Rat {
        &self.radius
    }

    pub fn shifts(&self) -> &[Rat] {
        &self.shifts
    }
}

/// Exact membership test: `‖ξx/N − a_ξ‖ < ρ` for every frequency.
pub fn bohr_member(x: u64, spec: &BohrSpec) -> bool {
    let n = spec.modulus;
    let x = x % n;
    spec.frequencies.iter().zip(&spec.shifts).all(|(&xi, shift)| {
        let angle = ratmod::rat(((xi as u128 * x as u128) % n as u128) as i64, n as i64) - shift;
        ratmod::circle_norm(&angle) < spec.radius
    })
}

/// All members, sorted ascending.
pub fn bohr_enumerate(spec: &BohrSpec, cap: u64) -> Result<Vec<u64>, BohrError> {
    if spec.modulus > cap {
        return Err(BohrError::EnumerationCapExceeded { modulus: spec.modulus, cap });
    }
    Ok((0..spec.modulus).filter(|&x| bohr_member(x, spec)).collect())
}

impl fmt::Display for BohrSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "B(rank {}, radius {}/{} mod {})",
            self.rank(),
            self.radius.numer(),
            self.radius.denom(),
            self.modulus
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratmod::rat;

    #[test]
    fn zero_frequency_admits_everything() {
        let spec = BohrSpec::new(23, &[0], rat(1, 1000)).unwrap();
        assert_eq!(bohr_enumerate(&spec, 1 << 20).unwrap().len(), 23);
    }

    #[test]
    fn rank_zero_is_everything() {
        let spec = BohrSpec::new(12, &[], rat(1, 2)).unwrap();
        assert_eq!(bohr_enumerate(&spec, 1 << 20).unwrap().len(), 12);
    }

    #[test]
    fn interval_example() {
        // S = {1/100}, ρ = 1/10, N = 100: members are 0, ±1, …, ±9.
        let spec = BohrSpec::new(100, &[1], rat(1, 10)).unwrap();
        let members = bohr_enumerate(&spec, 1 << 20).unwrap();
        let expected: alloc::vec::Vec<u64> = (0..10u64).chain(91..100).collect();
        assert_eq!(members, expected);
        assert_eq!(members.len(), 19);
    }

    #[test]
    fn membership_matches_exhaustive_scan() {
        let spec = BohrSpec::new(101, &[17, 40], rat(1, 8)).unwrap();
        let members = bohr_enumerate(&spec, 1 << 20).unwrap();
        for x in 0..101u64 {
            let direct = [17u64, 40].iter().all(|&xi| {
                let angle = rat((xi * x % 101) as i64, 101);
                ratmod::circle_norm(&angle) < rat(1, 8)
            });
            assert_eq!(direct, members.binary_search(&x).is_ok());
        }
    }

    #[test]
    fn centered_sets_are_symmetric_and_contain_zero() {
        for (n, freqs) in [(37u64, alloc::vec![5u64]), (60, alloc::vec![7, 13])] {
            let spec = BohrSpec::new(n, &freqs, rat(1, 6)).unwrap();
            let members = bohr_enumerate(&spec, 1 << 20).unwrap();
            assert!(members.contains(&0));
            for &x in &members {
                assert!(members.binary_search(&((n - x) % n)).is_ok());
            }
        }
    }

    #[test]
    fn monotone_in_radius_and_rank() {
        let n = 53u64;
        let small = BohrSpec::new(n, &[9, 21], rat(1, 9)).unwrap();
        let large = BohrSpec::new(n, &[9, 21], rat(1, 5)).unwrap();
        let sub = bohr_enumerate(&small, 1 << 20).unwrap();
        let sup = bohr_enumerate(&large, 1 << 20).unwrap();
        assert!(sub.iter().all(|x| sup.binary_search(x).is_ok()));

        // Adding a frequency shrinks the set.
        let more = BohrSpec::new(n, &[9, 21, 30], rat(1, 5)).unwrap();
        let smaller = bohr_enumerate(&more, 1 << 20).unwrap();
        assert!(smaller.iter().all(|x| sup.binary_search(x).is_ok()));
    }

    #[test]
    fn shifted_set_is_translate() {
        for n in [40u64, 101, 499] {
            let freqs = [3u64, n / 3];
            let rho = rat(1, 7);
            let centered = BohrSpec::new(n, &freqs, rho.clone()).unwrap();
            let base = bohr_enumerate(&centered, 1 << 20).unwrap();
            for y in [1u64, n / 2, n - 4] {
                let shifted = BohrSpec::shifted(n, &freqs, rho.clone(), y).unwrap();
                let got = bohr_enumerate(&shifted, 1 << 20).unwrap();
                let mut expected: alloc::vec::Vec<u64> =
                    base.iter().map(|&x| (x + y) % n).collect();
                expected.sort_unstable();
                assert_eq!(got, expected);
            }
        }
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(
            BohrSpec::new(10, &[1], rat(3, 2)),
            Err(BohrError::RadiusOutOfRange)
        ));
        assert!(matches!(
            BohrSpec::new(0, &[1], rat(1, 2)),
            Err(BohrError::ModulusZero)
        ));
        let spec = BohrSpec::new(1 << 30, &[1], rat(1, 2)).unwrap();
        assert!(matches!(
            bohr_enumerate(&spec, 1000),
            Err(BohrError::EnumerationCapExceeded { .. })
        ));
        use crate::cyclic::RationalFrequency;
        assert!(matches!(
            BohrSpec::from_rational_frequencies(10, &[RationalFrequency::new(1, 3)], rat(1, 2)),
            Err(BohrError::IncompatibleFrequency)
        ));
        let ok = BohrSpec::from_rational_frequencies(9, &[RationalFrequency::new(1, 3)], rat(1, 2))
            .unwrap();
        assert_eq!(ok.frequencies(), &[3]);
    }
}
