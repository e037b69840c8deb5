//! Exact rational arithmetic on the circle `R/Z`.
//!
//! Membership tests for Bohr sets and resolution windows must never depend
//! on floating-point rounding, so everything here works with `BigRational`
//! and reduces mod 1 exactly. Floating point only appears at the very end,
//! when a rational phase is evaluated as a complex exponential.

use alloc::vec::Vec;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};

/// Exact rational scalar used throughout the crate.
pub type Rat = BigRational;

/// `p/q` as a rational; `q` must be nonzero.
pub fn rat(p: i64, q: i64) -> Rat {
    Rat::new(BigInt::from(p), BigInt::from(q))
}

/// Integer `p` as a rational.
pub fn rat_int(p: i64) -> Rat {
    Rat::from_integer(BigInt::from(p))
}

/// `⌊x⌋` as a big integer.
pub fn floor_int(x: &Rat) -> BigInt {
    x.floor().to_integer()
}

/// Fractional part `{x} = x − ⌊x⌋ ∈ [0, 1)`.
pub fn frac(x: &Rat) -> Rat {
    x - x.floor()
}

/// Representative of `x mod 1` in `[−1/2, 1/2)`.
pub fn signed_frac(x: &Rat) -> Rat {
    let half = Rat::new(BigInt::one(), BigInt::from(2));
    frac(&(x + &half)) - half
}

/// The circle norm `‖x‖_{R/Z} = min({x}, 1 − {x}) ∈ [0, 1/2]`, exactly.
pub fn circle_norm(x: &Rat) -> Rat {
    let f = frac(x);
    let complement = Rat::one() - &f;
    if f <= complement {
        f
    } else {
        complement
    }
}

/// Shifted floor `⌊t⌋_β`, defined by `t = {t}_β + ⌊t⌋_β` with
/// `{t}_β ∈ [β − 1/2, β + 1/2)`; equivalently `⌊t − β + 1/2⌋`.
pub fn shifted_floor(t: &Rat, beta: &Rat) -> BigInt {
    let half = Rat::new(BigInt::one(), BigInt::from(2));
    floor_int(&(t - beta + half))
}

/// Shifted fractional part `{t}_β = t − ⌊t⌋_β ∈ [β − 1/2, β + 1/2)`.
pub fn shifted_frac(t: &Rat, beta: &Rat) -> Rat {
    t - Rat::from_integer(shifted_floor(t, beta))
}

/// `√2` truncated to 50 decimal digits, as an exact rational.
///
/// Used as the master irrational stand-in when a phase must avoid hitting
/// window boundaries exactly; any collision with so fine a denominator is
/// treated as a fatal configuration error rather than perturbed again.
pub fn sqrt2_50() -> Rat {
    let digits = b"141421356237309504880168872420969807856967187537694";
    let num = BigInt::parse_bytes(digits, 10).expect("literal parses");
    let den = BigInt::from(10u32).pow(50);
    Rat::new(num, den)
}

/// Rational to `f64`, for final numeric evaluation only.
pub fn to_f64(x: &Rat) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Exact values of a rational-valued map on a common small denominator.
///
/// When the lcm of all denominators fits in `u64`, alternating-sum checks
/// can run on `i128` numerators instead of full big-rational arithmetic.
/// `None` means no common small denominator exists.
pub fn common_denominator_i128(values: &[Rat]) -> Option<(Vec<i128>, u128)> {
    let mut lcm = BigInt::one();
    for v in values {
        lcm = num_integer::lcm(lcm, v.denom().clone());
        if lcm.bits() > 63 {
            return None;
        }
    }
    let lcm_u = lcm.to_u128()?;
    let mut nums = Vec::with_capacity(values.len());
    for v in values {
        let scaled = v.numer() * (&lcm / v.denom());
        // Alternating sums over 2^{s+1} ≤ 16 vertices must not overflow.
        if scaled.abs().bits() > 100 {
            return None;
        }
        nums.push(scaled.to_i128()?);
    }
    Some((nums, lcm_u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    #[test]
    fn circle_norm_basic() {
        assert_eq!(circle_norm(&rat_int(3)), Rat::zero());
        assert_eq!(circle_norm(&rat(3, 4)), rat(1, 4));
        assert_eq!(circle_norm(&rat(13, 10)), rat(3, 10));
        assert_eq!(circle_norm(&rat(-1, 3)), rat(1, 3));
    }

    #[test]
    fn shifted_floor_matches_window() {
        // {t}_β must land in [β − 1/2, β + 1/2) and reconstruct t.
        let half = rat(1, 2);
        for p in -20..20i64 {
            let t = rat(p, 7);
            for b in -3..4i64 {
                let beta = rat(b, 5);
                let fl = Rat::from_integer(shifted_floor(&t, &beta));
                let fr = shifted_frac(&t, &beta);
                assert_eq!(&fl + &fr, t);
                assert!(fr >= &beta - &half && fr < &beta + &half);
            }
        }
    }

    #[test]
    fn standard_floor_is_beta_one_half() {
        // With window [0, 1) the shifted floor is the usual floor.
        let beta = rat(1, 2);
        for n in -8..8i64 {
            let t = rat(n, 4);
            assert_eq!(shifted_floor(&t, &beta), BigInt::from(n.div_euclid(4)));
        }
    }

    #[test]
    fn sqrt2_digits() {
        let s = sqrt2_50();
        let x = to_f64(&s);
        assert!((x - core::f64::consts::SQRT_2).abs() < 1e-15);
        // Truncation, not rounding: s < √2 and (s + 10⁻⁵⁰)² > 2.
        assert!(&s * &s < rat_int(2));
        let bumped = &s + Rat::new(BigInt::one(), BigInt::from(10u32).pow(50));
        assert!(&bumped * &bumped > rat_int(2));
    }

    #[test]
    fn common_denominator_fast_path() {
        let vals = [rat(1, 6), rat(3, 4), rat(-5, 9)];
        let (nums, den) = common_denominator_i128(&vals).unwrap();
        assert_eq!(den, 36);
        assert_eq!(nums, [6, 27, -20]);
    }
}
