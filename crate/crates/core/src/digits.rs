//! Exact digit expansions and seeded digit streams.
//!
//! A coordinate is held as a finite digit tape in a fixed base rather than as
//! a float, so that every comparison made downstream is exact. The tape
//! `[a0, a1, a2, ...]` in base b has value sum_j a_j * b^-(j+1), i.e. a0 is
//! the most significant fractional digit.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::cmp::Ordering;

use crate::{Error, Result};

/// A number in [0, 1) as a finite base-`base` digit expansion.
///
/// Trailing zero digits do not affect the value: tapes compare equal iff the
/// zero-padded digit sequences are identical, which for finite canonical
/// expansions coincides with equality of the represented rationals.
#[derive(Debug, Clone)]
pub struct ExactCoordinate {
    base: u32,
    digits: Vec<u32>,
}

impl ExactCoordinate {
    pub fn zero(base: u32) -> Result<Self> {
        Self::from_digits(base, Vec::new())
    }

    /// Digit tape with `digits[j]` the coefficient of base^-(j+1).
    pub fn from_digits(base: u32, digits: Vec<u32>) -> Result<Self> {
        if base < 2 {
            return Err(Error::invalid(format!("digit base must be >= 2, got {base}")));
        }
        if let Some(bad) = digits.iter().find(|&&a| a >= base) {
            return Err(Error::invalid(format!("digit {bad} out of range for base {base}")));
        }
        Ok(ExactCoordinate { base, digits })
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    pub fn tape_len(&self) -> usize {
        self.digits.len()
    }

    /// Digit at position `j` of the zero-padded tape.
    pub fn digit(&self, j: usize) -> u32 {
        self.digits.get(j).copied().unwrap_or(0)
    }

    /// Exact value as a rational: (digits read as a base-b integer) / b^len.
    pub fn to_rational(&self) -> BigRational {
        let b = BigUint::from(self.base);
        let mut num = BigUint::zero();
        for &a in &self.digits {
            num = num * &b + BigUint::from(a);
        }
        let den = b.pow(self.digits.len() as u32);
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    /// Nearest binary float. Within 1 ulp of the exact value and monotone in it.
    pub fn to_f64(&self) -> f64 {
        self.to_rational().to_f64().unwrap_or(0.0)
    }
}

impl PartialEq for ExactCoordinate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for ExactCoordinate {}

impl PartialOrd for ExactCoordinate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExactCoordinate {
    /// Numeric order. For equal bases this is the lexicographic order of the
    /// zero-padded tapes; for mixed bases it falls back to exact rationals.
    fn cmp(&self, other: &Self) -> Ordering {
        if self.base == other.base {
            let len = self.digits.len().max(other.digits.len());
            for j in 0..len {
                match self.digit(j).cmp(&other.digit(j)) {
                    Ordering::Equal => continue,
                    ord => return ord,
                }
            }
            Ordering::Equal
        } else {
            self.to_rational().cmp(&other.to_rational())
        }
    }
}

/// Seeded stream of uniform digits in a fixed base.
///
/// Streams are derived from a master seed plus a column index, so columns of
/// one generator are independent while the whole run stays reproducible. The
/// number of digits drawn so far is kept for cost accounting.
#[derive(Debug, Clone)]
pub struct DigitTape {
    base: u32,
    rng: ChaCha8Rng,
    drawn: u64,
}

impl DigitTape {
    pub fn new(base: u32, master_seed: u64, column: u64) -> Result<Self> {
        if base < 2 {
            return Err(Error::invalid(format!("digit base must be >= 2, got {base}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(column);
        Ok(DigitTape { base, rng, drawn: 0 })
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn next_digit(&mut self) -> u32 {
        self.drawn += 1;
        self.rng.gen_range(0..self.base)
    }

    pub fn take(&mut self, count: usize) -> Vec<u32> {
        (0..count).map(|_| self.next_digit()).collect()
    }

    /// Total digits drawn since creation.
    pub fn drawn(&self) -> u64 {
        self.drawn
    }
}

/// Float view of a rational, for prefilters and reporting. Never used where
/// an exact comparison is required.
pub fn rational_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{FromPrimitive, Signed};

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn value_spot_checks() {
        let c = ExactCoordinate::from_digits(3, vec![1]).unwrap();
        assert_eq!(c.to_rational(), rat(1, 3));
        let c = ExactCoordinate::from_digits(3, vec![1, 1]).unwrap();
        assert_eq!(c.to_rational(), rat(4, 9));
        let c = ExactCoordinate::from_digits(2, vec![0, 1, 1]).unwrap();
        assert_eq!(c.to_rational(), rat(3, 8));
        assert_eq!(ExactCoordinate::zero(5).unwrap().to_rational(), rat(0, 1));
    }

    #[test]
    fn digit_validation() {
        assert!(ExactCoordinate::from_digits(3, vec![3]).is_err());
        assert!(ExactCoordinate::from_digits(1, vec![]).is_err());
    }

    #[test]
    fn trailing_zeros_do_not_matter() {
        let a = ExactCoordinate::from_digits(3, vec![1, 2]).unwrap();
        let b = ExactCoordinate::from_digits(3, vec![1, 2, 0, 0]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cmp(&b), Ordering::Equal);
    }

    #[test]
    fn order_matches_rational_order() {
        // oracle: exact rational comparison
        let mut tape = DigitTape::new(3, 7, 0).unwrap();
        let coords: Vec<ExactCoordinate> = (0..200)
            .map(|_| ExactCoordinate::from_digits(3, tape.take(12)).unwrap())
            .collect();
        for a in &coords {
            for b in &coords {
                assert_eq!(a.cmp(b), a.to_rational().cmp(&b.to_rational()));
            }
        }
    }

    #[test]
    fn mixed_base_comparison_is_numeric() {
        let third = ExactCoordinate::from_digits(3, vec![1]).unwrap();
        let half = ExactCoordinate::from_digits(2, vec![1]).unwrap();
        assert!(third < half);
        let zero3 = ExactCoordinate::zero(3).unwrap();
        let zero2 = ExactCoordinate::zero(2).unwrap();
        assert_eq!(zero3, zero2);
    }

    #[test]
    fn to_f64_monotone_and_tight() {
        let mut tape = DigitTape::new(2, 11, 0).unwrap();
        let mut coords: Vec<ExactCoordinate> = (0..300)
            .map(|_| ExactCoordinate::from_digits(2, tape.take(64)).unwrap())
            .collect();
        coords.sort();
        let mut prev = -1.0f64;
        for c in &coords {
            let f = c.to_f64();
            assert!(f >= prev, "f64 conversion must be monotone");
            prev = f;
            let err = (BigRational::from_f64(f).unwrap() - c.to_rational()).abs();
            assert!(err <= rat(1, 1 << 52), "conversion off by more than 2^-52");
        }
    }

    #[test]
    fn tape_determinism_and_independence() {
        let mut a = DigitTape::new(3, 42, 1).unwrap();
        let mut b = DigitTape::new(3, 42, 1).unwrap();
        assert_eq!(a.take(100), b.take(100));
        assert_eq!(a.drawn(), 100);

        let mut c = DigitTape::new(3, 42, 2).unwrap();
        let mut d = DigitTape::new(3, 43, 1).unwrap();
        let a2 = DigitTape::new(3, 42, 1).unwrap().take(100);
        assert_ne!(a2, c.take(100), "columns must get distinct streams");
        assert_ne!(a2, d.take(100), "master seed must matter");
        for digit in DigitTape::new(5, 9, 3).unwrap().take(1000) {
            assert!(digit < 5);
        }
    }
}
