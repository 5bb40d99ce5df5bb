//! Low-discrepancy point matrices and exact star discrepancy measurement.
//!
//! The library is organized in three layers:
//!
//! * generation: digit-exact Halton and van Neumann-Kakutani orbits, plus a
//!   hybrid matrix whose higher columns advance by binary digit shifts
//!   ([`pointgen`], [`digits`]);
//! * measurement: exact star discrepancy by anchored-grid enumeration, with
//!   bracketing covers giving certified intervals when exact enumeration is
//!   out of budget ([`discrepancy`], [`cover`]);
//! * evaluation: closed-form bound evaluators with a verifier battery, and a
//!   quasi-Monte Carlo integration harness with error certificates
//!   ([`bounds`], [`integrate`]).
//!
//! All discrepancy arithmetic is exact rational; floats appear only in
//! reports and in conservative prefilters that cannot change outcomes.

pub mod bounds;
pub mod cover;
pub mod digits;
pub mod discrepancy;
mod error;
pub mod integrate;
pub mod io;
pub mod pointgen;
pub mod primes;

pub use error::{Error, Result};

/// Exact scalar used throughout measurement code.
pub type Rational = num_rational::BigRational;

/// Convenience constructor for small rationals.
pub fn rational(numer: i64, denom: i64) -> Rational {
    Rational::new(numer.into(), denom.into())
}
