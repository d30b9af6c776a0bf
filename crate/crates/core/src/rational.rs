//! Exact rational helpers.
//!
//! Every quantity the engine compares — measures, densities, energies,
//! thresholds — is a `BigRational`. Floating point appears nowhere: the
//! strict/weak inequalities that drive refinement and termination must be
//! decidable, and increments like `eps^4` are far below any useful float
//! tolerance once partitions get fine.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Crate-wide exact rational type.
pub type Rat = BigRational;

/// Rational from an unsigned numerator/denominator pair.
pub fn rat(numer: u64, denom: u64) -> Rat {
    assert!(denom != 0, "zero denominator");
    Rat::new(BigInt::from(numer), BigInt::from(denom))
}

/// Rational from an unsigned integer.
pub fn rat_int(n: u64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Canonical `a/b` rendering; denominators are always present (`0/1`, `3/1`).
pub fn format_rat(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parse a rational literal: `a/b`, a decimal like `0.25`, or an integer.
///
/// Decimals are read exactly (`0.25` becomes `1/4`); no float conversion is
/// involved anywhere.
pub fn parse_rational(text: &str) -> Result<Rat> {
    let s = text.trim();
    let bad = || Error::Structural(format!("cannot parse rational literal {text:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = s.split_once('/') {
        let numer: BigInt = n.trim().parse().map_err(|_| bad())?;
        let denom: BigInt = d.trim().parse().map_err(|_| bad())?;
        if denom.is_zero() {
            return Err(Error::Structural(format!("zero denominator in {text:?}")));
        }
        return Ok(Rat::new(numer, denom));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let whole_part: BigInt = if whole.is_empty() {
            BigInt::zero()
        } else {
            whole.parse().map_err(|_| bad())?
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let frac_digits: BigInt = frac.parse().map_err(|_| bad())?;
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let negative = s.starts_with('-');
        let magnitude = whole_part.abs() * &scale + frac_digits;
        let numer = if negative { -magnitude } else { magnitude };
        return Ok(Rat::new(numer, scale));
    }
    let numer: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Rat::from_integer(numer))
}

/// Check `0 < eps < 1`, the range every regularity parameter lives in.
pub fn require_unit_interval(eps: &Rat, what: &str) -> Result<()> {
    if eps <= &Rat::zero() || eps >= &Rat::one() {
        return Err(Error::Precondition(format!(
            "{what} must lie strictly between 0 and 1, got {}",
            format_rat(eps)
        )));
    }
    Ok(())
}

/// `floor(eps^{-4})` as an exact natural number.
pub fn floor_inv_fourth_power(eps: &Rat) -> BigUint {
    let numer = eps.numer().magnitude().pow(4);
    let denom = eps.denom().magnitude().pow(4);
    denom / numer
}

/// `ceil(c / eps)` for a positive integer `c` and positive rational `eps`.
pub fn ceil_div_eps(c: u64, eps: &Rat) -> BigUint {
    let numer = BigUint::from(c) * eps.denom().magnitude();
    let denom = eps.numer().magnitude().clone();
    (&numer + &denom - BigUint::one()) / denom
}
