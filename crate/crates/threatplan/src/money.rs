//! Monetary amounts and fixed-point mitigation factors.
//!
//! Damage, attacker effort, and countermeasure cost all share one metric:
//! non-negative integer amounts in minor currency units (cents and the
//! like). Mitigation factors are fixed-point ten-thousandths. Keeping both
//! integral means every derived figure is exact and reports never drift
//! between runs or platforms.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;
use thiserror::Error;

/// A non-negative amount in minor currency units.
///
/// The currency label lives on the model; amounts themselves are plain
/// integers so they compare, sum, and serialize exactly.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Money(u64);

impl Money {
    pub const ZERO: Money = Money(0);

    pub fn new(amount: u64) -> Self {
        Money(amount)
    }

    pub fn amount(self) -> u64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Addition that reports overflow instead of wrapping.
    pub fn checked_add(self, other: Money) -> Result<Money, MoneyError> {
        self.0
            .checked_add(other.0)
            .map(Money)
            .ok_or(MoneyError::Overflow)
    }

    pub fn to_ratio(self) -> BigRational {
        BigRational::from_integer(BigInt::from(self.0))
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MoneyError {
    #[error("monetary amount exceeds the representable range")]
    Overflow,
}

/// Number of fixed-point steps per whole unit in a [`Factor`].
pub const FACTOR_SCALE: u32 = 10_000;

/// A mitigation factor in [0, 1], stored as ten-thousandths.
///
/// Four decimal digits is the persisted precision: 0.25 is exactly
/// 2500/10000, so model files carry no binary-float drift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Factor(u16);

impl Factor {
    pub const ZERO: Factor = Factor(0);
    pub const ONE: Factor = Factor(FACTOR_SCALE as u16);

    /// Builds a factor from ten-thousandths, rejecting values above 1.
    pub fn from_ten_thousandths(value: u32) -> Result<Factor, FactorError> {
        if value > FACTOR_SCALE {
            return Err(FactorError::OutOfRange);
        }
        Ok(Factor(value as u16))
    }

    pub fn ten_thousandths(self) -> u32 {
        u32::from(self.0)
    }

    /// Parses a plain decimal literal such as `1`, `0.5`, or `0.3333`.
    ///
    /// Signs, exponents, and more than four significant fractional digits
    /// are rejected; trailing zeros beyond the fourth digit are tolerated.
    pub fn parse_decimal(text: &str) -> Result<Factor, FactorError> {
        if text.starts_with('-') {
            return Err(FactorError::OutOfRange);
        }
        let (int_part, frac_part) = match text.split_once('.') {
            Some((i, f)) => (i, f),
            None => (text, ""),
        };
        if int_part.is_empty() || !int_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(FactorError::Malformed);
        }
        if !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(FactorError::Malformed);
        }
        let significant = frac_part.trim_end_matches('0');
        if significant.len() > 4 {
            return Err(FactorError::TooPrecise);
        }
        let whole: u32 = int_part.parse().map_err(|_| FactorError::OutOfRange)?;
        if whole > 1 {
            return Err(FactorError::OutOfRange);
        }
        let mut frac: u32 = 0;
        for (pos, b) in significant.bytes().enumerate() {
            frac += u32::from(b - b'0') * 10u32.pow(3 - pos as u32);
        }
        Factor::from_ten_thousandths(whole * FACTOR_SCALE + frac)
    }

    /// The factor as an exact rational in [0, 1].
    pub fn to_ratio(self) -> BigRational {
        BigRational::new(BigInt::from(self.0), BigInt::from(FACTOR_SCALE))
    }

    /// `1 - factor` as an exact rational; the share of risk left in place.
    pub fn complement_ratio(self) -> BigRational {
        BigRational::new(
            BigInt::from(FACTOR_SCALE - self.ten_thousandths()),
            BigInt::from(FACTOR_SCALE),
        )
    }
}

impl fmt::Display for Factor {
    /// Canonical minimal-decimal form: `0`, `1`, `0.5`, `0.3333`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let whole = self.ten_thousandths() / FACTOR_SCALE;
        let frac = self.ten_thousandths() % FACTOR_SCALE;
        if frac == 0 {
            write!(f, "{whole}")
        } else {
            let digits = format!("{frac:04}");
            write!(f, "{whole}.{}", digits.trim_end_matches('0'))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum FactorError {
    #[error("mitigation factor must lie in [0, 1]")]
    OutOfRange,
    #[error("mitigation factor has more than four decimal digits")]
    TooPrecise,
    #[error("mitigation factor is not a plain decimal number")]
    Malformed,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checked_add_reports_overflow() {
        let a = Money::new(u64::MAX);
        assert_eq!(a.checked_add(Money::new(1)), Err(MoneyError::Overflow));
        assert_eq!(
            Money::new(2).checked_add(Money::new(3)).unwrap(),
            Money::new(5)
        );
    }

    #[test]
    fn factor_parses_plain_decimals() {
        assert_eq!(Factor::parse_decimal("0").unwrap(), Factor::ZERO);
        assert_eq!(Factor::parse_decimal("1").unwrap(), Factor::ONE);
        assert_eq!(
            Factor::parse_decimal("0.25").unwrap().ten_thousandths(),
            2500
        );
        assert_eq!(
            Factor::parse_decimal("0.3333").unwrap().ten_thousandths(),
            3333
        );
        assert_eq!(
            Factor::parse_decimal("1.0000").unwrap(),
            Factor::ONE
        );
        assert_eq!(
            Factor::parse_decimal("0.250000").unwrap().ten_thousandths(),
            2500
        );
    }

    #[test]
    fn factor_rejects_bad_input() {
        assert_eq!(Factor::parse_decimal("1.2"), Err(FactorError::OutOfRange));
        assert_eq!(Factor::parse_decimal("2"), Err(FactorError::OutOfRange));
        assert_eq!(Factor::parse_decimal("-0.5"), Err(FactorError::OutOfRange));
        assert_eq!(
            Factor::parse_decimal("0.12345"),
            Err(FactorError::TooPrecise)
        );
        assert_eq!(Factor::parse_decimal("1e-1"), Err(FactorError::Malformed));
        assert_eq!(Factor::parse_decimal(""), Err(FactorError::Malformed));
        assert_eq!(Factor::parse_decimal(".5"), Err(FactorError::Malformed));
    }

    #[test]
    fn factor_display_is_minimal() {
        assert_eq!(Factor::ZERO.to_string(), "0");
        assert_eq!(Factor::ONE.to_string(), "1");
        assert_eq!(Factor::from_ten_thousandths(5000).unwrap().to_string(), "0.5");
        assert_eq!(
            Factor::from_ten_thousandths(3333).unwrap().to_string(),
            "0.3333"
        );
        assert_eq!(
            Factor::from_ten_thousandths(500).unwrap().to_string(),
            "0.05"
        );
    }

    #[test]
    fn factor_ratio_is_exact() {
        let f = Factor::parse_decimal("0.25").unwrap();
        assert_eq!(
            f.to_ratio(),
            BigRational::new(BigInt::from(1), BigInt::from(4))
        );
        assert_eq!(
            f.complement_ratio(),
            BigRational::new(BigInt::from(3), BigInt::from(4))
        );
    }
}
