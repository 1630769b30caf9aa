//! Rendering and parsing helpers for exact rational figures.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

/// Renders a rational as `numerator/denominator` in lowest terms.
///
/// The denominator is always written, even when it is 1, so the format
/// stays machine-splittable: `5/1`, `65/2`, `-3/4`, `0/1`.
pub fn format_ratio(value: &BigRational) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

/// Renders a rational as a decimal with exactly four fractional digits,
/// rounding half away from zero: `1/3` becomes `0.3333`, `1/2` becomes
/// `0.5000`. A convenience view; the `num/den` form is the exact one.
pub fn decimal4(value: &BigRational) -> String {
    let sign = if value.is_negative() { "-" } else { "" };
    let abs = value.abs();
    // Scale to ten-thousandths and round half away from zero:
    // q = floor((n * 20000 + d) / 2d).
    let scaled = (abs.numer() * BigInt::from(20_000u32) + abs.denom())
        / (BigInt::from(2u32) * abs.denom());
    let whole = &scaled / BigInt::from(10_000u32);
    let frac = &scaled % BigInt::from(10_000u32);
    format!("{sign}{whole}.{frac:04}")
}

/// Parses a non-negative rational from `N`, `N/D`, or a plain decimal
/// such as `12.5`. Returns `None` for anything else (signs, exponents,
/// zero denominators, empty parts).
pub fn parse_ratio(text: &str) -> Option<BigRational> {
    if let Some((num, den)) = text.split_once('/') {
        let n = parse_digits(num)?;
        let d = parse_digits(den)?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    if let Some((int_part, frac_part)) = text.split_once('.') {
        if frac_part.is_empty() {
            return None;
        }
        let n = parse_digits(int_part)?;
        let f = parse_digits(frac_part)?;
        let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
        return Some(BigRational::new(n * &scale + f, scale));
    }
    Some(BigRational::from_integer(parse_digits(text)?))
}

fn parse_digits(text: &str) -> Option<BigInt> {
    if text.is_empty() || !text.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    text.parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn format_always_writes_denominator() {
        assert_eq!(format_ratio(&ratio(5, 1)), "5/1");
        assert_eq!(format_ratio(&ratio(65, 2)), "65/2");
        assert_eq!(format_ratio(&ratio(0, 7)), "0/1");
        assert_eq!(format_ratio(&ratio(10, 4)), "5/2");
    }

    #[test]
    fn decimal4_rounds_half_away_from_zero() {
        assert_eq!(decimal4(&ratio(1, 3)), "0.3333");
        assert_eq!(decimal4(&ratio(1, 2)), "0.5000");
        assert_eq!(decimal4(&ratio(2, 3)), "0.6667");
        assert_eq!(decimal4(&ratio(1, 20_000)), "0.0001");
        assert_eq!(decimal4(&ratio(3, 40_000)), "0.0001");
        assert_eq!(decimal4(&ratio(1, 40_000)), "0.0000");
        assert_eq!(decimal4(&ratio(25, 2)), "12.5000");
        assert_eq!(decimal4(&ratio(-1, 2)), "-0.5000");
        assert_eq!(decimal4(&BigRational::zero()), "0.0000");
    }

    #[test]
    fn parse_accepts_three_shapes() {
        assert_eq!(parse_ratio("7"), Some(ratio(7, 1)));
        assert_eq!(parse_ratio("65/2"), Some(ratio(65, 2)));
        assert_eq!(parse_ratio("12.5"), Some(ratio(25, 2)));
        assert_eq!(parse_ratio("0.25"), Some(ratio(1, 4)));
        assert_eq!(parse_ratio("0"), Some(BigRational::zero()));
    }

    #[test]
    fn parse_rejects_junk() {
        assert_eq!(parse_ratio(""), None);
        assert_eq!(parse_ratio("-1"), None);
        assert_eq!(parse_ratio("1/0"), None);
        assert_eq!(parse_ratio("1e3"), None);
        assert_eq!(parse_ratio("1."), None);
        assert_eq!(parse_ratio("/2"), None);
        assert_eq!(parse_ratio("1/2/3"), None);
    }
}
