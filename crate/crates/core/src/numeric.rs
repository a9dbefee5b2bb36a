//! Small numeric helpers shared by the reporting code: logarithms of big
//! integers, rational-to-decimal formatting with directed rounding, and
//! least-squares slopes.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Natural logarithm of a positive big integer, accurate to f64 precision
/// even when the value itself overflows f64.
pub fn ln_biguint(x: &BigUint) -> f64 {
    assert!(!x.is_zero(), "ln of zero");
    let bits = x.bits();
    if bits <= 1000 {
        if let Some(v) = x.to_f64() {
            if v.is_finite() {
                return v.ln();
            }
        }
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().unwrap_or(f64::MAX);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural logarithm of a positive rational.
pub fn ln_rational(x: &BigRational) -> f64 {
    assert!(x.is_positive(), "ln of non-positive rational");
    let num = x.numer().magnitude();
    let den = x.denom().magnitude();
    ln_biguint(num) - ln_biguint(den)
}

/// Nearest f64 of a rational; saturates to 0 or ±inf outside the f64 range.
pub fn rational_to_f64(x: &BigRational) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let sign = if x.is_negative() { -1.0 } else { 1.0 };
    let l = ln_rational(&x.abs());
    if l.abs() < 700.0 {
        if let Some(v) = x.to_f64() {
            return v;
        }
    }
    sign * l.exp()
}

pub fn biguint_to_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Down,
    Up,
}

/// Formats a rational in scientific notation with `digits` significant
/// digits, rounding toward `dir`. Rounding down never exceeds the value and
/// rounding up never falls below it, so formatted enclosures stay sound.
pub fn format_directed(x: &BigRational, digits: usize, dir: Direction) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    let negative = x.is_negative();
    let ax = x.abs();
    // For negative values the outward direction flips on the magnitude.
    let mag_dir = match (negative, dir) {
        (false, d) => d,
        (true, Direction::Down) => Direction::Up,
        (true, Direction::Up) => Direction::Down,
    };
    let digits = digits.max(1);
    let mut exp10 = (ln_rational(&ax) / std::f64::consts::LN_10).floor() as i64;
    // Normalize so that 10^(digits-1) <= mantissa < 10^digits.
    let (mantissa, exp10) = loop {
        let scale = exp10 - (digits as i64 - 1);
        let scaled = scale_pow10(&ax, -scale);
        let (q, rem) = scaled.numer().div_rem(scaled.denom());
        let mut m = q;
        if mag_dir == Direction::Up && !rem.is_zero() {
            m += BigInt::one();
        }
        let lower = BigInt::from(10u32).pow(digits as u32 - 1);
        let upper = BigInt::from(10u32).pow(digits as u32);
        if m < lower {
            exp10 -= 1;
            continue;
        }
        if m >= upper {
            if m == upper && mag_dir == Direction::Up {
                // Rounding up carried into the next decade.
                break (lower, exp10 + 1);
            }
            exp10 += 1;
            continue;
        }
        break (m, exp10);
    };
    let s = mantissa.to_string();
    let (head, tail) = s.split_at(1);
    let tail = tail.trim_end_matches('0');
    let sign = if negative { "-" } else { "" };
    if tail.is_empty() {
        format!("{sign}{head}e{exp10}")
    } else {
        format!("{sign}{head}.{tail}e{exp10}")
    }
}

fn scale_pow10(x: &BigRational, e: i64) -> BigRational {
    let p = BigInt::from(10u32).pow(e.unsigned_abs() as u32);
    if e >= 0 {
        x * BigRational::from_integer(p)
    } else {
        x / BigRational::from_integer(p)
    }
}

/// `p/q` string for a rational (just `p` when integral).
pub fn rational_string(x: &BigRational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    if let Ok(p) = s.parse::<BigInt>() {
        return Some(BigRational::from_integer(p));
    }
    // Decimal or scientific notation, parsed exactly.
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(k) => (&s[..k], s[k + 1..].parse::<i64>().ok()?),
        None => (s, 0),
    };
    let (int_part, frac_part) = mant.split_once('.').unwrap_or((mant, ""));
    let negative = int_part.starts_with('-');
    let digits = format!("{}{}", int_part.trim_start_matches(['-', '+']), frac_part);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let mut n: BigInt = digits.parse().ok()?;
    if negative {
        n = -n;
    }
    Some(scale_pow10(
        &BigRational::from_integer(n),
        exp - frac_part.len() as i64,
    ))
}

/// `10^e` as an exact rational.
pub fn pow10(e: i64) -> BigRational {
    scale_pow10(&BigRational::one(), e)
}

/// Exact `base^exp` for a (possibly negative) integer exponent.
pub fn rational_pow(base: &BigRational, exp: i64) -> BigRational {
    let p = num_traits::pow(base.clone(), exp.unsigned_abs() as usize);
    if exp >= 0 {
        p
    } else {
        p.recip()
    }
}

pub fn bigint_from_biguint(x: &BigUint) -> BigInt {
    BigInt::from_biguint(Sign::Plus, x.clone())
}

/// Least-squares slope of `y` against `x`. `None` for fewer than two
/// distinct abscissae.
pub fn ls_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, d: i64) -> BigRational {
        BigRational::new(p.into(), d.into())
    }

    #[test]
    fn directed_formatting_brackets_value() {
        let third = q(1, 3);
        assert_eq!(format_directed(&third, 5, Direction::Down), "3.3333e-1");
        assert_eq!(format_directed(&third, 5, Direction::Up), "3.3334e-1");
        assert_eq!(format_directed(&q(1, 1), 5, Direction::Up), "1e0");
        assert_eq!(format_directed(&q(-1, 3), 3, Direction::Down), "-3.34e-1");
        assert_eq!(format_directed(&q(999_999, 1_000_000), 3, Direction::Up), "1e0");
    }

    #[test]
    fn parses_rationals_and_decimals() {
        assert_eq!(parse_rational("3/4"), Some(q(3, 4)));
        assert_eq!(parse_rational("-12"), Some(q(-12, 1)));
        assert_eq!(parse_rational("0.25"), Some(q(1, 4)));
        assert_eq!(parse_rational("1e-9"), Some(pow10(-9)));
        assert_eq!(parse_rational("2.5E2"), Some(q(250, 1)));
        assert_eq!(parse_rational("x"), None);
        assert_eq!(parse_rational("1/0"), None);
    }

    #[test]
    fn ln_of_huge_integer() {
        let x = BigUint::from(10u32).pow(400);
        let l = ln_biguint(&x);
        assert!((l - 400.0 * std::f64::consts::LN_10).abs() < 1e-9);
    }

    #[test]
    fn slope_of_line() {
        let x = [1.0, 2.0, 3.0];
        let y = [2.0, 4.0, 6.0];
        assert!((ls_slope(&x, &y).unwrap() - 2.0).abs() < 1e-12);
        assert!(ls_slope(&[1.0], &[1.0]).is_none());
    }
}
