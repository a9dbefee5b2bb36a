//! Closed rational intervals `[lo, hi]` certified to contain a real quantity.
//!
//! Endpoints are exact rationals, so interval operations need no outward
//! rounding: every operation returns the exact hull of the image.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::numeric::{format_directed, rational_string, rational_to_f64, Direction};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Enclosure {
    lo: BigRational,
    hi: BigRational,
}

/// Outcome of comparing a certified quantity against a threshold.
#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Holds,
    Fails,
    /// The enclosure straddles the threshold; carries the enclosure width.
    Indeterminate(f64),
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Indeterminate(_) => "indeterminate",
        }
    }

    pub fn is_indeterminate(&self) -> bool {
        matches!(self, Verdict::Indeterminate(_))
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Indeterminate(w) => write!(f, "indeterminate({w:.3e})"),
            v => f.write_str(v.label()),
        }
    }
}

impl Enclosure {
    /// Panics if `lo > hi`.
    pub fn new(lo: BigRational, hi: BigRational) -> Self {
        assert!(lo <= hi, "enclosure with lo > hi");
        Self { lo, hi }
    }

    pub fn try_new(lo: BigRational, hi: BigRational) -> Option<Self> {
        (lo <= hi).then_some(Self { lo, hi })
    }

    pub fn point(x: BigRational) -> Self {
        Self {
            lo: x.clone(),
            hi: x,
        }
    }

    pub fn zero() -> Self {
        Self::point(BigRational::zero())
    }

    pub fn lo(&self) -> &BigRational {
        &self.lo
    }

    pub fn hi(&self) -> &BigRational {
        &self.hi
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn mid(&self) -> BigRational {
        (&self.lo + &self.hi) / BigRational::from_integer(2.into())
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn is_subset_of(&self, other: &Enclosure) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn intersect(&self, other: &Enclosure) -> Option<Enclosure> {
        let lo = (&self.lo).max(&other.lo).clone();
        let hi = (&self.hi).min(&other.hi).clone();
        Self::try_new(lo, hi)
    }

    /// Intersects with `[lo, hi]`, collapsing onto the nearer bound when the
    /// enclosure lies entirely outside.
    pub fn clamp(&self, lo: &BigRational, hi: &BigRational) -> Enclosure {
        let a = self.lo.clone().max(lo.clone()).min(hi.clone());
        let b = self.hi.clone().min(hi.clone()).max(a.clone());
        Enclosure::new(a, b)
    }

    pub fn scale(&self, k: &BigRational) -> Enclosure {
        let a = &self.lo * k;
        let b = &self.hi * k;
        if a <= b {
            Enclosure::new(a, b)
        } else {
            Enclosure::new(b, a)
        }
    }

    pub fn abs(&self) -> Enclosure {
        if !self.lo.is_negative() {
            self.clone()
        } else if !self.hi.is_positive() {
            -self.clone()
        } else {
            let m = (-&self.lo).max(self.hi.clone());
            Enclosure::new(BigRational::zero(), m)
        }
    }

    pub fn square(&self) -> Enclosure {
        let a = self.abs();
        Enclosure::new(&a.lo * &a.lo, &a.hi * &a.hi)
    }

    /// Three-valued `self ≤ bound`.
    pub fn compare_le(&self, bound: &BigRational) -> Verdict {
        if &self.hi <= bound {
            Verdict::Holds
        } else if &self.lo > bound {
            Verdict::Fails
        } else {
            Verdict::Indeterminate(self.width_f64())
        }
    }

    /// Three-valued `self < bound`.
    pub fn compare_lt(&self, bound: &BigRational) -> Verdict {
        if &self.hi < bound {
            Verdict::Holds
        } else if &self.lo >= bound {
            Verdict::Fails
        } else {
            Verdict::Indeterminate(self.width_f64())
        }
    }

    pub fn lo_f64(&self) -> f64 {
        rational_to_f64(&self.lo)
    }

    pub fn hi_f64(&self) -> f64 {
        rational_to_f64(&self.hi)
    }

    pub fn mid_f64(&self) -> f64 {
        rational_to_f64(&self.mid())
    }

    pub fn width_f64(&self) -> f64 {
        rational_to_f64(&self.width())
    }

    /// Decimal endpoints rounded outward to `digits` significant digits.
    pub fn to_decimal(&self, digits: usize) -> (String, String) {
        (
            format_directed(&self.lo, digits, Direction::Down),
            format_directed(&self.hi, digits, Direction::Up),
        )
    }

    /// `[p/q, p/q]` with exact endpoints.
    pub fn to_rational_string(&self) -> String {
        format!(
            "[{}, {}]",
            rational_string(&self.lo),
            rational_string(&self.hi)
        )
    }
}

impl fmt::Display for Enclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (lo, hi) = self.to_decimal(12);
        write!(f, "[{lo}, {hi}]")
    }
}

impl Add for &Enclosure {
    type Output = Enclosure;
    fn add(self, rhs: &Enclosure) -> Enclosure {
        Enclosure::new(&self.lo + &rhs.lo, &self.hi + &rhs.hi)
    }
}

impl Add for Enclosure {
    type Output = Enclosure;
    fn add(self, rhs: Enclosure) -> Enclosure {
        &self + &rhs
    }
}

impl Sub for &Enclosure {
    type Output = Enclosure;
    fn sub(self, rhs: &Enclosure) -> Enclosure {
        Enclosure::new(&self.lo - &rhs.hi, &self.hi - &rhs.lo)
    }
}

impl Sub for Enclosure {
    type Output = Enclosure;
    fn sub(self, rhs: Enclosure) -> Enclosure {
        &self - &rhs
    }
}

impl Mul for &Enclosure {
    type Output = Enclosure;
    fn mul(self, rhs: &Enclosure) -> Enclosure {
        let p = [
            &self.lo * &rhs.lo,
            &self.lo * &rhs.hi,
            &self.hi * &rhs.lo,
            &self.hi * &rhs.hi,
        ];
        let lo = p.iter().min().cloned().unwrap_or_default();
        let hi = p.iter().max().cloned().unwrap_or_default();
        Enclosure::new(lo, hi)
    }
}

impl Mul for Enclosure {
    type Output = Enclosure;
    fn mul(self, rhs: Enclosure) -> Enclosure {
        &self * &rhs
    }
}

impl Neg for Enclosure {
    type Output = Enclosure;
    fn neg(self) -> Enclosure {
        Enclosure::new(-self.hi, -self.lo)
    }
}

impl std::iter::Sum for Enclosure {
    fn sum<I: Iterator<Item = Enclosure>>(iter: I) -> Enclosure {
        iter.fold(Enclosure::zero(), |acc, x| &acc + &x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(p: i64, d: i64) -> BigRational {
        BigRational::new(p.into(), d.into())
    }

    fn iv(a: i64, b: i64) -> Enclosure {
        Enclosure::new(q(a, 1), q(b, 1))
    }

    #[test]
    fn product_with_mixed_signs() {
        assert_eq!(&iv(-2, 3) * &iv(-1, 4), iv(-8, 12));
        assert_eq!(iv(-3, 2).square(), iv(0, 9));
        assert_eq!(iv(-3, -2).abs(), iv(2, 3));
    }

    #[test]
    fn verdicts_are_three_valued() {
        assert_eq!(iv(1, 2).compare_le(&q(2, 1)), Verdict::Holds);
        assert_eq!(iv(3, 4).compare_le(&q(2, 1)), Verdict::Fails);
        assert!(iv(1, 3).compare_le(&q(2, 1)).is_indeterminate());
        assert_eq!(iv(1, 2).compare_lt(&q(2, 1)).label(), "indeterminate");
    }

    #[test]
    fn clamp_keeps_order() {
        let e = Enclosure::new(q(-1, 2), q(3, 2)).clamp(&q(0, 1), &q(1, 1));
        assert_eq!(e, iv(0, 1));
        let outside = iv(5, 6).clamp(&q(0, 1), &q(1, 1));
        assert_eq!(outside, iv(1, 1));
    }

    proptest! {
        #[test]
        fn operations_contain_pointwise_results(
            a in -50i64..50, b in 0i64..50, c in -50i64..50, d in 0i64..50,
            s in 0u8..=10, t in 0u8..=10,
        ) {
            let x = Enclosure::new(q(a, 1), q(a + b, 1));
            let y = Enclosure::new(q(c, 1), q(c + d, 1));
            // Points inside each interval.
            let px = q(a, 1) + q(b * s as i64, 10);
            let py = q(c, 1) + q(d * t as i64, 10);
            prop_assert!((&x + &y).contains(&(&px + &py)));
            prop_assert!((&x - &y).contains(&(&px - &py)));
            prop_assert!((&x * &y).contains(&(&px * &py)));
            prop_assert!(x.square().contains(&(&px * &px)));
            prop_assert!(x.abs().contains(&px.abs()));
        }
    }
}
