//! Exact rational numbers.
//!
//! Values whose reduced numerator and denominator fit in an `i64` are kept
//! inline and combined with `i128` intermediates; everything else falls back
//! to `BigRational`. The representation is canonical, so derived equality and
//! hashing are value equality.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone)]
enum Repr {
    /// Reduced, denominator > 0, neither component equal to `i64::MIN`.
    Small(i64, i64),
    Big(BigRational),
}

#[derive(Clone)]
pub struct Rational(Repr);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational literal {0:?}")]
pub struct ParseRationalError(pub String);

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn fits(v: i128) -> bool {
    v > i64::MIN as i128 && v <= i64::MAX as i128
}

impl Rational {
    pub fn zero() -> Self {
        Rational(Repr::Small(0, 1))
    }

    pub fn one() -> Self {
        Rational(Repr::Small(1, 1))
    }

    pub fn from_integer(n: i64) -> Self {
        if n == i64::MIN {
            return Self::from_big(BigRational::from_integer(BigInt::from(n)));
        }
        Rational(Repr::Small(n, 1))
    }

    /// `num / den`, reduced. Panics if `den == 0`.
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Self::from_i128(num as i128, den as i128)
    }

    fn from_i128(num: i128, den: i128) -> Self {
        debug_assert!(den != 0);
        let (mut n, mut d) = if den < 0 { (-num, -den) } else { (num, den) };
        let g = gcd_u128(n.unsigned_abs(), d as u128);
        if g > 1 {
            n /= g as i128;
            d /= g as i128;
        }
        if fits(n) && fits(d) {
            Rational(Repr::Small(n as i64, d as i64))
        } else {
            Rational(Repr::Big(BigRational::new_raw(BigInt::from(n), BigInt::from(d))))
        }
    }

    pub fn from_big(r: BigRational) -> Self {
        // BigRational::new reduces; new_raw callers must pass reduced values.
        match (r.numer().to_i64(), r.denom().to_i64()) {
            (Some(n), Some(d)) if n != i64::MIN && d != i64::MIN => Rational(Repr::Small(n, d)),
            _ => Rational(Repr::Big(r)),
        }
    }

    pub fn from_bigints(num: BigInt, den: BigInt) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        Self::from_big(BigRational::new(num, den))
    }

    pub fn to_big(&self) -> BigRational {
        match &self.0 {
            Repr::Small(n, d) => BigRational::new_raw(BigInt::from(*n), BigInt::from(*d)),
            Repr::Big(r) => r.clone(),
        }
    }

    pub fn numer(&self) -> BigInt {
        match &self.0 {
            Repr::Small(n, _) => BigInt::from(*n),
            Repr::Big(r) => r.numer().clone(),
        }
    }

    pub fn denom(&self) -> BigInt {
        match &self.0 {
            Repr::Small(_, d) => BigInt::from(*d),
            Repr::Big(r) => r.denom().clone(),
        }
    }

    /// Denominator as `u64` when it fits.
    pub fn denom_u64(&self) -> Option<u64> {
        match &self.0 {
            Repr::Small(_, d) => Some(*d as u64),
            Repr::Big(r) => r.denom().to_u64(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.0, Repr::Small(0, _))
    }

    pub fn is_positive(&self) -> bool {
        match &self.0 {
            Repr::Small(n, _) => *n > 0,
            Repr::Big(r) => r.is_positive(),
        }
    }

    pub fn is_negative(&self) -> bool {
        match &self.0 {
            Repr::Small(n, _) => *n < 0,
            Repr::Big(r) => r.is_negative(),
        }
    }

    pub fn is_integer(&self) -> bool {
        match &self.0 {
            Repr::Small(_, d) => *d == 1,
            Repr::Big(r) => r.is_integer(),
        }
    }

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    pub fn floor(&self) -> Self {
        match &self.0 {
            Repr::Small(n, d) => Rational::from_integer(n.div_floor(d)),
            Repr::Big(r) => Self::from_big(r.floor()),
        }
    }

    pub fn ceil(&self) -> Self {
        match &self.0 {
            Repr::Small(n, d) => Rational::from_integer(n.div_ceil(d)),
            Repr::Big(r) => Self::from_big(r.ceil()),
        }
    }

    /// `self * scale` as an `i64`, if that product is an integer in range.
    pub fn scaled_integer(&self, scale: u64) -> Option<i64> {
        let p = self * &Rational::from_big(BigRational::from_integer(BigInt::from(scale)));
        match p.0 {
            Repr::Small(n, 1) => Some(n),
            _ => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match &self.0 {
            Repr::Small(n, d) => *n as f64 / *d as f64,
            Repr::Big(r) => r.to_f64().unwrap_or(f64::NAN),
        }
    }

    /// Largest multiple of `1/den` not exceeding `x`.
    pub fn floor_f64(x: f64, den: i64) -> Self {
        let scaled = (x * den as f64).floor();
        Rational::new(scaled as i64, den)
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl Default for Rational {
    fn default() -> Self {
        Rational::zero()
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_integer(n)
    }
}

impl From<i32> for Rational {
    fn from(n: i32) -> Self {
        Rational::from_integer(n as i64)
    }
}

impl From<usize> for Rational {
    fn from(n: usize) -> Self {
        Rational::from_integer(n as i64)
    }
}

impl PartialEq for Rational {
    fn eq(&self, other: &Self) -> bool {
        match (&self.0, &other.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => a == c && b == d,
            (Repr::Big(a), Repr::Big(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Rational {}

impl Hash for Rational {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match &self.0 {
            Repr::Small(n, d) => {
                0u8.hash(state);
                n.hash(state);
                d.hash(state);
            }
            Repr::Big(r) => {
                1u8.hash(state);
                r.hash(state);
            }
        }
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => {
                if b == d {
                    a.cmp(c)
                } else {
                    (*a as i128 * *d as i128).cmp(&(*c as i128 * *b as i128))
                }
            }
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn add_ref(x: &Rational, y: &Rational) -> Rational {
    match (&x.0, &y.0) {
        (Repr::Small(0, _), _) => y.clone(),
        (_, Repr::Small(0, _)) => x.clone(),
        (Repr::Small(a, b), Repr::Small(c, d)) => {
            if b == d {
                Rational::from_i128(*a as i128 + *c as i128, *b as i128)
            } else {
                let (b, d) = (*b as i128, *d as i128);
                Rational::from_i128(*a as i128 * d + *c as i128 * b, b * d)
            }
        }
        _ => Rational::from_big(x.to_big() + y.to_big()),
    }
}

fn mul_ref(x: &Rational, y: &Rational) -> Rational {
    match (&x.0, &y.0) {
        (Repr::Small(0, _), _) | (_, Repr::Small(0, _)) => Rational::zero(),
        (Repr::Small(a, b), Repr::Small(c, d)) => {
            let g1 = gcd_u128(a.unsigned_abs() as u128, *d as u128) as i128;
            let g2 = gcd_u128(c.unsigned_abs() as u128, *b as u128) as i128;
            let n = (*a as i128 / g1) * (*c as i128 / g2);
            let m = (*b as i128 / g2) * (*d as i128 / g1);
            if fits(n) && fits(m) {
                Rational(Repr::Small(n as i64, m as i64))
            } else {
                Rational(Repr::Big(BigRational::new_raw(BigInt::from(n), BigInt::from(m))))
            }
        }
        _ => Rational::from_big(x.to_big() * y.to_big()),
    }
}

fn recip(x: &Rational) -> Rational {
    match &x.0 {
        Repr::Small(n, d) => {
            assert!(*n != 0, "division by zero");
            if *n < 0 {
                Rational(Repr::Small(-d, -n))
            } else {
                Rational(Repr::Small(*d, *n))
            }
        }
        Repr::Big(r) => Rational::from_big(r.recip()),
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        match &self.0 {
            Repr::Small(n, d) => Rational(Repr::Small(-n, *d)),
            Repr::Big(r) => Rational::from_big(-r),
        }
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        -&self
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $f:expr) => {
        impl $tr<&Rational> for &Rational {
            type Output = Rational;
            fn $m(self, rhs: &Rational) -> Rational {
                $f(self, rhs)
            }
        }
        impl $tr<Rational> for Rational {
            type Output = Rational;
            fn $m(self, rhs: Rational) -> Rational {
                $f(&self, &rhs)
            }
        }
        impl $tr<&Rational> for Rational {
            type Output = Rational;
            fn $m(self, rhs: &Rational) -> Rational {
                $f(&self, rhs)
            }
        }
        impl $tr<Rational> for &Rational {
            type Output = Rational;
            fn $m(self, rhs: Rational) -> Rational {
                $f(self, &rhs)
            }
        }
    };
}

binop!(Add, add, add_ref);
binop!(Sub, sub, |x: &Rational, y: &Rational| add_ref(x, &-y));
binop!(Mul, mul, mul_ref);
binop!(Div, div, |x: &Rational, y: &Rational| mul_ref(x, &recip(y)));

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        *self = add_ref(self, rhs);
    }
}

impl AddAssign for Rational {
    fn add_assign(&mut self, rhs: Rational) {
        *self = add_ref(self, &rhs);
    }
}

impl SubAssign<&Rational> for Rational {
    fn sub_assign(&mut self, rhs: &Rational) {
        *self = add_ref(self, &-rhs);
    }
}

impl SubAssign for Rational {
    fn sub_assign(&mut self, rhs: Rational) {
        *self = add_ref(self, &-rhs);
    }
}

impl MulAssign<&Rational> for Rational {
    fn mul_assign(&mut self, rhs: &Rational) {
        *self = mul_ref(self, rhs);
    }
}

impl Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Self {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Rational> for Rational {
    fn sum<I: Iterator<Item = &'a Rational>>(iter: I) -> Self {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

impl Zero for Rational {
    fn zero() -> Self {
        Rational::zero()
    }
    fn is_zero(&self) -> bool {
        Rational::is_zero(self)
    }
}

impl One for Rational {
    fn one() -> Self {
        Rational::one()
    }
}

impl fmt::Display for Rational {
    /// Always `p/q`, including integers (`3/1`).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Small(n, d) => write!(f, "{n}/{d}"),
            Repr::Big(r) => write!(f, "{}/{}", r.numer(), r.denom()),
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Small(n, 1) => write!(f, "{n}"),
            _ => fmt::Display::fmt(self, f),
        }
    }
}

impl FromStr for Rational {
    type Err = ParseRationalError;

    /// Accepts `p/q` or a bare integer `p`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseRationalError(s.to_string());
        let t = s.trim();
        let (n, d) = match t.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (t, "1"),
        };
        let n: BigInt = n.parse().map_err(|_| err())?;
        let d: BigInt = d.parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        Ok(Rational::from_bigints(n, d))
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Least common multiple of the denominators, `None` once it passes `cap`.
pub fn common_denominator<'a, I>(values: I, cap: u64) -> Option<u64>
where
    I: IntoIterator<Item = &'a Rational>,
{
    let mut acc: u64 = 1;
    for v in values {
        let d = v.denom_u64()?;
        acc = acc.lcm(&d);
        if acc > cap {
            return None;
        }
    }
    Some(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn arithmetic_reduces() {
        assert_eq!(q("1/2") + q("1/3"), q("5/6"));
        assert_eq!(q("2/4"), q("1/2"));
        assert_eq!(q("1/2") * q("2/3"), q("1/3"));
        assert_eq!(q("1/2") / q("1/4"), Rational::from(2));
        assert_eq!(q("-3/6").to_string(), "-1/2");
        assert_eq!(Rational::from(3).to_string(), "3/1");
    }

    #[test]
    fn overflow_promotes_and_demotes() {
        let big = Rational::from_integer(i64::MAX);
        let sq = &big * &big;
        assert!(sq > big);
        let back = &sq / &big;
        assert_eq!(back, big);
        assert!(matches!(back.0, Repr::Small(..)));
        let tiny = Rational::new(1, i64::MAX);
        assert_eq!((&tiny * &tiny) * Rational::from_integer(i64::MAX), tiny);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!("1/0".parse::<Rational>().is_err());
        assert!("x".parse::<Rational>().is_err());
        assert_eq!(q(" 7 "), Rational::from(7));
    }

    #[test]
    fn floor_ceil() {
        assert_eq!(q("-7/2").floor(), Rational::from(-4));
        assert_eq!(q("-7/2").ceil(), Rational::from(-3));
        assert_eq!(q("7/2").floor(), Rational::from(3));
    }

    #[test]
    fn common_denominator_caps() {
        let v = [q("1/2"), q("1/3"), q("5/4")];
        assert_eq!(common_denominator(&v, 100), Some(12));
        assert_eq!(common_denominator(&v, 10), None);
    }

    proptest::proptest! {
        #[test]
        fn field_laws(a in -1_000_000i64..1_000_000, b in 1i64..1000, c in -1_000_000i64..1_000_000, d in 1i64..1000) {
            let x = Rational::new(a, b);
            let y = Rational::new(c, d);
            let bx = x.to_big();
            let by = y.to_big();
            proptest::prop_assert_eq!((&x + &y).to_big(), &bx + &by);
            proptest::prop_assert_eq!((&x * &y).to_big(), &bx * &by);
            proptest::prop_assert_eq!((&x - &y).to_big(), &bx - &by);
            proptest::prop_assert_eq!(x.cmp(&y), bx.cmp(&by));
            let s = x.to_string();
            proptest::prop_assert_eq!(s.parse::<Rational>().unwrap(), x);
        }
    }
}
