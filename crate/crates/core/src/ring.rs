//! Exact arithmetic in `Q(i)[√2]` and its real subring `Q[√2]`.
//!
//! Every amplitude produced by the optical setup (powers of `1/√2`, signs and
//! the `±i` of a circular analyzer) is an element of `Q(i)[√2]`, so the whole
//! pipeline runs without floating point and equality is decidable.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Gaussian rational `a + b·i`.
pub type Gaussian = Complex<BigRational>;

pub fn rational(numer: i64, denom: i64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn integer(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn gaussian_zero() -> Gaussian {
    Complex::new(BigRational::zero(), BigRational::zero())
}

fn gaussian_is_zero(z: &Gaussian) -> bool {
    z.re.is_zero() && z.im.is_zero()
}

fn gaussian_inv(z: &Gaussian) -> Option<Gaussian> {
    let norm = &z.re * &z.re + &z.im * &z.im;
    if norm.is_zero() {
        return None;
    }
    Some(Complex::new(&z.re / &norm, -(&z.im / &norm)))
}

/// Element `p + q·√2` with `p, q` Gaussian rationals.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QiSqrt2 {
    rational: Gaussian,
    sqrt2: Gaussian,
}

impl QiSqrt2 {
    pub fn new(rational: Gaussian, sqrt2: Gaussian) -> Self {
        Self { rational, sqrt2 }
    }

    pub fn zero() -> Self {
        Self::new(gaussian_zero(), gaussian_zero())
    }

    pub fn one() -> Self {
        Self::from_rational(BigRational::one())
    }

    pub fn from_rational(r: BigRational) -> Self {
        Self::new(Complex::new(r, BigRational::zero()), gaussian_zero())
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(integer(n))
    }

    pub fn i() -> Self {
        Self::new(
            Complex::new(BigRational::zero(), BigRational::one()),
            gaussian_zero(),
        )
    }

    pub fn sqrt2() -> Self {
        Self::new(
            gaussian_zero(),
            Complex::new(BigRational::one(), BigRational::zero()),
        )
    }

    /// `1/√2 = √2/2`.
    pub fn inv_sqrt2() -> Self {
        Self::new(
            gaussian_zero(),
            Complex::new(rational(1, 2), BigRational::zero()),
        )
    }

    pub fn rational_part(&self) -> &Gaussian {
        &self.rational
    }

    pub fn sqrt2_part(&self) -> &Gaussian {
        &self.sqrt2
    }

    pub fn is_zero(&self) -> bool {
        gaussian_is_zero(&self.rational) && gaussian_is_zero(&self.sqrt2)
    }

    /// Complex conjugate (leaves `√2` alone).
    pub fn conj(&self) -> Self {
        Self::new(self.rational.conj(), self.sqrt2.conj())
    }

    /// `|z|²` as an element of `Q[√2]`.
    pub fn norm_sqr(&self) -> QSqrt2 {
        let prod = self * &self.conj();
        debug_assert!(prod.rational.im.is_zero() && prod.sqrt2.im.is_zero());
        QSqrt2::new(prod.rational.re, prod.sqrt2.re)
    }

    /// Multiplicative inverse, `None` for zero.
    pub fn inv(&self) -> Option<Self> {
        // (p + q√2)(p − q√2) = p² − 2q², a Gaussian rational.
        let galois = Self::new(self.rational.clone(), -self.sqrt2.clone());
        let denom = &self.rational * &self.rational - &self.sqrt2 * &self.sqrt2 * integer(2);
        let inv = gaussian_inv(&denom)?;
        Some(Self::new(&galois.rational * &inv, &galois.sqrt2 * &inv))
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    pub fn to_f64_parts(&self) -> (f64, f64) {
        let s = std::f64::consts::SQRT_2;
        let f = |r: &BigRational| num_traits::ToPrimitive::to_f64(r).unwrap_or(f64::NAN);
        (
            f(&self.rational.re) + s * f(&self.sqrt2.re),
            f(&self.rational.im) + s * f(&self.sqrt2.im),
        )
    }
}

impl Add<&QiSqrt2> for &QiSqrt2 {
    type Output = QiSqrt2;
    fn add(self, rhs: &QiSqrt2) -> QiSqrt2 {
        QiSqrt2::new(&self.rational + &rhs.rational, &self.sqrt2 + &rhs.sqrt2)
    }
}

impl Sub<&QiSqrt2> for &QiSqrt2 {
    type Output = QiSqrt2;
    fn sub(self, rhs: &QiSqrt2) -> QiSqrt2 {
        QiSqrt2::new(&self.rational - &rhs.rational, &self.sqrt2 - &rhs.sqrt2)
    }
}

impl Mul<&QiSqrt2> for &QiSqrt2 {
    type Output = QiSqrt2;
    fn mul(self, rhs: &QiSqrt2) -> QiSqrt2 {
        let two = integer(2);
        let rational = &self.rational * &rhs.rational + &self.sqrt2 * &rhs.sqrt2 * two;
        let sqrt2 = &self.rational * &rhs.sqrt2 + &self.sqrt2 * &rhs.rational;
        QiSqrt2::new(rational, sqrt2)
    }
}

impl Neg for &QiSqrt2 {
    type Output = QiSqrt2;
    fn neg(self) -> QiSqrt2 {
        QiSqrt2::new(-self.rational.clone(), -self.sqrt2.clone())
    }
}

macro_rules! forward_owned {
    ($ty:ty, $($tr:ident :: $f:ident),*) => {$(
        impl $tr<$ty> for $ty {
            type Output = $ty;
            fn $f(self, rhs: $ty) -> $ty {
                (&self).$f(&rhs)
            }
        }
    )*};
}

forward_owned!(QiSqrt2, Add::add, Sub::sub, Mul::mul);

impl Neg for QiSqrt2 {
    type Output = QiSqrt2;
    fn neg(self) -> QiSqrt2 {
        -&self
    }
}

fn push_part(parts: &mut Vec<String>, coeff: &BigRational, unit: &str) {
    if coeff.is_zero() {
        return;
    }
    if unit.is_empty() {
        parts.push(coeff.to_string());
    } else if coeff.is_one() {
        parts.push(unit.to_string());
    } else if (-coeff).is_one() {
        parts.push(format!("-{unit}"));
    } else {
        parts.push(format!("{coeff}·{unit}"));
    }
}

impl fmt::Display for QiSqrt2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        push_part(&mut parts, &self.rational.re, "");
        push_part(&mut parts, &self.rational.im, "i");
        push_part(&mut parts, &self.sqrt2.re, "√2");
        push_part(&mut parts, &self.sqrt2.im, "i·√2");
        if parts.is_empty() {
            return f.write_str("0");
        }
        let mut out = parts[0].clone();
        for p in &parts[1..] {
            match p.strip_prefix('-') {
                Some(rest) => {
                    out.push_str(" - ");
                    out.push_str(rest);
                }
                None => {
                    out.push_str(" + ");
                    out.push_str(p);
                }
            }
        }
        f.write_str(&out)
    }
}

/// Real element `a + b·√2` with `a, b` rational.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QSqrt2 {
    rational: BigRational,
    sqrt2: BigRational,
}

impl QSqrt2 {
    pub fn new(rational: BigRational, sqrt2: BigRational) -> Self {
        Self { rational, sqrt2 }
    }

    pub fn zero() -> Self {
        Self::new(BigRational::zero(), BigRational::zero())
    }

    pub fn from_rational(r: BigRational) -> Self {
        Self::new(r, BigRational::zero())
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.rational
    }

    pub fn sqrt2_part(&self) -> &BigRational {
        &self.sqrt2
    }

    pub fn is_zero(&self) -> bool {
        self.rational.is_zero() && self.sqrt2.is_zero()
    }

    /// The value as a plain rational, if the `√2` part vanishes.
    pub fn as_rational(&self) -> Option<BigRational> {
        self.sqrt2.is_zero().then(|| self.rational.clone())
    }

    /// Sign of `a + b√2`, decided exactly by comparing `a²` with `2b²`.
    pub fn signum(&self) -> i8 {
        let sa = sign_of(&self.rational);
        let sb = sign_of(&self.sqrt2);
        if sa == sb || sb == 0 {
            return sa;
        }
        if sa == 0 {
            return sb;
        }
        let a2 = &self.rational * &self.rational;
        let b2 = &self.sqrt2 * &self.sqrt2 * integer(2);
        if a2 > b2 {
            sa
        } else if a2 < b2 {
            sb
        } else {
            0
        }
    }

    pub fn checked_div(&self, rhs: &QSqrt2) -> Option<QSqrt2> {
        let denom = &rhs.rational * &rhs.rational - &rhs.sqrt2 * &rhs.sqrt2 * integer(2);
        if denom.is_zero() {
            return None;
        }
        let conj = QSqrt2::new(rhs.rational.clone(), -rhs.sqrt2.clone());
        let num = self * &conj;
        Some(QSqrt2::new(num.rational / &denom, num.sqrt2 / &denom))
    }

    pub fn to_f64(&self) -> f64 {
        let f = |r: &BigRational| num_traits::ToPrimitive::to_f64(r).unwrap_or(f64::NAN);
        f(&self.rational) + std::f64::consts::SQRT_2 * f(&self.sqrt2)
    }
}

fn sign_of(r: &BigRational) -> i8 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

impl Add<&QSqrt2> for &QSqrt2 {
    type Output = QSqrt2;
    fn add(self, rhs: &QSqrt2) -> QSqrt2 {
        QSqrt2::new(&self.rational + &rhs.rational, &self.sqrt2 + &rhs.sqrt2)
    }
}

impl Sub<&QSqrt2> for &QSqrt2 {
    type Output = QSqrt2;
    fn sub(self, rhs: &QSqrt2) -> QSqrt2 {
        QSqrt2::new(&self.rational - &rhs.rational, &self.sqrt2 - &rhs.sqrt2)
    }
}

impl Mul<&QSqrt2> for &QSqrt2 {
    type Output = QSqrt2;
    fn mul(self, rhs: &QSqrt2) -> QSqrt2 {
        QSqrt2::new(
            &self.rational * &rhs.rational + &self.sqrt2 * &rhs.sqrt2 * integer(2),
            &self.rational * &rhs.sqrt2 + &self.sqrt2 * &rhs.rational,
        )
    }
}

forward_owned!(QSqrt2, Add::add, Sub::sub, Mul::mul);

impl fmt::Display for QSqrt2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lifted = QiSqrt2::new(
            Complex::new(self.rational.clone(), BigRational::zero()),
            Complex::new(self.sqrt2.clone(), BigRational::zero()),
        );
        lifted.fmt(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inv_sqrt2_squared_is_half() {
        let h = QiSqrt2::inv_sqrt2();
        assert_eq!(&h * &h, QiSqrt2::from_rational(rational(1, 2)));
        assert_eq!(&h * &QiSqrt2::sqrt2(), QiSqrt2::one());
    }

    #[test]
    fn i_squared_is_minus_one() {
        assert_eq!(QiSqrt2::i().pow(2), QiSqrt2::from_int(-1));
    }

    #[test]
    fn inverse_round_trips() {
        let z = &(&QiSqrt2::from_int(3) + &QiSqrt2::i())
            + &(&QiSqrt2::sqrt2() * &QiSqrt2::from_int(-2));
        let inv = z.inv().unwrap();
        assert_eq!(&z * &inv, QiSqrt2::one());
        assert!(QiSqrt2::zero().inv().is_none());
    }

    #[test]
    fn norm_of_circular_amplitude() {
        // |(1 + i)/√2|² = 1
        let z = &(&QiSqrt2::one() + &QiSqrt2::i()) * &QiSqrt2::inv_sqrt2();
        assert_eq!(z.norm_sqr(), QSqrt2::from_rational(integer(1)));
    }

    #[test]
    fn signum_of_surds() {
        assert_eq!(QSqrt2::new(integer(-1), integer(1)).signum(), 1);
        assert_eq!(QSqrt2::new(integer(2), integer(-2)).signum(), -1);
        assert_eq!(QSqrt2::new(integer(3), integer(-2)).signum(), 1);
        assert_eq!(QSqrt2::zero().signum(), 0);
    }

    #[test]
    fn division_in_real_subring() {
        let a = QSqrt2::new(integer(1), integer(1));
        let b = QSqrt2::new(integer(3), integer(-1));
        let q = a.checked_div(&b).unwrap();
        assert_eq!(&q * &b, a);
        assert!(a.checked_div(&QSqrt2::zero()).is_none());
    }

    #[test]
    fn display_forms() {
        assert_eq!(QiSqrt2::from_int(-2).to_string(), "-2");
        assert_eq!(QiSqrt2::inv_sqrt2().to_string(), "1/2·√2");
        assert_eq!((-&QiSqrt2::i()).to_string(), "-i");
        assert_eq!((&QiSqrt2::one() - &QiSqrt2::sqrt2()).to_string(), "1 - √2");
        assert_eq!(QiSqrt2::zero().to_string(), "0");
    }
}
