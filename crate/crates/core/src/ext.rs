//! Double-word ("double-double") real and complex arithmetic.
//!
//! Values are unevaluated sums `hi + lo` with `|lo| <= ulp(hi)/2`, giving
//! about 32 significant decimal digits. Only what the oracle needs is here:
//! the four operations, square root, and exp/ln/sin/cos/sinh.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::OnceLock;

use num_complex::Complex64;

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let v = s - a;
    (s, (a - (s - v)) + (b - v))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

// Dekker splitting keeps the product exact without relying on a hardware FMA.
#[inline]
fn split(a: f64) -> (f64, f64) {
    const SPLITTER: f64 = 134_217_729.0; // 2^27 + 1
    if a.abs() > 6.696_928_794_914_17e299 {
        let s = a * 3.725_290_298_461_914e-9;
        let t = SPLITTER * s;
        let hi = t - (t - s);
        let lo = s - hi;
        (hi * 268_435_456.0, lo * 268_435_456.0)
    } else {
        let t = SPLITTER * a;
        let hi = t - (t - a);
        (hi, a - hi)
    }
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    let e = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
    (p, e)
}

/// Real number carried as `hi + lo`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ExtReal {
    pub hi: f64,
    pub lo: f64,
}

impl ExtReal {
    pub const ZERO: Self = Self { hi: 0.0, lo: 0.0 };
    pub const ONE: Self = Self { hi: 1.0, lo: 0.0 };
    pub const PI: Self = Self {
        hi: std::f64::consts::PI,
        lo: 1.224_646_799_147_353_2e-16,
    };
    pub const FRAC_PI_2: Self = Self {
        hi: std::f64::consts::FRAC_PI_2,
        lo: 6.123_233_995_736_766e-17,
    };
    pub const LN_2: Self = Self {
        hi: std::f64::consts::LN_2,
        lo: 2.319_046_813_846_299_6e-17,
    };

    #[inline]
    pub fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = quick_two_sum(hi, lo);
        Self { hi, lo }
    }

    #[inline]
    pub const fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    /// Exact sum of two doubles.
    #[inline]
    pub fn from_sum(a: f64, b: f64) -> Self {
        let (hi, lo) = two_sum(a, b);
        Self { hi, lo }
    }

    /// Exact product of two doubles.
    #[inline]
    pub fn from_prod(a: f64, b: f64) -> Self {
        let (hi, lo) = two_prod(a, b);
        Self { hi, lo }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    #[inline]
    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let e = e + self.lo * b;
        let (hi, lo) = quick_two_sum(p, e);
        Self { hi, lo }
    }

    #[inline]
    pub fn add_f64(self, b: f64) -> Self {
        let (s, e) = two_sum(self.hi, b);
        let (hi, lo) = quick_two_sum(s, e + self.lo);
        Self { hi, lo }
    }

    #[inline]
    pub fn sqr(self) -> Self {
        let (p, e) = two_prod(self.hi, self.hi);
        let e = e + 2.0 * self.hi * self.lo;
        let (hi, lo) = quick_two_sum(p, e);
        Self { hi, lo }
    }

    #[inline]
    pub fn recip(self) -> Self {
        Self::ONE / self
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return if self.hi == 0.0 {
                Self::ZERO
            } else {
                Self::from_f64(f64::NAN)
            };
        }
        // One Newton step on the double approximation doubles the digits.
        let x = self.hi.sqrt();
        let xx = Self::from_prod(x, x);
        let corr = (self - xx).hi * (0.5 / x);
        Self::from_sum(x, corr)
    }

    /// Nearest integer as f64 (ties away from zero).
    pub fn round(self) -> f64 {
        let r = self.hi.round();
        if r == self.hi {
            // hi already integral; lo decides the direction near .5 ties
            let rl = self.lo.round();
            r + rl
        } else if (r - self.hi).abs() == 0.5 {
            // exact half in hi: lo breaks the tie
            if self.lo > 0.0 {
                self.hi.ceil()
            } else if self.lo < 0.0 {
                self.hi.floor()
            } else {
                r
            }
        } else {
            r
        }
    }

    pub fn exp(self) -> Self {
        if self.hi > 709.0 {
            return Self::from_f64(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Self::ZERO;
        }
        let n = (self.hi / std::f64::consts::LN_2).round();
        let r = self - Self::LN_2.mul_f64(n);
        // exp(r) = exp(r/2^8)^(2^8)
        let r = r.mul_f64(1.0 / 256.0);
        let coeffs = inv_factorials();
        let mut acc = coeffs[13];
        for j in (1..13).rev() {
            acc = acc * r + coeffs[j];
        }
        // acc = sum_{j>=1} r^{j-1}/j!  =>  expm1(r) = r*acc
        let mut em1 = acc * r;
        for _ in 0..8 {
            // (1+e)^2 - 1 = e*(2+e)
            em1 = em1 * em1.add_f64(2.0);
        }
        let e = em1.add_f64(1.0);
        Self {
            hi: e.hi * 2f64.powi(n as i32),
            lo: e.lo * 2f64.powi(n as i32),
        }
    }

    pub fn ln(self) -> Self {
        if self.hi <= 0.0 {
            return Self::from_f64(f64::NAN);
        }
        let mut y = Self::from_f64(self.hi.ln());
        for _ in 0..2 {
            y = y + self * (-y).exp() - Self::ONE;
        }
        y
    }

    pub fn sinh(self) -> Self {
        if self.hi.abs() < 0.5 {
            // odd Taylor series, no cancellation
            let x2 = self.sqr();
            let coeffs = inv_factorials();
            let mut acc = coeffs[31];
            let mut j = 29;
            while j >= 1 {
                acc = acc * x2 + coeffs[j];
                if j == 1 {
                    break;
                }
                j -= 2;
            }
            acc * self
        } else {
            let e = self.exp();
            (e - e.recip()).mul_f64(0.5)
        }
    }

    pub fn cosh(self) -> Self {
        let e = self.abs().exp();
        (e + e.recip()).mul_f64(0.5)
    }

    /// Simultaneous sine and cosine.
    pub fn sin_cos(self) -> (Self, Self) {
        let n = (self / Self::FRAC_PI_2).round();
        let r = self - Self::FRAC_PI_2.mul_f64(n) - pi_2_tail().mul_f64(n);
        let s = sin_taylor(r);
        let c = (Self::ONE - s.sqr()).sqrt();
        let q = (n as i64).rem_euclid(4);
        match q {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }

    #[inline]
    pub fn sin(self) -> Self {
        self.sin_cos().0
    }

    #[inline]
    pub fn cos(self) -> Self {
        self.sin_cos().1
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }
}

// Third word of pi/2, so that argument reduction stays accurate for |x| up to ~1e5.
fn pi_2_tail() -> ExtReal {
    ExtReal::from_f64(-1.497_384_904_859_169_8e-33)
}

fn sin_taylor(r: ExtReal) -> ExtReal {
    // sin r = r * sum_n (-1)^n r^{2n} / (2n+1)!,  |r| <= pi/4
    let x2 = r.sqr();
    let coeffs = inv_factorials();
    let term = |n: usize| {
        if n % 2 == 0 {
            coeffs[2 * n + 1]
        } else {
            -coeffs[2 * n + 1]
        }
    };
    let mut acc = term(13);
    for n in (0..13).rev() {
        acc = acc * x2 + term(n);
    }
    acc * r
}

fn inv_factorials() -> &'static [ExtReal; 32] {
    static TABLE: OnceLock<[ExtReal; 32]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [ExtReal::ONE; 32];
        let mut f = ExtReal::ONE;
        for (j, slot) in t.iter_mut().enumerate().skip(1) {
            f = f / ExtReal::from_f64(j as f64);
            *slot = f;
        }
        t
    })
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e} + {:e}", self.hi, self.lo)
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            o => o,
        }
    }
}

impl From<f64> for ExtReal {
    fn from(x: f64) -> Self {
        Self::from_f64(x)
    }
}

impl Neg for ExtReal {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for ExtReal {
    type Output = Self;
    #[inline]
    fn add(self, b: Self) -> Self {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let s2 = s2 + t1;
        let (s1, s2) = quick_two_sum(s1, s2);
        let s2 = s2 + t2;
        let (hi, lo) = quick_two_sum(s1, s2);
        Self { hi, lo }
    }
}

impl Add<f64> for ExtReal {
    type Output = Self;
    #[inline]
    fn add(self, b: f64) -> Self {
        self.add_f64(b)
    }
}

impl Sub for ExtReal {
    type Output = Self;
    #[inline]
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Sub<f64> for ExtReal {
    type Output = Self;
    #[inline]
    fn sub(self, b: f64) -> Self {
        self.add_f64(-b)
    }
}

impl Mul for ExtReal {
    type Output = Self;
    #[inline]
    fn mul(self, b: Self) -> Self {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Self { hi, lo }
    }
}

impl Mul<f64> for ExtReal {
    type Output = Self;
    #[inline]
    fn mul(self, b: f64) -> Self {
        self.mul_f64(b)
    }
}

impl Div for ExtReal {
    type Output = Self;
    fn div(self, b: Self) -> Self {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Self { hi, lo }.add_f64(q3)
    }
}

impl Div<f64> for ExtReal {
    type Output = Self;
    fn div(self, b: f64) -> Self {
        self / Self::from_f64(b)
    }
}

impl AddAssign for ExtReal {
    #[inline]
    fn add_assign(&mut self, b: Self) {
        *self = *self + b;
    }
}

impl SubAssign for ExtReal {
    #[inline]
    fn sub_assign(&mut self, b: Self) {
        *self = *self - b;
    }
}

impl MulAssign for ExtReal {
    #[inline]
    fn mul_assign(&mut self, b: Self) {
        *self = *self * b;
    }
}

/// Complex number with double-word parts.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ExtComplex {
    pub re: ExtReal,
    pub im: ExtReal,
}

impl ExtComplex {
    pub const ZERO: Self = Self {
        re: ExtReal::ZERO,
        im: ExtReal::ZERO,
    };
    pub const ONE: Self = Self {
        re: ExtReal::ONE,
        im: ExtReal::ZERO,
    };
    pub const I: Self = Self {
        re: ExtReal::ZERO,
        im: ExtReal::ONE,
    };

    #[inline]
    pub fn new(re: ExtReal, im: ExtReal) -> Self {
        Self { re, im }
    }

    #[inline]
    pub fn from_real(re: ExtReal) -> Self {
        Self {
            re,
            im: ExtReal::ZERO,
        }
    }

    pub fn from_c64(z: Complex64) -> Self {
        Self::new(z.re.into(), z.im.into())
    }

    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    #[inline]
    pub fn scale(self, s: ExtReal) -> Self {
        Self::new(self.re * s, self.im * s)
    }

    #[inline]
    pub fn norm_sqr(self) -> ExtReal {
        self.re.sqr() + self.im.sqr()
    }

    pub fn norm(self) -> ExtReal {
        self.norm_sqr().sqrt()
    }

    /// e^{i x} for real x.
    pub fn cis(x: ExtReal) -> Self {
        let (s, c) = x.sin_cos();
        Self::new(c, s)
    }

    /// Principal square root.
    pub fn sqrt(self) -> Self {
        if self.re.hi == 0.0 && self.im.hi == 0.0 {
            return Self::ZERO;
        }
        let r = self.norm();
        if self.re.hi >= 0.0 {
            let t = ((r + self.re).mul_f64(0.5)).sqrt();
            Self::new(t, self.im / t.mul_f64(2.0))
        } else {
            let t = ((r - self.re).mul_f64(0.5)).sqrt();
            let t = if self.im.hi < 0.0 { -t } else { t };
            Self::new(self.im / t.mul_f64(2.0), t)
        }
    }

    pub fn recip(self) -> Self {
        let d = self.norm_sqr();
        Self::new(self.re / d, -self.im / d)
    }
}

impl Neg for ExtComplex {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.re, -self.im)
    }
}

impl Add for ExtComplex {
    type Output = Self;
    #[inline]
    fn add(self, b: Self) -> Self {
        Self::new(self.re + b.re, self.im + b.im)
    }
}

impl Sub for ExtComplex {
    type Output = Self;
    #[inline]
    fn sub(self, b: Self) -> Self {
        Self::new(self.re - b.re, self.im - b.im)
    }
}

impl Mul for ExtComplex {
    type Output = Self;
    #[inline]
    fn mul(self, b: Self) -> Self {
        Self::new(
            self.re * b.re - self.im * b.im,
            self.re * b.im + self.im * b.re,
        )
    }
}

impl Mul<ExtReal> for ExtComplex {
    type Output = Self;
    #[inline]
    fn mul(self, b: ExtReal) -> Self {
        self.scale(b)
    }
}

impl Div for ExtComplex {
    type Output = Self;
    fn div(self, b: Self) -> Self {
        self * b.recip()
    }
}

impl AddAssign for ExtComplex {
    #[inline]
    fn add_assign(&mut self, b: Self) {
        *self = *self + b;
    }
}
