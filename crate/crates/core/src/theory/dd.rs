//! Double-double arithmetic: an unevaluated sum `hi + lo` with about 106
//! bits of significand. Only the operations the error-rate sums need.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

const LN2: DoubleDouble = DoubleDouble {
    hi: std::f64::consts::LN_2,
    lo: 2.3190468138462996e-17,
};

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    pub const ZERO: Self = Self { hi: 0.0, lo: 0.0 };
    pub const ONE: Self = Self { hi: 1.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    /// Exact for every u128 below 2^106.
    pub fn from_u128(x: u128) -> Self {
        let hi = x as f64;
        // `hi` rounds to nearest, so the remainder fits a signed 64-bit-ish range.
        let rem = x as i128 - hi as i128;
        let (hi, lo) = quick_two_sum(hi, rem as f64);
        Self { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let e = e + self.lo * b;
        let (hi, lo) = quick_two_sum(p, e);
        Self { hi, lo }
    }

    pub fn div_f64(self, b: f64) -> Self {
        let q1 = self.hi / b;
        let r = self - Self::from_f64(b).mul_f64(q1);
        let q2 = r.hi / b;
        let r = r - Self::from_f64(b).mul_f64(q2);
        let q3 = r.hi / b;
        let (hi, lo) = quick_two_sum(q1, q2);
        Self { hi, lo } + Self::from_f64(q3)
    }

    fn ldexp(self, exp: i32) -> Self {
        let scale = 2f64.powi(exp);
        Self {
            hi: self.hi * scale,
            lo: self.lo * scale,
        }
    }

    /// exp(x) to roughly double-double accuracy.
    ///
    /// Reduces `x = k ln2 + r`, evaluates `expm1(r / 1024)` by Taylor series,
    /// then undoes the scaling with ten applications of
    /// `expm1(2t) = expm1(t) (2 + expm1(t))`.
    pub fn exp(self) -> Self {
        if self.hi < -745.2 {
            return Self::ZERO;
        }
        if self.hi > 709.7 {
            return Self::from_f64(f64::INFINITY);
        }
        let k = (self.hi / LN2.hi).round();
        let r = (self - LN2.mul_f64(k)).ldexp(-10);
        let mut term = r;
        let mut sum = r;
        for n in 2..=14 {
            term = (term * r).div_f64(n as f64);
            sum = sum + term;
            if term.hi.abs() < 1e-36 {
                break;
            }
        }
        for _ in 0..10 {
            sum = sum * (sum + Self::from_f64(2.0));
        }
        (sum + Self::ONE).ldexp(k as i32)
    }
}

impl Add for DoubleDouble {
    type Output = Self;
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

impl Neg for DoubleDouble {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    fn mul(self, b: Self) -> Self {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Self { hi, lo }
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    fn div(self, b: Self) -> Self {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Self { hi, lo } + Self::from_f64(q3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn u128_conversion_is_exact() {
        let c: u128 = 916_312_070_471_295_267; // C(63, 31)
        let d = DoubleDouble::from_u128(c);
        assert_eq!(d.hi as i128 + d.lo as i128, c as i128);
    }

    #[test]
    fn exp_matches_libm_in_double() {
        for &x in &[-30.0, -5.5, -1.0, -1e-3, 0.0, 0.5, 3.0, 20.0] {
            let e = DoubleDouble::from_f64(x).exp().to_f64();
            let reference: f64 = f64::exp(x);
            assert!(((e - reference) / reference).abs() < 4e-16, "{x}");
        }
    }

    #[test]
    fn exp_of_sum_is_product() {
        // exp(a) exp(b) = exp(a + b) must hold far beyond double precision.
        let a = DoubleDouble::from_f64(-3.75);
        let b = DoubleDouble::from_f64(-1.0).div_f64(3.0);
        let lhs = a.exp() * b.exp();
        let rhs = (a + b).exp();
        let rel = ((lhs - rhs).to_f64() / rhs.to_f64()).abs();
        assert!(rel < 1e-29, "{rel:e}");
    }

    #[test]
    fn division_round_trip() {
        let third = DoubleDouble::ONE.div_f64(3.0);
        let back = third.mul_f64(3.0) - DoubleDouble::ONE;
        assert!(back.to_f64().abs() < 1e-31);
        let q = DoubleDouble::from_f64(7.0) / DoubleDouble::from_f64(3.0);
        let r = (q * DoubleDouble::from_f64(3.0) - DoubleDouble::from_f64(7.0)).to_f64();
        assert!(r.abs() < 1e-30);
    }
}
