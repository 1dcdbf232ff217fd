//! Double-word ("double-double") arithmetic for the small, badly
//! conditioned solves behind EFI and PEB.
//!
//! A value is `hi + lo` with `|lo| <= ulp(hi)/2`; products use a fused
//! multiply-add to capture the rounding error exactly.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{One, Zero};

use super::matrix::Matrix;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dd<T> {
    pub hi: T,
    pub lo: T,
}

#[inline]
fn two_sum<T: Real>(a: T, b: T) -> (T, T) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum<T: Real>(a: T, b: T) -> (T, T) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod<T: Real>(a: T, b: T) -> (T, T) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl<T: Real> Dd<T> {
    pub fn new(x: T) -> Self {
        Self { hi: x, lo: T::zero() }
    }

    pub fn to_scalar(self) -> T {
        self.hi + self.lo
    }

    pub fn abs(self) -> Self {
        if self.hi < T::zero() {
            -self
        } else {
            self
        }
    }
}

impl<T: Real> Add for Dd<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Self { hi, lo }
    }
}

impl<T: Real> Neg for Dd<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self { hi: -self.hi, lo: -self.lo }
    }
}

impl<T: Real> Sub for Dd<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl<T: Real> Mul for Dd<T> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Self { hi, lo }
    }
}

impl<T: Real> Div for Dd<T> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        // Long division: two quotient digits plus a correction.
        let q1 = self.hi / o.hi;
        let r = self - o * Self::new(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Self::new(q2);
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Self { hi, lo } + Self::new(q3)
    }
}

impl<T: Real> Zero for Dd<T> {
    fn zero() -> Self {
        Self::new(T::zero())
    }
    fn is_zero(&self) -> bool {
        self.hi.is_zero() && self.lo.is_zero()
    }
}

impl<T: Real> One for Dd<T> {
    fn one() -> Self {
        Self::new(T::one())
    }
}

/// Gauss-Jordan inverse with partial pivoting in double-word precision.
/// `None` when a pivot vanishes.
pub fn inverse<T: Real>(m: &Matrix<T>) -> Option<Matrix<Dd<T>>> {
    let n = m.rows();
    let mut a = m.map(Dd::new);
    let mut inv = Matrix::<Dd<T>>::identity(n);
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[(i, col)]
                .abs()
                .hi
                .partial_cmp(&a[(j, col)].abs().hi)
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[(pivot, col)].hi == T::zero() || !a[(pivot, col)].hi.is_finite() {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                let (x, y) = (a[(col, j)], a[(pivot, j)]);
                a[(col, j)] = y;
                a[(pivot, j)] = x;
                let (x, y) = (inv[(col, j)], inv[(pivot, j)]);
                inv[(col, j)] = y;
                inv[(pivot, j)] = x;
            }
        }
        let p = a[(col, col)];
        for j in 0..n {
            a[(col, j)] = a[(col, j)] / p;
            inv[(col, j)] = inv[(col, j)] / p;
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let f = a[(i, col)];
            if f.is_zero() {
                continue;
            }
            for j in 0..n {
                let (acj, icj) = (a[(col, j)], inv[(col, j)]);
                a[(i, j)] = a[(i, j)] - f * acj;
                inv[(i, j)] = inv[(i, j)] - f * icj;
            }
        }
    }
    Some(inv)
}

/// Rounds a double-word matrix to working precision.
pub fn round<T: Real>(m: &Matrix<Dd<T>>) -> Matrix<T> {
    m.map(Dd::to_scalar)
}
