//! Forward-mode dual numbers.
//!
//! The manufactured forcing needs two tangential derivatives of analytic
//! expressions; nesting `Dual<Dual<f64>>` provides those without hand-derived
//! formulas. The `Scalar` trait lets the analytic geometry expressions run
//! unchanged on `f64` and on (nested) duals.

use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(x: f64) -> Self;
    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
    fn sqrt(self) -> Self;
    /// Primal value, all derivative parts stripped.
    fn value(self) -> f64;
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn value(self) -> f64 {
        self
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Dual<T> {
    pub re: T,
    pub eps: T,
}

impl<T: Scalar> Dual<T> {
    pub fn new(re: T, eps: T) -> Self {
        Dual { re, eps }
    }
    pub fn constant(re: T) -> Self {
        Dual { re, eps: T::zero() }
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Dual::new(self.re + o.re, self.eps + o.eps)
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Dual::new(self.re - o.re, self.eps - o.eps)
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Dual::new(self.re * o.re, self.re * o.eps + self.eps * o.re)
    }
}

impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = T::one() / o.re;
        Dual::new(self.re * inv, (self.eps - self.re * inv * o.eps) * inv)
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual::new(-self.re, -self.eps)
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    fn from_f64(x: f64) -> Self {
        Dual::constant(T::from_f64(x))
    }
    fn sqrt(self) -> Self {
        let r = self.re.sqrt();
        Dual::new(r, self.eps / (T::from_f64(2.0) * r))
    }
    fn value(self) -> f64 {
        self.re.value()
    }
}

/// Lift a point, seeding the derivative part with `dir`.
pub fn seed<S: Scalar>(x: [S; 3], dir: [f64; 3]) -> [Dual<S>; 3] {
    [
        Dual::new(x[0], S::from_f64(dir[0])),
        Dual::new(x[1], S::from_f64(dir[1])),
        Dual::new(x[2], S::from_f64(dir[2])),
    ]
}

pub fn dot3<S: Scalar>(a: [S; 3], b: [S; 3]) -> S {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn sub3<S: Scalar>(a: [S; 3], b: [S; 3]) -> [S; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn scale3<S: Scalar>(s: S, a: [S; 3]) -> [S; 3] {
    [s * a[0], s * a[1], s * a[2]]
}
