//! Numeric abstraction shared by plain evaluation and the adjoint layer.
//!
//! Programs are written once against [`Scalar`] and run either on `f64`
//! (primal only) or on [`Active`](crate::adjoint::Active), which records every
//! operation on the thread's adjoint tape.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    /// A value carrying no derivative information.
    fn constant(value: f64) -> Self;

    fn primal(self) -> f64;

    /// Applies an elementary function whose value and derivative at
    /// `self.primal()` have already been computed.
    fn lift(self, value: f64, derivative: f64) -> Self;

    fn exp(self) -> Self {
        let e = self.primal().exp();
        self.lift(e, e)
    }

    /// Natural logarithm; non-positive arguments yield NaN.
    fn ln(self) -> Self {
        let x = self.primal();
        self.lift(x.ln(), 1.0 / x)
    }

    /// Square root; negative arguments yield NaN.
    fn sqrt(self) -> Self {
        let r = self.primal().sqrt();
        self.lift(r, 0.5 / r)
    }

    fn powi(self, n: i32) -> Self {
        let x = self.primal();
        let d = if n == 0 { 0.0 } else { n as f64 * x.powi(n - 1) };
        self.lift(x.powi(n), d)
    }

    fn square(self) -> Self {
        self * self
    }

    fn zero() -> Self {
        Self::constant(0.0)
    }

    fn one() -> Self {
        Self::constant(1.0)
    }
}

impl Scalar for f64 {
    #[inline]
    fn constant(value: f64) -> Self {
        value
    }

    #[inline]
    fn primal(self) -> f64 {
        self
    }

    #[inline]
    fn lift(self, value: f64, _derivative: f64) -> Self {
        value
    }

    fn exp(self) -> Self {
        f64::exp(self)
    }

    fn ln(self) -> Self {
        f64::ln(self)
    }

    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }

    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
}
