//! Scalar abstractions.
//!
//! [`Real`] is the coefficient type of every computation (`f32` or `f64`).
//! [`Scalar`] is what smooth fields are evaluated over: either a plain real or a
//! truncated Taylor [`Jet`](crate::jets::Jet) carrying derivatives along.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point coefficient type: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + LowerExp
    + Default
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
    + 'static
    + Scalar<Self>
{
    /// Lossy conversion from an `f64` literal.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

/// Anything a smooth field can be evaluated over.
pub trait Scalar<T: Real>:
    Clone
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<T, Output = Self>
    + Sub<T, Output = Self>
    + Mul<T, Output = Self>
    + Div<T, Output = Self>
{
    fn from_real(v: T) -> Self;
    /// Value part (constant Taylor coefficient for jets).
    fn re(&self) -> T;
    fn sqrt(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn recip(&self) -> Self;
    fn powi(&self, k: i32) -> Self;
    fn powf(&self, e: T) -> Self;
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Scalar<$t> for $t {
            #[inline]
            fn from_real(v: $t) -> Self {
                v
            }
            #[inline]
            fn re(&self) -> $t {
                *self
            }
            #[inline]
            fn sqrt(&self) -> Self {
                <$t>::sqrt(*self)
            }
            #[inline]
            fn sin(&self) -> Self {
                <$t>::sin(*self)
            }
            #[inline]
            fn cos(&self) -> Self {
                <$t>::cos(*self)
            }
            #[inline]
            fn exp(&self) -> Self {
                <$t>::exp(*self)
            }
            #[inline]
            fn ln(&self) -> Self {
                <$t>::ln(*self)
            }
            #[inline]
            fn recip(&self) -> Self {
                <$t>::recip(*self)
            }
            #[inline]
            fn powi(&self, k: i32) -> Self {
                <$t>::powi(*self, k)
            }
            #[inline]
            fn powf(&self, e: $t) -> Self {
                <$t>::powf(*self, e)
            }
        }

        impl Real for $t {}
    };
}

impl_real!(f32);
impl_real!(f64);

/// Shorthand for `T::lit`.
#[inline]
pub fn lit<T: Real>(v: f64) -> T {
    T::lit(v)
}

/// Relative deviation `|a - b| / (1 + |b|)`, the comparison used across the test suites.
pub fn rel_dev<T: Real>(a: T, b: T) -> T {
    (a - b).abs() / (T::one() + b.abs())
}

/// Display adaptor for the 17-significant-digit float format used in reports.
pub struct Sig17<T>(pub T);

impl<T: Real> Display for Sig17<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.16e}", self.0.to_f64_lossy())
    }
}
