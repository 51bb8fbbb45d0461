//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating-point type the simulator is generic over (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Every value used in the crate is
    /// representable in both supported types, so this never fails.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex amplitude over a [`Real`] scalar.
pub type Cplx<T> = Complex<T>;

#[cfg(test)]
#[inline]
pub(crate) fn c<T: Real>(re: T, im: T) -> Cplx<T> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn re<T: Real>(x: T) -> Cplx<T> {
    Complex::new(x, T::zero())
}

/// `i * x`
#[inline]
pub(crate) fn im<T: Real>(x: T) -> Cplx<T> {
    Complex::new(T::zero(), x)
}

/// `exp(i * phase)`
#[inline]
pub(crate) fn cis<T: Real>(phase: T) -> Cplx<T> {
    Complex::new(phase.cos(), phase.sin())
}
