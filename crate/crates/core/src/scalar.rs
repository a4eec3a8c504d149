//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::{de::DeserializeOwned, Serialize};

/// Real floating point type the simulator can run on (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + rustfft::FftNum
    + Default
    + Debug
    + Display
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Never fails for the supported types.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite conversion to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `r·e^{iφ}`.
#[inline]
pub fn polar<T: Real>(magnitude: T, phase: T) -> Complex<T> {
    Complex::from_polar(magnitude, phase)
}

/// `i·z`.
#[inline]
pub(crate) fn times_i<T: Real>(z: Complex<T>) -> Complex<T> {
    Complex::new(-z.im, z.re)
}

/// Trapezoidal integral of samples over a possibly non-uniform abscissa.
pub fn trapezoid<T: Real>(t: &[T], y: &[T]) -> T {
    debug_assert_eq!(t.len(), y.len());
    t.windows(2)
        .zip(y.windows(2))
        .fold(T::zero(), |acc, (tw, yw)| {
            acc + (tw[1] - tw[0]) * (yw[0] + yw[1]) * T::lit(0.5)
        })
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_positive<T: Real>(x: T) -> T {
    let tau = T::TAU();
    let r = x % tau;
    if r < T::zero() {
        r + tau
    } else {
        r
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_symmetric<T: Real>(x: T) -> T {
    let w = wrap_positive(x);
    if w > T::PI() {
        w - T::TAU()
    } else {
        w
    }
}
