//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Real floating point type the bound engine is generic over (`f32` or `f64`).
///
/// All tolerances quoted in the documentation assume `f64`; `f32` is
/// supported for quick exploratory runs where ~1e-4 relative accuracy is
/// sufficient.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    /// Converts a count into the scalar type.
    #[inline]
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn two_pi() -> Self {
        Self::TAU()
    }

    /// Speed of light in m/s.
    #[inline]
    fn c() -> Self {
        Self::lit(SPEED_OF_LIGHT)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex sample type.
pub type Cplx<T> = Complex<T>;

/// `exp(j * phase)`.
#[inline]
pub fn cis<T: Real>(phase: T) -> Cplx<T> {
    Complex::new(phase.cos(), phase.sin())
}
