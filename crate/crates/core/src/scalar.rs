//! Scalar abstraction shared by the numerical kernels.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point type the transforms and quality metrics are generic over.
///
/// Implemented for `f32` and `f64`. The watermarking layers above are written
/// against `f64` only.
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
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("usize representable")
    }

    /// Pixel sample as a scalar.
    #[inline]
    fn px(v: u8) -> Self {
        Self::lit(f64::from(v))
    }
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {}
    };
}

impl_real!(f32);
impl_real!(f64);

/// Round half away from zero and clamp into the 8-bit sample range.
#[inline]
pub fn to_pixel<T: Real>(v: T) -> u8 {
    let r = v.round();
    if r.is_nan() || r <= T::zero() {
        0
    } else if r >= T::lit(255.0) {
        255
    } else {
        r.to_u8().unwrap_or(255)
    }
}
