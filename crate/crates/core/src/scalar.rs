//! Floating-point abstraction shared by the geometry, plant, observer and
//! control code.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Real scalar usable by the tracking math: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Panics only if the target type cannot hold
    /// a finite value, which does not happen for `f32`/`f64`.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Wraps an angle to `(-π, π]`.
pub fn wrap_angle<T: Scalar>(a: T) -> T {
    let two_pi = T::TAU();
    let mut w = a % two_pi;
    if w <= -T::PI() {
        w = w + two_pi;
    } else if w > T::PI() {
        w = w - two_pi;
    }
    w
}

/// Clamps `v` to `[-limit, limit]`.
#[inline]
pub fn clamp_sym<T: Scalar>(v: T, limit: T) -> T {
    v.max(-limit).min(limit)
}
