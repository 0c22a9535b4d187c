//! Scalar abstraction shared by the kinematics, dynamics and controller code.

use nalgebra as na;
use num_traits as nt;

/// Floating point types the math in this crate is generic over (`f32`, `f64`).
pub trait Real: Copy + nt::FloatConst + nt::FromPrimitive + na::RealField + na::Scalar {
    const ZERO: Self;
    const ONE: Self;
    const TWO: Self;
    const HALF: Self;
    const INFINITY: Self;
    /// Machine epsilon of the type.
    const EPSILON: Self;

    fn lit(value: f64) -> Self;

    fn to_f64(self) -> f64;
}

macro_rules! impl_real {
    ($f:ty) => {
        impl Real for $f {
            const ZERO: Self = 0.0;
            const ONE: Self = 1.0;
            const TWO: Self = 2.0;
            const HALF: Self = 0.5;
            const INFINITY: Self = <$f>::INFINITY;
            const EPSILON: Self = <$f>::EPSILON;

            #[inline]
            fn lit(value: f64) -> Self {
                value as $f
            }

            #[inline]
            fn to_f64(self) -> f64 {
                self as f64
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

/// Converts a slice of `f64` into a dynamic vector of `T`.
pub fn dvector<T: Real>(values: &[f64]) -> na::DVector<T> {
    na::DVector::from_iterator(values.len(), values.iter().map(|&v| T::lit(v)))
}

/// Returns `true` when every entry of `m` is finite.
pub fn all_finite<T: Real, R: na::Dim, C: na::Dim, S: na::RawStorage<T, R, C>>(
    m: &na::Matrix<T, R, C, S>,
) -> bool {
    m.iter().all(|v| v.is_finite())
}
