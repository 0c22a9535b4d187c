//! Online-parameter filtering, saturation and torque rate limiting.

use nalgebra::allocator::Allocator;
use nalgebra::{DVector, DefaultAllocator, Dim, OMatrix, UnitQuaternion};

use super::ControllerError;
use crate::kinematics::{rotation_vector, CartesianPose};
use crate::Real;

/// Coefficient `a` of `α_{k+1} = (1 − a) α_k + a α_D` such that a fraction `fraction` of
/// the initial gap is closed after `time` seconds of steps of length `dt`:
/// `a = 1 − (1 − fraction)^(dt / time)`.
pub fn filter_coefficient<T: Real>(fraction: T, time: T, dt: T) -> Result<T, ControllerError> {
    if !(fraction > T::ZERO && fraction <= T::ONE) {
        return Err(ControllerError::Domain(format!(
            "filter fraction must lie in (0, 1], got {}",
            fraction.to_f64()
        )));
    }
    if !(dt > T::ZERO && dt.is_finite()) {
        return Err(ControllerError::Domain(format!("time step must be positive, got {}", dt.to_f64())));
    }
    if !(time >= dt && time.is_finite()) {
        return Err(ControllerError::Domain(format!(
            "filter time {} must be at least one time step ({})",
            time.to_f64(),
            dt.to_f64()
        )));
    }
    // 1 − exp((dt/T)·ln(1 − p)), written to keep precision for small dt/T.
    Ok(-((dt / time) * (-fraction).ln_1p()).exp_m1())
}

/// One step of the first-order filter on a vector or matrix value.
pub fn filter_toward<T: Real, R: Dim, C: Dim>(
    current: &OMatrix<T, R, C>,
    desired: &OMatrix<T, R, C>,
    a: T,
) -> OMatrix<T, R, C>
where
    DefaultAllocator: Allocator<R, C>,
{
    current.zip_map(desired, |c, d| (T::ONE - a) * c + a * d)
}

/// The filter law on poses: translation linearly, orientation along the shortest
/// geodesic by the same fraction `a`.
pub fn filter_pose<T: Real>(current: &CartesianPose<T>, desired: &CartesianPose<T>, a: T) -> CartesianPose<T> {
    let translation = filter_toward(&current.translation, &desired.translation, a);
    let remaining = rotation_vector(&(desired.orientation * current.orientation.inverse()));
    let orientation = UnitQuaternion::from_scaled_axis(remaining * a) * current.orientation;
    CartesianPose {
        translation,
        orientation: UnitQuaternion::new_normalize(orientation.into_inner()),
    }
}

/// Elementwise clamp of `value` into `[lower, upper]`.
pub fn saturate<T: Real, R: Dim, C: Dim>(
    value: &OMatrix<T, R, C>,
    lower: &OMatrix<T, R, C>,
    upper: &OMatrix<T, R, C>,
) -> OMatrix<T, R, C>
where
    DefaultAllocator: Allocator<R, C>,
{
    value.zip_zip_map(lower, upper, |v, lo, hi| v.max(lo).min(hi))
}

/// Elementwise bounds for a gain matrix or wrench.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds<M> {
    pub lower: M,
    pub upper: M,
}

impl<T: Real, R: Dim, C: Dim> Bounds<OMatrix<T, R, C>>
where
    DefaultAllocator: Allocator<R, C>,
{
    pub fn new(lower: OMatrix<T, R, C>, upper: OMatrix<T, R, C>) -> Result<Self, ControllerError> {
        if lower.shape() != upper.shape() {
            return Err(ControllerError::InvalidLimits("bound shapes differ".into()));
        }
        if lower.iter().zip(upper.iter()).any(|(lo, hi)| !(lo <= hi)) {
            return Err(ControllerError::InvalidLimits("lower bound exceeds upper bound".into()));
        }
        Ok(Self { lower, upper })
    }

    pub fn unbounded(shape: (R, C)) -> Self {
        Self {
            lower: OMatrix::from_element_generic(shape.0, shape.1, -T::INFINITY),
            upper: OMatrix::from_element_generic(shape.0, shape.1, T::INFINITY),
        }
    }

    pub fn clamp(&self, value: &OMatrix<T, R, C>) -> OMatrix<T, R, C> {
        saturate(value, &self.lower, &self.upper)
    }

    pub fn contains(&self, value: &OMatrix<T, R, C>) -> bool {
        value
            .iter()
            .zip(self.lower.iter().zip(self.upper.iter()))
            .all(|(v, (lo, hi))| lo <= v && v <= hi)
    }

    pub fn shape(&self) -> (usize, usize) {
        self.lower.shape()
    }
}

/// Limits the Euclidean norm of the torque change between consecutive commands,
/// keeping its direction.
pub fn rate_limit<T: Real>(previous: &DVector<T>, proposed: &DVector<T>, max_step: T) -> DVector<T> {
    let delta = proposed - previous;
    let norm = delta.norm();
    if norm <= max_step {
        proposed.clone()
    } else {
        previous + delta * (max_step / norm)
    }
}
