//! Forward kinematics, the geometric Jacobian, and the task-space pose error.

use nalgebra::{DMatrix, DVector, Isometry3, Matrix3, Quaternion, UnitQuaternion, Vector3, Vector6};

use crate::model::KinematicChain;
use crate::{DimensionError, Real};

/// Position plus unit-quaternion orientation of a frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianPose<T: Real> {
    pub translation: Vector3<T>,
    pub orientation: UnitQuaternion<T>,
}

/// Task-space pose error: translation (m) followed by an axis-angle rotation vector (rad).
pub type PoseError<T> = Vector6<T>;

/// 6×n geometric Jacobian: rows 0..3 map to linear velocity, rows 3..6 to angular.
pub type Jacobian<T> = DMatrix<T>;

/// Frame in which the pose error, Jacobian and commanded wrench are expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TaskFrame {
    #[default]
    Base,
    EndEffector,
}

impl<T: Real> CartesianPose<T> {
    /// Builds a pose, normalizing the quaternion `(w, x, y, z)`.
    pub fn new(translation: Vector3<T>, orientation: Quaternion<T>) -> Self {
        Self {
            translation,
            orientation: UnitQuaternion::from_quaternion(orientation),
        }
    }

    pub fn identity() -> Self {
        Self {
            translation: Vector3::zeros(),
            orientation: UnitQuaternion::identity(),
        }
    }

    pub fn from_isometry(iso: &Isometry3<T>) -> Self {
        Self {
            translation: iso.translation.vector,
            orientation: iso.rotation,
        }
    }

    pub fn to_isometry(&self) -> Isometry3<T> {
        Isometry3::from_parts(self.translation.into(), self.orientation)
    }

    pub fn rotation_matrix(&self) -> Matrix3<T> {
        self.orientation.to_rotation_matrix().into_inner()
    }
}

/// World poses of every joint frame (after the joint rotation) and of the tip.
#[derive(Debug, Clone)]
pub struct ChainFrames<T: Real> {
    pub joints: Vec<Isometry3<T>>,
    pub tip: Isometry3<T>,
}

pub fn chain_frames<T: Real>(chain: &KinematicChain<T>, q: &DVector<T>) -> Result<ChainFrames<T>, DimensionError> {
    DimensionError::check("joint positions", chain.dof(), q.len())?;
    let mut pose = Isometry3::identity();
    let mut joints = Vec::with_capacity(chain.dof());
    for (joint, &angle) in chain.joints().iter().zip(q.iter()) {
        pose = pose * joint.parent_to_joint * UnitQuaternion::from_axis_angle(&joint.axis, angle);
        joints.push(pose);
    }
    let tip = pose * chain.tip_offset();
    Ok(ChainFrames { joints, tip })
}

/// Pose of the tip frame in the base frame.
pub fn forward_kinematics<T: Real>(chain: &KinematicChain<T>, q: &DVector<T>) -> Result<CartesianPose<T>, DimensionError> {
    chain_frames(chain, q).map(|f| CartesianPose::from_isometry(&f.tip))
}

/// Geometric Jacobian of the tip frame origin, expressed in the base frame.
pub fn geometric_jacobian<T: Real>(chain: &KinematicChain<T>, q: &DVector<T>) -> Result<Jacobian<T>, DimensionError> {
    let frames = chain_frames(chain, q)?;
    Ok(jacobian_from_frames(chain, &frames))
}

pub fn jacobian_from_frames<T: Real>(chain: &KinematicChain<T>, frames: &ChainFrames<T>) -> Jacobian<T> {
    let p_tip = frames.tip.translation.vector;
    let mut jac = DMatrix::zeros(6, chain.dof());
    for (i, (joint, frame)) in chain.joints().iter().zip(&frames.joints).enumerate() {
        let z = frame.rotation * joint.axis.into_inner();
        let linear = z.cross(&(p_tip - frame.translation.vector));
        jac.fixed_view_mut::<3, 1>(0, i).copy_from(&linear);
        jac.fixed_view_mut::<3, 1>(3, i).copy_from(&z);
    }
    jac
}

/// Rotation vector (axis × angle) of `q`, taking the shorter of the two equivalent
/// rotations. At exactly π the sign is fixed so the largest-magnitude axis component is
/// positive (first index wins ties).
pub fn rotation_vector<T: Real>(q: &UnitQuaternion<T>) -> Vector3<T> {
    let mut w = q.w;
    let mut v = q.imag();
    if w < T::ZERO {
        w = -w;
        v = -v;
    }
    if w == T::ZERO {
        let mut pivot = 0;
        for k in 1..3 {
            if v[k].abs() > v[pivot].abs() {
                pivot = k;
            }
        }
        if v[pivot] < T::ZERO {
            v = -v;
        }
    }
    let s = v.norm();
    if s <= T::EPSILON {
        // atan2(s, w) / s → 1 / w as s → 0
        v * (T::TWO / w)
    } else {
        v * (T::TWO * s.atan2(w) / s)
    }
}

/// Δξ = (p − p_d, log(R R_dᵀ)): translational difference and the rotation vector of
/// `current ⊗ desired⁻¹`, both in the base frame.
pub fn pose_error<T: Real>(current: &CartesianPose<T>, desired: &CartesianPose<T>) -> PoseError<T> {
    let translational = current.translation - desired.translation;
    let rotational = if current.orientation == desired.orientation {
        Vector3::zeros()
    } else {
        rotation_vector(&(current.orientation * desired.orientation.inverse()))
    };
    Vector6::new(
        translational.x,
        translational.y,
        translational.z,
        rotational.x,
        rotational.y,
        rotational.z,
    )
}

/// Applies `rotation` to both 3-D halves of a twist or wrench.
pub fn rotate_six<T: Real>(rotation: &Matrix3<T>, v: &Vector6<T>) -> Vector6<T> {
    let lin = rotation * v.fixed_rows::<3>(0);
    let ang = rotation * v.fixed_rows::<3>(3);
    Vector6::new(lin.x, lin.y, lin.z, ang.x, ang.y, ang.z)
}

/// Left-multiplies a 6×n Jacobian by `blockdiag(rotation, rotation)`.
pub fn rotate_jacobian<T: Real>(rotation: &Matrix3<T>, jac: &Jacobian<T>) -> Jacobian<T> {
    let mut out = jac.clone();
    for block in [0, 3] {
        let rotated = rotation * jac.rows(block, 3);
        out.rows_mut(block, 3).copy_from(&rotated);
    }
    out
}
