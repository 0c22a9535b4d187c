use nalgebra::{self as na, Isometry3, Matrix3, Unit, Vector3};
use thiserror::Error;

use super::{JointKind, JointSpec, RobotModel};
use crate::Real;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error("unknown link '{0}'")]
    UnknownLink(String),
    #[error("no chain from '{base}' to '{tip}': {reason}")]
    Path {
        base: String,
        tip: String,
        reason: String,
    },
}

/// Mass properties of one rigid body: mass, center of mass, and the inertia tensor about
/// the center of mass, all in the body's own frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidBodyInertia<T: Real> {
    pub mass: T,
    pub com: Vector3<T>,
    pub inertia: Matrix3<T>,
}

impl<T: Real> RigidBodyInertia<T> {
    pub fn zero() -> Self {
        Self {
            mass: T::ZERO,
            com: Vector3::zeros(),
            inertia: Matrix3::zeros(),
        }
    }

    pub fn point_mass(mass: T, com: Vector3<T>) -> Self {
        Self {
            mass,
            com,
            inertia: Matrix3::zeros(),
        }
    }

    /// The same body described in a frame where this body's frame sits at `pose`.
    pub fn transformed(&self, pose: &Isometry3<T>) -> Self {
        let r = pose.rotation.to_rotation_matrix();
        Self {
            mass: self.mass,
            com: pose.transform_point(&self.com.into()).coords,
            inertia: r.matrix() * self.inertia * r.matrix().transpose(),
        }
    }

    /// Rigid union of two bodies expressed in the same frame.
    pub fn combined(&self, other: &Self) -> Self {
        let mass = self.mass + other.mass;
        if mass <= T::ZERO {
            return Self::zero();
        }
        let com = (self.com * self.mass + other.com * other.mass) / mass;
        let shifted = |b: &Self| {
            let d = b.com - com;
            b.inertia + (Matrix3::identity() * d.norm_squared() - d * d.transpose()) * b.mass
        };
        Self {
            mass,
            com,
            inertia: shifted(self) + shifted(other),
        }
    }
}

/// One actuated revolute joint together with the rigid body it moves.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainJoint<T: Real> {
    pub name: String,
    /// Pose of this joint's frame (at zero angle) in the previous joint's frame, or in
    /// the base frame for the first joint. Any fixed joints in between are folded in.
    pub parent_to_joint: Isometry3<T>,
    /// Rotation axis in the joint frame.
    pub axis: Unit<Vector3<T>>,
    pub position_limits: Option<[T; 2]>,
    pub effort_limit: Option<T>,
    /// Everything rigidly attached after this joint up to the next actuated joint,
    /// expressed in the joint frame.
    pub body: RigidBodyInertia<T>,
}

/// A base-to-tip serial chain of `n ≥ 1` revolute joints with a 6-D task space.
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicChain<T: Real> {
    base: String,
    tip: String,
    joints: Vec<ChainJoint<T>>,
    tip_offset: Isometry3<T>,
}

impl<T: Real> KinematicChain<T> {
    /// Task-space dimension (3 translational + 3 rotational).
    pub const TASK_DIM: usize = 6;

    /// Builds a chain directly. Returns `None` for an empty joint list.
    pub fn new(
        base: impl Into<String>,
        tip: impl Into<String>,
        joints: Vec<ChainJoint<T>>,
        tip_offset: Isometry3<T>,
    ) -> Option<Self> {
        if joints.is_empty() {
            return None;
        }
        Some(Self {
            base: base.into(),
            tip: tip.into(),
            joints,
            tip_offset,
        })
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn joints(&self) -> &[ChainJoint<T>] {
        &self.joints
    }

    /// Pose of the tip frame in the last joint's frame.
    pub fn tip_offset(&self) -> &Isometry3<T> {
        &self.tip_offset
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    pub fn tip(&self) -> &str {
        &self.tip
    }

    pub fn joint_names(&self) -> Vec<&str> {
        self.joints.iter().map(|j| j.name.as_str()).collect()
    }

    /// Per-joint effort limits, if every joint declares one.
    pub fn effort_limits(&self) -> Option<Vec<T>> {
        self.joints.iter().map(|j| j.effort_limit).collect()
    }
}

/// Joints on the unique path from `base` down to `tip`, in base-to-tip order.
fn joint_path<'m>(model: &'m RobotModel, base: &str, tip: &str) -> Result<Vec<&'m JointSpec>, ChainError> {
    for link in [base, tip] {
        if model.link(link).is_none() {
            return Err(ChainError::UnknownLink(link.to_string()));
        }
    }
    let path_err = |reason: &str| ChainError::Path {
        base: base.to_string(),
        tip: tip.to_string(),
        reason: reason.to_string(),
    };
    if base == tip {
        return Err(path_err("base and tip are the same link"));
    }
    let mut path = Vec::new();
    let mut current = tip;
    while current != base {
        match model.parent_joint(current) {
            Some(joint) => {
                path.push(joint);
                current = &joint.parent;
            }
            None => return Err(path_err("tip is not a descendant of base")),
        }
    }
    path.reverse();
    Ok(path)
}

/// Extracts the serial chain between two links, folding fixed joints into constant
/// transforms and lumping rigidly attached links into the preceding moving body.
pub fn extract_chain<T: Real>(model: &RobotModel, base: &str, tip: &str) -> Result<KinematicChain<T>, ChainError> {
    let path = joint_path(model, base, tip)?;
    let mut built: Vec<ChainJoint<f64>> = Vec::new();
    // Pose of the current link frame relative to the last actuated joint frame (or base).
    let mut pending = Isometry3::<f64>::identity();

    for joint in path {
        let link = model
            .link(&joint.child)
            .ok_or_else(|| ChainError::UnknownLink(joint.child.clone()))?;
        let link_body = RigidBodyInertia {
            mass: link.mass,
            com: link.com,
            inertia: link.inertia,
        };
        match joint.kind {
            JointKind::Revolute => {
                built.push(ChainJoint {
                    name: joint.name.clone(),
                    parent_to_joint: pending * joint.origin.isometry(),
                    axis: Unit::new_normalize(joint.axis),
                    position_limits: joint.position_limits,
                    effort_limit: joint.effort_limit,
                    body: link_body,
                });
                pending = Isometry3::identity();
            }
            JointKind::Fixed => {
                pending *= joint.origin.isometry();
                if let Some(last) = built.last_mut() {
                    let attached = link_body.transformed(&pending);
                    last.body = last.body.combined(&attached);
                }
            }
        }
    }

    if built.is_empty() {
        return Err(ChainError::Path {
            base: base.to_string(),
            tip: tip.to_string(),
            reason: "path contains no actuated joints".to_string(),
        });
    }

    let joints = built.into_iter().map(cast_joint).collect();
    Ok(KinematicChain {
        base: base.to_string(),
        tip: tip.to_string(),
        joints,
        tip_offset: na::convert(pending),
    })
}

fn cast_joint<T: Real>(j: ChainJoint<f64>) -> ChainJoint<T> {
    ChainJoint {
        name: j.name,
        parent_to_joint: na::convert(j.parent_to_joint),
        axis: Unit::new_normalize(j.axis.into_inner().map(T::lit)),
        position_limits: j.position_limits.map(|[lo, hi]| [T::lit(lo), T::lit(hi)]),
        effort_limit: j.effort_limit.map(T::lit),
        body: RigidBodyInertia {
            mass: T::lit(j.body.mass),
            com: j.body.com.map(T::lit),
            inertia: j.body.inertia.map(T::lit),
        },
    }
}
