//! Robot descriptions: the parsed link/joint tree and base-to-tip serial chains.

mod chain;
mod dump;
mod urdf;

use nalgebra::{Isometry3, Matrix3, Translation3, UnitQuaternion, Vector3};
use thiserror::Error;

pub use chain::{extract_chain, ChainError, ChainJoint, KinematicChain, RigidBodyInertia};
pub use dump::dump_model_json;
pub use urdf::{parse_robot_description, to_urdf, ParsedRobot};

/// Tolerance for unit-norm joint axes.
pub const AXIS_NORM_TOLERANCE: f64 = 1e-9;
/// Tolerance for inertia tensor symmetry.
pub const INERTIA_SYMMETRY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JointKind {
    Revolute,
    Fixed,
}

impl JointKind {
    pub fn as_str(self) -> &'static str {
        match self {
            JointKind::Revolute => "revolute",
            JointKind::Fixed => "fixed",
        }
    }
}

/// Rigid transform written as translation plus fixed-axis roll/pitch/yaw.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Origin {
    pub xyz: [f64; 3],
    pub rpy: [f64; 3],
}

impl Origin {
    /// Rotation `Rz(yaw) * Ry(pitch) * Rx(roll)`.
    pub fn rotation(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_euler_angles(self.rpy[0], self.rpy[1], self.rpy[2])
    }

    pub fn isometry(&self) -> Isometry3<f64> {
        Isometry3::from_parts(
            Translation3::new(self.xyz[0], self.xyz[1], self.xyz[2]),
            self.rotation(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointSpec {
    pub name: String,
    pub kind: JointKind,
    pub parent: String,
    pub child: String,
    /// Transform from the parent link frame to the joint frame.
    pub origin: Origin,
    /// Unit rotation axis in the joint frame.
    pub axis: Vector3<f64>,
    /// `[lower, upper]` in radians.
    pub position_limits: Option<[f64; 2]>,
    /// Maximum absolute joint torque in N·m.
    pub effort_limit: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkSpec {
    pub name: String,
    pub mass: f64,
    /// Center of mass in the link frame.
    pub com: Vector3<f64>,
    /// Inertia about the center of mass, axes aligned with the link frame.
    pub inertia: Matrix3<f64>,
}

impl LinkSpec {
    pub fn massless(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            mass: 0.0,
            com: Vector3::zeros(),
            inertia: Matrix3::zeros(),
        }
    }
}

/// A validated link/joint tree.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel {
    pub name: String,
    pub links: Vec<LinkSpec>,
    pub joints: Vec<JointSpec>,
    pub root: String,
}

impl RobotModel {
    pub fn link(&self, name: &str) -> Option<&LinkSpec> {
        self.links.iter().find(|l| l.name == name)
    }

    pub fn joint(&self, name: &str) -> Option<&JointSpec> {
        self.joints.iter().find(|j| j.name == name)
    }

    /// The joint whose child is `link`, if any.
    pub fn parent_joint(&self, link: &str) -> Option<&JointSpec> {
        self.joints.iter().find(|j| j.child == link)
    }

    pub fn actuated_joint_count(&self) -> usize {
        self.joints
            .iter()
            .filter(|j| j.kind == JointKind::Revolute)
            .count()
    }

    /// Leaf links, in declaration order.
    pub fn leaves(&self) -> Vec<&str> {
        self.links
            .iter()
            .filter(|l| !self.joints.iter().any(|j| j.parent == l.name))
            .map(|l| l.name.as_str())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: u32,
        column: u32,
        message: String,
    },
    #[error(transparent)]
    Semantic(#[from] SemanticError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SemanticError {
    #[error("joint '{joint}' references undeclared link '{link}'")]
    MissingLink { joint: String, link: String },
    #[error("duplicate {kind} name '{name}'")]
    DuplicateName { kind: &'static str, name: String },
    #[error("link/joint graph is not a tree: {0}")]
    NotATree(String),
    #[error("joint '{joint}' has unsupported kind '{kind}'")]
    UnsupportedJointKind { joint: String, kind: String },
    #[error("missing {what} in {context}")]
    Missing { context: String, what: String },
    #[error("invalid value in {context}: {message}")]
    InvalidValue { context: String, message: String },
}
