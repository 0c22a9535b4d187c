//! Cartesian impedance control for torque-commanded serial manipulators.
//!
//! The commanded joint torque is the sum of a task-space spring-damper term, a joint
//! posture term projected into the nullspace of the task Jacobian, and a feed-forward
//! wrench term. Online parameter changes are low-pass filtered and saturated, and the
//! commanded torque is rate limited. A rigid-body simulator closes the loop for testing.
//!
//! Math is generic over [`Real`] (`f32`/`f64`); the aliases below fix it to `f64`, which is
//! what the simulator and CLI use.

// `!(x > y)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod controller;
pub mod dynamics;
mod error;
pub mod fmt;
pub mod kinematics;
pub mod model;
pub mod record;
mod scalar;
pub mod scenario;
pub mod sim;

pub use error::DimensionError;
pub use scalar::{all_finite, dvector, Real};

pub type Chain = model::KinematicChain<f64>;
pub type Pose = kinematics::CartesianPose<f64>;
pub type State = dynamics::JointState<f64>;
pub type Gains = controller::ImpedanceGains<f64>;
pub type Controller = controller::ImpedanceController<f64>;
pub type ControllerConfig = controller::ControllerConfig<f64>;
