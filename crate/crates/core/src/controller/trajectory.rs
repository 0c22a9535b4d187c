use nalgebra::DVector;
use thiserror::Error;

use crate::kinematics::{forward_kinematics, CartesianPose};
use crate::model::KinematicChain;
use crate::{DimensionError, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrajectoryError {
    #[error("trajectory has no waypoints")]
    Empty,
    #[error("waypoint timestamps must be nondecreasing (waypoint {index})")]
    NonMonotoneTimestamps { index: usize },
    #[error("waypoint time must be finite and non-negative (waypoint {index})")]
    InvalidTime { index: usize },
    #[error(transparent)]
    Dimension(#[from] DimensionError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Waypoint<T: Real> {
    /// Time at which the joints reach `q`, on the clock passed to `sample`.
    pub time: T,
    pub q: DVector<T>,
}

/// Piecewise-linear joint trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTrajectory<T: Real> {
    waypoints: Vec<Waypoint<T>>,
}

impl<T: Real> JointTrajectory<T> {
    pub fn new(waypoints: Vec<Waypoint<T>>) -> Result<Self, TrajectoryError> {
        let first = waypoints.first().ok_or(TrajectoryError::Empty)?;
        let n = first.q.len();
        for (index, w) in waypoints.iter().enumerate() {
            if !(w.time.is_finite() && w.time >= T::ZERO) {
                return Err(TrajectoryError::InvalidTime { index });
            }
            DimensionError::check("waypoint joint positions", n, w.q.len())?;
            if index > 0 && w.time < waypoints[index - 1].time {
                return Err(TrajectoryError::NonMonotoneTimestamps { index });
            }
        }
        Ok(Self { waypoints })
    }

    pub fn waypoints(&self) -> &[Waypoint<T>] {
        &self.waypoints
    }

    pub fn dof(&self) -> usize {
        self.waypoints[0].q.len()
    }

    pub fn duration(&self) -> T {
        self.waypoints[self.waypoints.len() - 1].time
    }

    /// Linear interpolation at `t`, clamped to the end waypoints.
    pub fn sample(&self, t: T) -> DVector<T> {
        let first = &self.waypoints[0];
        let last = &self.waypoints[self.waypoints.len() - 1];
        if t <= first.time {
            return first.q.clone();
        }
        if t >= last.time {
            return last.q.clone();
        }
        // first waypoint strictly after t; exists because t < last.time
        let hi = self.waypoints.partition_point(|w| w.time <= t);
        let (a, b) = (&self.waypoints[hi - 1], &self.waypoints[hi]);
        let s = (t - a.time) / (b.time - a.time);
        &a.q + (&b.q - &a.q) * s
    }
}

/// Nullspace and Cartesian targets from a joint trajectory at time `t`: the interpolated
/// configuration and its forward kinematics.
pub fn trajectory_target<T: Real>(
    trajectory: &JointTrajectory<T>,
    t: T,
    chain: &KinematicChain<T>,
) -> Result<(DVector<T>, CartesianPose<T>), DimensionError> {
    let q = trajectory.sample(t);
    let pose = forward_kinematics(chain, &q)?;
    Ok((q, pose))
}
