//! The Cartesian impedance controller.
//!
//! Each step runs a fixed pipeline:
//!
//! 1. advance every filtered parameter one step and saturate gains and wrench;
//! 2. pose error against the filtered reference pose;
//! 3. task-space spring-damper torque;
//! 4. nullspace projector and projected posture torque;
//! 5. feed-forward wrench torque;
//! 6. sum of the three terms;
//! 7. optional gravity feed-forward;
//! 8. torque rate limit against the previous command;
//! 9. optional per-joint effort clamp.
//!
//! Targets and gains set between steps are staged as filter goals and only reach the
//! control law through step 1.

mod law;
mod safety;
mod trajectory;

use std::sync::mpsc;

use nalgebra::{DMatrix, DVector, Dyn, Matrix6, Vector6, U6};
use thiserror::Error;

pub use law::{
    cartesian_impedance_torque, nullspace_projector, nullspace_projector_with_cutoff, nullspace_torque,
    pseudo_inverse, wrench_torque, PSEUDO_INVERSE_CUTOFF,
};
pub use safety::{filter_coefficient, filter_pose, filter_toward, rate_limit, saturate, Bounds};
pub use trajectory::{trajectory_target, JointTrajectory, TrajectoryError, Waypoint};

use crate::kinematics::{pose_error, rotate_jacobian, rotate_six, CartesianPose, TaskFrame};
use crate::{all_finite, DimensionError, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControllerError {
    #[error(transparent)]
    Dimension(#[from] DimensionError),
    #[error("non-finite value in {0}")]
    NonFiniteInput(&'static str),
    #[error("step called with dt = {actual}, controller configured for {expected}")]
    RateMismatch { expected: f64, actual: f64 },
    #[error("gravity feed-forward is enabled but no gravity torque was supplied")]
    MissingGravityTorque,
    #[error("{0}")]
    Domain(String),
    #[error("invalid limits: {0}")]
    InvalidLimits(String),
}

/// Stiffness and damping of the task-space and nullspace impedances.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpedanceGains<T: Real> {
    /// N/m on the translational, N·m/rad on the rotational axes.
    pub cartesian_stiffness: Matrix6<T>,
    pub cartesian_damping: Matrix6<T>,
    /// N·m/rad, n×n.
    pub nullspace_stiffness: DMatrix<T>,
    pub nullspace_damping: DMatrix<T>,
}

impl<T: Real> ImpedanceGains<T> {
    pub fn zero(n: usize) -> Self {
        Self {
            cartesian_stiffness: Matrix6::zeros(),
            cartesian_damping: Matrix6::zeros(),
            nullspace_stiffness: DMatrix::zeros(n, n),
            nullspace_damping: DMatrix::zeros(n, n),
        }
    }

    /// Diagonal gains with damping `D = 2 ζ √K` per axis.
    pub fn from_damping_ratios(
        cartesian_stiffness: &Vector6<T>,
        cartesian_ratio: T,
        nullspace_stiffness: &DVector<T>,
        nullspace_ratio: T,
    ) -> Self {
        let damp = |k: T, zeta: T| T::TWO * zeta * k.max(T::ZERO).sqrt();
        Self {
            cartesian_stiffness: Matrix6::from_diagonal(cartesian_stiffness),
            cartesian_damping: Matrix6::from_diagonal(&cartesian_stiffness.map(|k| damp(k, cartesian_ratio))),
            nullspace_stiffness: DMatrix::from_diagonal(nullspace_stiffness),
            nullspace_damping: DMatrix::from_diagonal(&nullspace_stiffness.map(|k| damp(k, nullspace_ratio))),
        }
    }

    pub fn dof(&self) -> usize {
        self.nullspace_stiffness.nrows()
    }

    fn check(&self, n: usize) -> Result<(), ControllerError> {
        for (what, m) in [
            ("nullspace stiffness", &self.nullspace_stiffness),
            ("nullspace damping", &self.nullspace_damping),
        ] {
            DimensionError::check(what, n * n, m.len())?;
            DimensionError::check(what, n, m.nrows())?;
        }
        if !(all_finite(&self.cartesian_stiffness)
            && all_finite(&self.cartesian_damping)
            && all_finite(&self.nullspace_stiffness)
            && all_finite(&self.nullspace_damping))
        {
            return Err(ControllerError::NonFiniteInput("gains"));
        }
        Ok(())
    }

    fn filtered_toward(&self, desired: &Self, a: T) -> Self {
        Self {
            cartesian_stiffness: filter_toward(&self.cartesian_stiffness, &desired.cartesian_stiffness, a),
            cartesian_damping: filter_toward(&self.cartesian_damping, &desired.cartesian_damping, a),
            nullspace_stiffness: filter_toward(&self.nullspace_stiffness, &desired.nullspace_stiffness, a),
            nullspace_damping: filter_toward(&self.nullspace_damping, &desired.nullspace_damping, a),
        }
    }
}

/// Reference values for the three torque terms.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerTargets<T: Real> {
    pub pose: CartesianPose<T>,
    pub nullspace_q: DVector<T>,
    /// Wrench the end effector should exert on the environment, in the task frame.
    pub wrench: Vector6<T>,
}

/// Per-parameter filter coefficients `a ∈ (0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterCoefficients<T: Real> {
    pub pose: T,
    pub nullspace_q: T,
    pub wrench: T,
    pub gains: T,
}

impl<T: Real> FilterCoefficients<T> {
    pub fn uniform(a: T) -> Self {
        Self {
            pose: a,
            nullspace_q: a,
            wrench: a,
            gains: a,
        }
    }

    /// All four coefficients from one `(fraction, time)` pair.
    pub fn from_response(fraction: T, time: T, dt: T) -> Result<Self, ControllerError> {
        filter_coefficient(fraction, time, dt).map(Self::uniform)
    }

    fn validate(&self) -> Result<(), ControllerError> {
        for a in [self.pose, self.nullspace_q, self.wrench, self.gains] {
            if !(a > T::ZERO && a <= T::ONE) {
                return Err(ControllerError::Domain(format!(
                    "filter coefficient must lie in (0, 1], got {}",
                    a.to_f64()
                )));
            }
        }
        Ok(())
    }
}

/// A filtered parameter: the value in effect and the value it is moving toward.
#[derive(Debug, Clone, PartialEq)]
pub struct Filtered<V> {
    pub current: V,
    pub desired: V,
}

impl<V: Clone> Filtered<V> {
    pub fn settled(value: V) -> Self {
        Self {
            current: value.clone(),
            desired: value,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank<T: Real> {
    pub pose: Filtered<CartesianPose<T>>,
    pub nullspace_q: Filtered<DVector<T>>,
    pub wrench: Filtered<Vector6<T>>,
    pub gains: Filtered<ImpedanceGains<T>>,
}

impl<T: Real> FilterBank<T> {
    pub fn step(&mut self, a: &FilterCoefficients<T>) {
        self.pose.current = filter_pose(&self.pose.current, &self.pose.desired, a.pose);
        self.nullspace_q.current = filter_toward(&self.nullspace_q.current, &self.nullspace_q.desired, a.nullspace_q);
        self.wrench.current = filter_toward(&self.wrench.current, &self.wrench.desired, a.wrench);
        self.gains.current = self.gains.current.filtered_toward(&self.gains.desired, a.gains);
    }

    /// Targets currently in effect.
    pub fn effective_targets(&self) -> ControllerTargets<T> {
        ControllerTargets {
            pose: self.pose.current,
            nullspace_q: self.nullspace_q.current.clone(),
            wrench: self.wrench.current,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SafetyLimits<T: Real> {
    pub cartesian_stiffness: Bounds<Matrix6<T>>,
    pub cartesian_damping: Bounds<Matrix6<T>>,
    pub nullspace_stiffness: Bounds<DMatrix<T>>,
    pub nullspace_damping: Bounds<DMatrix<T>>,
    pub wrench: Bounds<Vector6<T>>,
    /// Maximum Euclidean norm of the change between consecutive torque commands (N·m).
    pub max_torque_step: Option<T>,
    /// Per-joint absolute torque limits applied last.
    pub effort_limits: Option<DVector<T>>,
}

impl<T: Real> SafetyLimits<T> {
    pub fn unbounded(n: usize) -> Self {
        Self {
            cartesian_stiffness: Bounds::unbounded((U6, U6)),
            cartesian_damping: Bounds::unbounded((U6, U6)),
            nullspace_stiffness: Bounds::unbounded((Dyn(n), Dyn(n))),
            nullspace_damping: Bounds::unbounded((Dyn(n), Dyn(n))),
            wrench: Bounds::unbounded((U6, nalgebra::U1)),
            max_torque_step: None,
            effort_limits: None,
        }
    }

    fn validate(&self, n: usize) -> Result<(), ControllerError> {
        for (what, b) in [
            ("nullspace stiffness bounds", &self.nullspace_stiffness),
            ("nullspace damping bounds", &self.nullspace_damping),
        ] {
            DimensionError::check(what, n, b.shape().0)?;
            DimensionError::check(what, n, b.shape().1)?;
        }
        if let Some(step) = self.max_torque_step {
            if !(step > T::ZERO) {
                return Err(ControllerError::InvalidLimits("maximum torque step must be positive".into()));
            }
        }
        if let Some(effort) = &self.effort_limits {
            DimensionError::check("effort limits", n, effort.len())?;
            if effort.iter().any(|e| !(*e > T::ZERO)) {
                return Err(ControllerError::InvalidLimits("effort limits must be positive".into()));
            }
        }
        let ordered = |lo: &[T], hi: &[T]| lo.iter().zip(hi).all(|(l, h)| l <= h);
        if !(ordered(self.cartesian_stiffness.lower.as_slice(), self.cartesian_stiffness.upper.as_slice())
            && ordered(self.cartesian_damping.lower.as_slice(), self.cartesian_damping.upper.as_slice())
            && ordered(self.nullspace_stiffness.lower.as_slice(), self.nullspace_stiffness.upper.as_slice())
            && ordered(self.nullspace_damping.lower.as_slice(), self.nullspace_damping.upper.as_slice())
            && ordered(self.wrench.lower.as_slice(), self.wrench.upper.as_slice()))
        {
            return Err(ControllerError::InvalidLimits("lower bound exceeds upper bound".into()));
        }
        Ok(())
    }

    /// Clamps gains into bounds; the flag reports whether anything changed.
    pub fn clamp_gains(&self, gains: &ImpedanceGains<T>) -> (ImpedanceGains<T>, bool) {
        let clamped = ImpedanceGains {
            cartesian_stiffness: self.cartesian_stiffness.clamp(&gains.cartesian_stiffness),
            cartesian_damping: self.cartesian_damping.clamp(&gains.cartesian_damping),
            nullspace_stiffness: self.nullspace_stiffness.clamp(&gains.nullspace_stiffness),
            nullspace_damping: self.nullspace_damping.clamp(&gains.nullspace_damping),
        };
        let changed = clamped != *gains;
        (clamped, changed)
    }

    pub fn gains_within(&self, gains: &ImpedanceGains<T>) -> bool {
        self.cartesian_stiffness.contains(&gains.cartesian_stiffness)
            && self.cartesian_damping.contains(&gains.cartesian_damping)
            && self.nullspace_stiffness.contains(&gains.nullspace_stiffness)
            && self.nullspace_damping.contains(&gains.nullspace_damping)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerConfig<T: Real> {
    /// Control period (s).
    pub dt: T,
    pub filter: FilterCoefficients<T>,
    pub limits: SafetyLimits<T>,
    pub frame: TaskFrame,
    pub gravity_feedforward: bool,
    /// Relative singular-value cutoff for the nullspace projector.
    pub pseudo_inverse_cutoff: T,
}

impl<T: Real> ControllerConfig<T> {
    /// Unbounded limits, no rate limit, base frame, no gravity feed-forward, and the
    /// default filter response (99 % of a change applied after 0.3 s).
    pub fn new(n: usize, dt: T) -> Result<Self, ControllerError> {
        Ok(Self {
            dt,
            filter: FilterCoefficients::from_response(T::lit(0.99), T::lit(0.3), dt)?,
            limits: SafetyLimits::unbounded(n),
            frame: TaskFrame::Base,
            gravity_feedforward: false,
            pseudo_inverse_cutoff: T::lit(PSEUDO_INVERSE_CUTOFF),
        })
    }
}

/// Which staged value was clamped to its bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundsWarning {
    Gains,
    Wrench,
}

/// Updates delivered to a controller between steps.
#[derive(Debug, Clone, PartialEq)]
pub enum Command<T: Real> {
    SetPose(CartesianPose<T>),
    SetNullspaceTarget(DVector<T>),
    SetWrench(Vector6<T>),
    SetGains(ImpedanceGains<T>),
}

/// Sensor-side inputs for one control step.
#[derive(Debug, Clone)]
pub struct StepInput<'a, T: Real> {
    pub q: &'a DVector<T>,
    pub qdot: &'a DVector<T>,
    /// Tip Jacobian expressed in the base frame.
    pub jacobian: &'a DMatrix<T>,
    /// Tip pose in the base frame.
    pub pose: &'a CartesianPose<T>,
    pub dt: T,
    /// Torque holding the robot against gravity; required with gravity feed-forward.
    pub gravity_torque: Option<&'a DVector<T>>,
}

/// Everything computed in one step.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlOutput<T: Real> {
    /// Final command `τ_c`.
    pub torque: DVector<T>,
    pub cartesian: DVector<T>,
    pub nullspace: DVector<T>,
    pub wrench: DVector<T>,
    /// Gravity feed-forward added (zero when disabled).
    pub gravity: DVector<T>,
    /// Sum before rate limiting and effort clamping.
    pub unlimited: DVector<T>,
    /// Pose error in the task frame.
    pub pose_error: Vector6<T>,
}

/// One controller per robot. Exactly one owner calls [`ImpedanceController::step`];
/// other agents send [`Command`]s through a channel drained between steps.
#[derive(Debug, Clone)]
pub struct ImpedanceController<T: Real> {
    config: ControllerConfig<T>,
    bank: FilterBank<T>,
    previous_torque: DVector<T>,
    steps: u64,
}

impl<T: Real> ImpedanceController<T> {
    /// Starts with filters settled at the (clamped) initial gains and targets.
    pub fn new(
        config: ControllerConfig<T>,
        gains: ImpedanceGains<T>,
        targets: ControllerTargets<T>,
    ) -> Result<Self, ControllerError> {
        let n = targets.nullspace_q.len();
        config.filter.validate()?;
        config.limits.validate(n)?;
        if !(config.dt > T::ZERO && config.dt.is_finite()) {
            return Err(ControllerError::Domain("controller period must be positive".into()));
        }
        gains.check(n)?;
        let (gains, _) = config.limits.clamp_gains(&gains);
        let wrench = config.limits.wrench.clamp(&targets.wrench);
        Ok(Self {
            bank: FilterBank {
                pose: Filtered::settled(targets.pose),
                nullspace_q: Filtered::settled(targets.nullspace_q),
                wrench: Filtered::settled(wrench),
                gains: Filtered::settled(gains),
            },
            previous_torque: DVector::zeros(n),
            config,
            steps: 0,
        })
    }

    pub fn dof(&self) -> usize {
        self.previous_torque.len()
    }

    pub fn config(&self) -> &ControllerConfig<T> {
        &self.config
    }

    pub fn filters(&self) -> &FilterBank<T> {
        &self.bank
    }

    pub fn previous_torque(&self) -> &DVector<T> {
        &self.previous_torque
    }

    /// Number of completed steps.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Stages new targets; absent values are left unchanged.
    pub fn set_targets(
        &mut self,
        pose: Option<CartesianPose<T>>,
        nullspace_q: Option<DVector<T>>,
        wrench: Option<Vector6<T>>,
    ) -> Result<Vec<BoundsWarning>, ControllerError> {
        let mut warnings = Vec::new();
        if let Some(q) = &nullspace_q {
            DimensionError::check("nullspace target", self.dof(), q.len())?;
            if !all_finite(q) {
                return Err(ControllerError::NonFiniteInput("nullspace target"));
            }
        }
        if let Some(pose) = &pose {
            if !(all_finite(&pose.translation) && all_finite(pose.orientation.as_vector())) {
                return Err(ControllerError::NonFiniteInput("pose target"));
            }
        }
        if let Some(w) = &wrench {
            if !all_finite(w) {
                return Err(ControllerError::NonFiniteInput("wrench target"));
            }
        }
        if let Some(pose) = pose {
            self.bank.pose.desired = pose;
        }
        if let Some(q) = nullspace_q {
            self.bank.nullspace_q.desired = q;
        }
        if let Some(w) = wrench {
            let clamped = self.config.limits.wrench.clamp(&w);
            if clamped != w {
                warnings.push(BoundsWarning::Wrench);
            }
            self.bank.wrench.desired = clamped;
        }
        Ok(warnings)
    }

    /// Stages new gains, clamped into the configured bounds.
    pub fn set_gains(&mut self, gains: ImpedanceGains<T>) -> Result<Vec<BoundsWarning>, ControllerError> {
        gains.check(self.dof())?;
        let (clamped, changed) = self.config.limits.clamp_gains(&gains);
        self.bank.gains.desired = clamped;
        Ok(if changed { vec![BoundsWarning::Gains] } else { Vec::new() })
    }

    pub fn apply(&mut self, command: Command<T>) -> Result<Vec<BoundsWarning>, ControllerError> {
        match command {
            Command::SetPose(p) => self.set_targets(Some(p), None, None),
            Command::SetNullspaceTarget(q) => self.set_targets(None, Some(q), None),
            Command::SetWrench(w) => self.set_targets(None, None, Some(w)),
            Command::SetGains(g) => self.set_gains(g),
        }
    }

    /// Applies every command waiting in `inbox`, in arrival order.
    pub fn drain(&mut self, inbox: &mpsc::Receiver<Command<T>>) -> Result<Vec<BoundsWarning>, ControllerError> {
        let mut warnings = Vec::new();
        for command in inbox.try_iter() {
            warnings.extend(self.apply(command)?);
        }
        Ok(warnings)
    }

    /// Runs one control period and returns the commanded torque with its components.
    pub fn step(&mut self, input: &StepInput<T>) -> Result<ControlOutput<T>, ControllerError> {
        let n = self.dof();
        DimensionError::check("joint positions", n, input.q.len())?;
        DimensionError::check("joint velocities", n, input.qdot.len())?;
        DimensionError::check("jacobian rows", 6, input.jacobian.nrows())?;
        DimensionError::check("jacobian columns", n, input.jacobian.ncols())?;
        if !all_finite(input.q) {
            return Err(ControllerError::NonFiniteInput("joint positions"));
        }
        if !all_finite(input.qdot) {
            return Err(ControllerError::NonFiniteInput("joint velocities"));
        }
        if !all_finite(input.jacobian) {
            return Err(ControllerError::NonFiniteInput("jacobian"));
        }
        if !(all_finite(&input.pose.translation) && all_finite(input.pose.orientation.as_vector())) {
            return Err(ControllerError::NonFiniteInput("pose"));
        }
        let tolerance = self.config.dt * T::lit(1e-9);
        if !((input.dt - self.config.dt).abs() <= tolerance) {
            return Err(ControllerError::RateMismatch {
                expected: self.config.dt.to_f64(),
                actual: input.dt.to_f64(),
            });
        }
        let gravity = if self.config.gravity_feedforward {
            let g = input.gravity_torque.ok_or(ControllerError::MissingGravityTorque)?;
            DimensionError::check("gravity torque", n, g.len())?;
            if !all_finite(g) {
                return Err(ControllerError::NonFiniteInput("gravity torque"));
            }
            g.clone()
        } else {
            DVector::zeros(n)
        };

        // (1) filter, then saturate what is bounded
        self.bank.step(&self.config.filter);
        let limits = &self.config.limits;
        self.bank.gains.current = limits.clamp_gains(&self.bank.gains.current).0;
        self.bank.wrench.current = limits.wrench.clamp(&self.bank.wrench.current);

        // (2) pose error, in the working frame
        let base_error = pose_error(input.pose, &self.bank.pose.current);
        let (error, jac) = match self.config.frame {
            TaskFrame::Base => (base_error, input.jacobian.clone()),
            TaskFrame::EndEffector => {
                let to_tip = input.pose.rotation_matrix().transpose();
                (rotate_six(&to_tip, &base_error), rotate_jacobian(&to_tip, input.jacobian))
            }
        };

        // (3)–(6)
        let gains = &self.bank.gains.current;
        let cartesian = cartesian_impedance_torque(&jac, &error, input.qdot, &gains.cartesian_stiffness, &gains.cartesian_damping)?;
        let projector = nullspace_projector_with_cutoff(&jac, self.config.pseudo_inverse_cutoff);
        let nullspace = nullspace_torque(
            &projector,
            input.q,
            input.qdot,
            &self.bank.nullspace_q.current,
            &gains.nullspace_stiffness,
            &gains.nullspace_damping,
        )?;
        let wrench = wrench_torque(&jac, &self.bank.wrench.current)?;
        // (7)
        let unlimited = &cartesian + &nullspace + &wrench + &gravity;

        // (8), (9)
        let mut torque = match limits.max_torque_step {
            Some(max_step) => rate_limit(&self.previous_torque, &unlimited, max_step),
            None => unlimited.clone(),
        };
        if let Some(effort) = &limits.effort_limits {
            torque = torque.zip_map(effort, |t, e| t.max(-e).min(e));
        }

        self.previous_torque = torque.clone();
        self.steps += 1;
        Ok(ControlOutput {
            torque,
            cartesian,
            nullspace,
            wrench,
            gravity,
            unlimited,
            pose_error: error,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{UnitQuaternion, Vector3};

    fn targets(n: usize) -> ControllerTargets<f64> {
        ControllerTargets {
            pose: CartesianPose::identity(),
            nullspace_q: DVector::zeros(n),
            wrench: Vector6::zeros(),
        }
    }

    fn jac(n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(6, n, |r, c| ((r + 1) * (c + 2)) as f64 * 0.05 + if r == c { 1.0 } else { 0.0 })
    }

    fn stiff(n: usize) -> ImpedanceGains<f64> {
        ImpedanceGains::from_damping_ratios(&Vector6::from_element(200.0), 1.0, &DVector::from_element(n, 10.0), 1.0)
    }

    #[test]
    fn equilibrium_commands_nothing() {
        let n = 7;
        let mut c = ImpedanceController::new(ControllerConfig::new(n, 1e-3).unwrap(), stiff(n), targets(n)).unwrap();
        let (q, qd, j) = (DVector::zeros(n), DVector::zeros(n), jac(n));
        let pose = CartesianPose::identity();
        let out = c
            .step(&StepInput { q: &q, qdot: &qd, jacobian: &j, pose: &pose, dt: 1e-3, gravity_torque: None })
            .unwrap();
        assert_eq!(out.torque, DVector::zeros(n));
    }

    #[test]
    fn zero_gains_pass_wrench_through() {
        let n = 3;
        let mut t = targets(n);
        t.wrench = Vector6::new(1.0, -2.0, 3.0, 0.1, 0.2, -0.3);
        let mut c = ImpedanceController::new(ControllerConfig::new(n, 1e-3).unwrap(), ImpedanceGains::zero(n), t.clone()).unwrap();
        let q = DVector::from_vec(vec![0.3, 0.1, -0.2]);
        let qd = DVector::from_vec(vec![1.0, -1.0, 0.5]);
        let j = jac(n);
        let pose = CartesianPose::new(Vector3::new(0.5, 0.0, 0.0), nalgebra::Quaternion::new(0.9, 0.1, 0.0, 0.0));
        let out = c
            .step(&StepInput { q: &q, qdot: &qd, jacobian: &j, pose: &pose, dt: 1e-3, gravity_torque: None })
            .unwrap();
        let expected = j.transpose() * t.wrench;
        assert!((out.torque - expected).amax() <= 1e-12);
    }

    #[test]
    fn staged_targets_wait_for_the_filter() {
        let n = 2;
        let mut c = ImpedanceController::new(ControllerConfig::new(n, 1e-3).unwrap(), stiff(n), targets(n)).unwrap();
        let goal = CartesianPose {
            translation: Vector3::new(0.1, 0.0, 0.0),
            orientation: UnitQuaternion::identity(),
        };
        c.set_targets(Some(goal), None, None).unwrap();
        assert_eq!(c.filters().pose.current, CartesianPose::identity());
        assert_eq!(c.filters().pose.desired, goal);
    }

    #[test]
    fn gain_targets_are_clamped() {
        let n = 2;
        let mut config = ControllerConfig::new(n, 1e-3).unwrap();
        let mut upper = Matrix6::from_element(f64::INFINITY);
        upper[(0, 0)] = 1000.0;
        config.limits.cartesian_stiffness = Bounds::new(Matrix6::from_element(f64::NEG_INFINITY), upper).unwrap();
        let mut c = ImpedanceController::new(config, stiff(n), targets(n)).unwrap();
        let mut g = stiff(n);
        g.cartesian_stiffness[(0, 0)] = 1500.0;
        assert_eq!(c.set_gains(g).unwrap(), vec![BoundsWarning::Gains]);
        assert_eq!(c.filters().gains.desired.cartesian_stiffness[(0, 0)], 1000.0);
    }

    #[test]
    fn input_validation() {
        let n = 2;
        let mut config = ControllerConfig::new(n, 1e-3).unwrap();
        let mut c = ImpedanceController::new(config.clone(), stiff(n), targets(n)).unwrap();
        let (q, qd, j, pose) = (DVector::zeros(n), DVector::zeros(n), jac(n), CartesianPose::identity());
        let bad_q = DVector::from_vec(vec![f64::NAN, 0.0]);
        let mk = |q, dt| StepInput { q, qdot: &qd, jacobian: &j, pose: &pose, dt, gravity_torque: None };
        assert!(matches!(c.step(&mk(&bad_q, 1e-3)), Err(ControllerError::NonFiniteInput(_))));
        assert!(matches!(c.step(&mk(&q, 2e-3)), Err(ControllerError::RateMismatch { .. })));
        assert!(matches!(c.set_targets(None, Some(DVector::zeros(3)), None), Err(ControllerError::Dimension(_))));

        config.gravity_feedforward = true;
        let mut c = ImpedanceController::new(config, stiff(n), targets(n)).unwrap();
        assert!(matches!(c.step(&mk(&q, 1e-3)), Err(ControllerError::MissingGravityTorque)));
    }

    #[test]
    fn commands_arrive_through_a_channel() {
        let n = 2;
        let mut c = ImpedanceController::new(ControllerConfig::new(n, 1e-3).unwrap(), stiff(n), targets(n)).unwrap();
        let (tx, rx) = mpsc::channel();
        let sender = std::thread::spawn(move || {
            tx.send(Command::SetWrench(Vector6::from_element(1.0))).unwrap();
            tx.send(Command::SetWrench(Vector6::from_element(2.0))).unwrap();
        });
        sender.join().unwrap();
        c.drain(&rx).unwrap();
        assert_eq!(c.filters().wrench.desired, Vector6::from_element(2.0));
    }
}
