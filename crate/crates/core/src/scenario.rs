//! Scenario files: one JSON document per experiment.
//!
//! Top-level keys are `robot`, `chain`, `initial_state`, `controller`, `events`,
//! `environment` and `sim`. All quantities are SI, angles in radians, quaternions
//! written `[w, x, y, z]`. See `docs/scenario.md` for the full schema.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector, Matrix6, Quaternion, UnitQuaternion, Vector3, Vector6};
use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

use crate::controller::{
    Bounds, Command, ControllerError, ControllerTargets, FilterCoefficients, JointTrajectory, TrajectoryError,
    Waypoint,
};
use crate::kinematics::{forward_kinematics, CartesianPose, TaskFrame};
use crate::model::{extract_chain, parse_robot_description, ChainError, ModelError};
use crate::{Chain, ControllerConfig, Gains, Pose, State};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("scenario schema: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("robot description {path}: {source}")]
    Model {
        path: PathBuf,
        #[source]
        source: ModelError,
    },
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

impl ScenarioError {
    /// True for failures to read files, as opposed to bad content.
    pub fn is_io(&self) -> bool {
        matches!(self, ScenarioError::Io { .. })
    }
}

fn invalid<T>(message: impl Into<String>) -> Result<T, ScenarioError> {
    Err(ScenarioError::Invalid(message.into()))
}

// ---------------------------------------------------------------------------
// File format

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    robot: RobotSection,
    chain: ChainSection,
    initial_state: InitialState,
    controller: ControllerSection,
    #[serde(default)]
    events: Vec<EventSpec>,
    #[serde(default)]
    environment: Vec<ContactSpec>,
    sim: SimSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RobotSection {
    urdf: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainSection {
    base: String,
    tip: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitialState {
    q: Vec<f64>,
    qdot: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
struct Axes {
    trans: [f64; 3],
    rot: [f64; 3],
}

impl Axes {
    fn to_vector(self) -> Vector6<f64> {
        let [a, b, c] = self.trans;
        let [d, e, f] = self.rot;
        Vector6::new(a, b, c, d, e, f)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum PerJoint {
    Uniform(f64),
    Each(Vec<f64>),
}

impl PerJoint {
    fn resolve(&self, n: usize, what: &str) -> Result<DVector<f64>, ScenarioError> {
        match self {
            PerJoint::Uniform(v) => Ok(DVector::from_element(n, *v)),
            PerJoint::Each(v) if v.len() == n => Ok(DVector::from_column_slice(v)),
            PerJoint::Each(v) => invalid(format!("{what}: expected {n} values, found {}", v.len())),
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct GainSpec {
    k_ca: Axes,
    d_ca: Option<Axes>,
    #[serde(default = "one")]
    damping_ratio: f64,
    #[serde(default = "zero_per_joint")]
    k_ns: PerJoint,
    d_ns: Option<PerJoint>,
    #[serde(default = "one")]
    nullspace_damping_ratio: f64,
}

fn zero_per_joint() -> PerJoint {
    PerJoint::Uniform(0.0)
}

/// Partial gain change; unspecified fields keep their previous values.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GainUpdate {
    k_ca: Option<Axes>,
    d_ca: Option<Axes>,
    damping_ratio: Option<f64>,
    k_ns: Option<PerJoint>,
    d_ns: Option<PerJoint>,
    nullspace_damping_ratio: Option<f64>,
}

impl GainSpec {
    fn merged(&self, update: &GainUpdate) -> Self {
        let mut next = self.clone();
        if let Some(k) = update.k_ca {
            next.k_ca = k;
        }
        if let Some(d) = update.d_ca {
            next.d_ca = Some(d);
        }
        if let Some(z) = update.damping_ratio {
            next.damping_ratio = z;
        }
        if let Some(k) = &update.k_ns {
            next.k_ns = k.clone();
        }
        if let Some(d) = &update.d_ns {
            next.d_ns = Some(d.clone());
        }
        if let Some(z) = update.nullspace_damping_ratio {
            next.nullspace_damping_ratio = z;
        }
        next
    }

    fn resolve(&self, n: usize) -> Result<Gains, ScenarioError> {
        if !(self.damping_ratio >= 0.0 && self.nullspace_damping_ratio >= 0.0) {
            return invalid("damping ratios must be non-negative");
        }
        let k_ca = self.k_ca.to_vector();
        let k_ns = self.k_ns.resolve(n, "k_ns")?;
        if k_ca.iter().chain(k_ns.iter()).any(|k| !(*k >= 0.0)) {
            return invalid("stiffness values must be non-negative");
        }
        let mut gains = Gains::from_damping_ratios(&k_ca, self.damping_ratio, &k_ns, self.nullspace_damping_ratio);
        if let Some(d) = self.d_ca {
            gains.cartesian_damping = Matrix6::from_diagonal(&d.to_vector());
        }
        if let Some(d) = &self.d_ns {
            gains.nullspace_damping = DMatrix::from_diagonal(&d.resolve(n, "d_ns")?);
        }
        Ok(gains)
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct LimitSpec {
    k_ca_max: Option<Axes>,
    d_ca_max: Option<Axes>,
    k_ns_max: Option<PerJoint>,
    d_ns_max: Option<PerJoint>,
    wrench_max: Option<Axes>,
    max_torque_step: Option<f64>,
    #[serde(default)]
    clamp_effort: bool,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
struct FilterSpec {
    fraction: f64,
    time: f64,
}

impl Default for FilterSpec {
    fn default() -> Self {
        Self { fraction: 0.99, time: 0.3 }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
enum FrameSpec {
    #[default]
    Base,
    EndEffector,
}

impl From<FrameSpec> for TaskFrame {
    fn from(f: FrameSpec) -> Self {
        match f {
            FrameSpec::Base => TaskFrame::Base,
            FrameSpec::EndEffector => TaskFrame::EndEffector,
        }
    }
}

/// A pose given absolutely (`position`, `orientation`, `rpy`) or relative to the
/// initial end-effector pose (`offset`, `rotation`: a base-frame rotation vector).
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseSpec {
    position: Option<[f64; 3]>,
    offset: Option<[f64; 3]>,
    orientation: Option<[f64; 4]>,
    rpy: Option<[f64; 3]>,
    rotation: Option<[f64; 3]>,
}

impl PoseSpec {
    fn resolve(&self, initial: &Pose) -> Result<Pose, ScenarioError> {
        let translation = match (self.position, self.offset) {
            (Some(_), Some(_)) => return invalid("pose: give either position or offset, not both"),
            (Some(p), None) => Vector3::from(p),
            (None, Some(o)) => initial.translation + Vector3::from(o),
            (None, None) => initial.translation,
        };
        let orientation = match (self.orientation, self.rpy, self.rotation) {
            (Some([w, x, y, z]), None, None) => {
                let q = Quaternion::new(w, x, y, z);
                if !(q.norm() > 1e-9) {
                    return invalid("pose: orientation quaternion has zero norm");
                }
                UnitQuaternion::from_quaternion(q)
            }
            (None, Some([r, p, y]), None) => UnitQuaternion::from_euler_angles(r, p, y),
            (None, None, Some(v)) => UnitQuaternion::from_scaled_axis(Vector3::from(v)) * initial.orientation,
            (None, None, None) => initial.orientation,
            _ => return invalid("pose: give at most one of orientation, rpy, rotation"),
        };
        Ok(CartesianPose {
            translation,
            orientation,
        })
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetSpec {
    pose: Option<PoseSpec>,
    nullspace_q: Option<Vec<f64>>,
    wrench: Option<[f64; 6]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ControllerSection {
    gains: GainSpec,
    #[serde(default)]
    limits: LimitSpec,
    #[serde(default)]
    filter: FilterSpec,
    #[serde(default)]
    frame: FrameSpec,
    #[serde(default)]
    gravity_feedforward: bool,
    #[serde(default)]
    targets: TargetSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct WaypointSpec {
    t: f64,
    q: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum EventSpec {
    SetPose {
        t: f64,
        pose: PoseSpec,
    },
    SetNullspaceTarget {
        t: f64,
        q: Vec<f64>,
    },
    SetWrench {
        t: f64,
        wrench: [f64; 6],
    },
    SetGains {
        t: f64,
        gains: GainUpdate,
    },
    Trajectory {
        t: f64,
        waypoints: Vec<WaypointSpec>,
    },
    ExternalWrench {
        start: f64,
        end: Option<f64>,
        wrench: [f64; 6],
        #[serde(default)]
        frame: FrameSpec,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum ContactSpec {
    Wall {
        point: [f64; 3],
        normal: [f64; 3],
        stiffness: f64,
        #[serde(default)]
        damping: f64,
    },
}

fn default_gravity() -> [f64; 3] {
    [0.0, 0.0, -9.81]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimSection {
    duration: f64,
    dt: f64,
    #[serde(default = "default_gravity")]
    gravity: [f64; 3],
}

// ---------------------------------------------------------------------------
// Validated scenario

/// What an event does when it fires.
#[derive(Debug, Clone, PartialEq)]
// Events are few and built once, so boxing the command buys nothing.
#[allow(clippy::large_enum_variant)]
pub enum EventAction {
    Command(Command<f64>),
    /// Streams pose and nullspace targets from the trajectory every step until another
    /// pose or nullspace target replaces it.
    Trajectory(JointTrajectory<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: f64,
    pub action: EventAction,
}

/// External wrench on the end effector during `[start, end)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalWrench {
    pub start: f64,
    pub end: Option<f64>,
    pub wrench: Vector6<f64>,
    pub frame: TaskFrame,
}

impl ExternalWrench {
    pub fn active(&self, t: f64) -> bool {
        t >= self.start && self.end.is_none_or(|end| t < end)
    }
}

/// Unilateral spring-damper acting on the end-effector position. Free space is the
/// side `normal` points into.
#[derive(Debug, Clone, PartialEq)]
pub struct Wall {
    pub point: Vector3<f64>,
    pub normal: nalgebra::Unit<Vector3<f64>>,
    pub stiffness: f64,
    pub damping: f64,
}

impl Wall {
    /// Force on the end effector at `position` moving with `velocity`.
    pub fn force(&self, position: &Vector3<f64>, velocity: &Vector3<f64>) -> Vector3<f64> {
        let depth = -(position - self.point).dot(&self.normal);
        if depth <= 0.0 {
            return Vector3::zeros();
        }
        let push = self.stiffness * depth - self.damping * velocity.dot(&self.normal);
        self.normal.into_inner() * push.max(0.0)
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub robot_path: PathBuf,
    pub chain: Chain,
    pub initial: State,
    pub config: ControllerConfig,
    pub gains: Gains,
    pub targets: ControllerTargets<f64>,
    /// Sorted by time; equal times keep file order.
    pub events: Vec<Event>,
    pub external_wrenches: Vec<ExternalWrench>,
    pub walls: Vec<Wall>,
    pub duration: f64,
    pub dt: f64,
    pub gravity: Vector3<f64>,
    /// Non-fatal findings from the robot description.
    pub warnings: Vec<String>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let value: Value = serde_json::from_str(&text)?;
        Self::from_value(value, path.parent().unwrap_or(Path::new(".")))
    }

    /// Builds a scenario from parsed JSON. Relative robot paths resolve against `dir`.
    pub fn from_value(value: Value, dir: &Path) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = serde_json::from_value(value)?;
        let robot_path = dir.join(&file.robot.urdf);
        let text = fs::read_to_string(&robot_path).map_err(|source| ScenarioError::Io {
            path: robot_path.clone(),
            source,
        })?;
        let parsed = parse_robot_description(&text).map_err(|source| ScenarioError::Model {
            path: robot_path.clone(),
            source,
        })?;
        let chain: Chain = extract_chain(&parsed.model, &file.chain.base, &file.chain.tip)?;
        build(file, robot_path, chain, parsed.warnings)
    }
}

fn finite(values: &[f64], what: &str) -> Result<(), ScenarioError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        invalid(format!("{what} must be finite"))
    }
}

fn build(file: ScenarioFile, robot_path: PathBuf, chain: Chain, warnings: Vec<String>) -> Result<Scenario, ScenarioError> {
    let n = chain.dof();
    let SimSection { duration, dt, gravity } = file.sim;
    if !(duration > 0.0 && duration.is_finite()) {
        return invalid(format!("sim.duration must be positive, got {duration}"));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return invalid(format!("sim.dt must be positive, got {dt}"));
    }
    if dt > duration {
        return invalid("sim.dt exceeds sim.duration");
    }
    finite(&gravity, "sim.gravity")?;

    let q0 = &file.initial_state.q;
    if q0.len() != n {
        return invalid(format!("initial_state.q: chain has {n} joints, found {} values", q0.len()));
    }
    finite(q0, "initial_state.q")?;
    let qdot0 = file.initial_state.qdot.clone().unwrap_or_else(|| vec![0.0; n]);
    if qdot0.len() != n {
        return invalid(format!("initial_state.qdot: chain has {n} joints, found {} values", qdot0.len()));
    }
    finite(&qdot0, "initial_state.qdot")?;
    let initial = State::new(DVector::from_column_slice(q0), DVector::from_column_slice(&qdot0))
        .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
    let start_pose = forward_kinematics(&chain, &initial.q).map_err(|e| ScenarioError::Invalid(e.to_string()))?;

    let section = &file.controller;
    let mut config = ControllerConfig::new(n, dt)?;
    config.filter = FilterCoefficients::from_response(section.filter.fraction, section.filter.time, dt)?;
    config.frame = section.frame.into();
    config.gravity_feedforward = section.gravity_feedforward;
    config.limits = limits(&section.limits, &chain)?;

    let gains = section.gains.resolve(n)?;
    let targets = ControllerTargets {
        pose: match &section.targets.pose {
            Some(spec) => spec.resolve(&start_pose)?,
            None => start_pose,
        },
        nullspace_q: match &section.targets.nullspace_q {
            Some(q) if q.len() == n => DVector::from_column_slice(q),
            Some(q) => return invalid(format!("controller.targets.nullspace_q: expected {n} values, found {}", q.len())),
            None => initial.q.clone(),
        },
        wrench: Vector6::from(section.targets.wrench.unwrap_or([0.0; 6])),
    };
    finite(targets.nullspace_q.as_slice(), "controller.targets.nullspace_q")?;
    finite(targets.wrench.as_slice(), "controller.targets.wrench")?;

    let in_range = |t: f64, what: &str| -> Result<(), ScenarioError> {
        if t.is_finite() && (0.0..=duration).contains(&t) {
            Ok(())
        } else {
            invalid(format!("{what}: time {t} outside [0, {duration}]"))
        }
    };

    let mut indexed: Vec<(usize, &EventSpec)> = file.events.iter().enumerate().collect();
    indexed.sort_by(|a, b| event_time(a.1).total_cmp(&event_time(b.1)).then(a.0.cmp(&b.0)));

    let mut gain_spec = section.gains.clone();
    let mut events = Vec::new();
    let mut external_wrenches = Vec::new();
    for (index, spec) in indexed {
        let what = format!("events[{index}]");
        match spec {
            EventSpec::SetPose { t, pose } => {
                in_range(*t, &what)?;
                events.push(Event {
                    time: *t,
                    action: EventAction::Command(Command::SetPose(pose.resolve(&start_pose)?)),
                });
            }
            EventSpec::SetNullspaceTarget { t, q } => {
                in_range(*t, &what)?;
                if q.len() != n {
                    return invalid(format!("{what}: expected {n} joint values, found {}", q.len()));
                }
                finite(q, &what)?;
                events.push(Event {
                    time: *t,
                    action: EventAction::Command(Command::SetNullspaceTarget(DVector::from_column_slice(q))),
                });
            }
            EventSpec::SetWrench { t, wrench } => {
                in_range(*t, &what)?;
                finite(wrench, &what)?;
                events.push(Event {
                    time: *t,
                    action: EventAction::Command(Command::SetWrench(Vector6::from(*wrench))),
                });
            }
            EventSpec::SetGains { t, gains } => {
                in_range(*t, &what)?;
                gain_spec = gain_spec.merged(gains);
                events.push(Event {
                    time: *t,
                    action: EventAction::Command(Command::SetGains(gain_spec.resolve(n)?)),
                });
            }
            EventSpec::Trajectory { t, waypoints } => {
                in_range(*t, &what)?;
                let mut points = Vec::with_capacity(waypoints.len());
                for w in waypoints {
                    if w.q.len() != n {
                        return invalid(format!("{what}: waypoint has {} values, chain has {n} joints", w.q.len()));
                    }
                    finite(&w.q, &what)?;
                    points.push(Waypoint {
                        time: w.t,
                        q: DVector::from_column_slice(&w.q),
                    });
                }
                events.push(Event {
                    time: *t,
                    action: EventAction::Trajectory(JointTrajectory::new(points)?),
                });
            }
            EventSpec::ExternalWrench { start, end, wrench, frame } => {
                in_range(*start, &what)?;
                if let Some(end) = end {
                    in_range(*end, &what)?;
                    if end < start {
                        return invalid(format!("{what}: end precedes start"));
                    }
                }
                finite(wrench, &what)?;
                external_wrenches.push(ExternalWrench {
                    start: *start,
                    end: *end,
                    wrench: Vector6::from(*wrench),
                    frame: (*frame).into(),
                });
            }
        }
    }

    let mut walls = Vec::new();
    for (index, contact) in file.environment.iter().enumerate() {
        let ContactSpec::Wall {
            point,
            normal,
            stiffness,
            damping,
        } = contact;
        let what = format!("environment[{index}]");
        finite(point, &what)?;
        finite(normal, &what)?;
        let normal = Vector3::from(*normal);
        if !(normal.norm() > 1e-9) {
            return invalid(format!("{what}: wall normal has zero length"));
        }
        if !(*stiffness >= 0.0 && *damping >= 0.0 && stiffness.is_finite() && damping.is_finite()) {
            return invalid(format!("{what}: wall stiffness and damping must be non-negative"));
        }
        walls.push(Wall {
            point: Vector3::from(*point),
            normal: nalgebra::Unit::new_normalize(normal),
            stiffness: *stiffness,
            damping: *damping,
        });
    }

    Ok(Scenario {
        robot_path,
        chain,
        initial,
        config,
        gains,
        targets,
        events,
        external_wrenches,
        walls,
        duration,
        dt,
        gravity: Vector3::from(gravity),
        warnings,
    })
}

fn event_time(e: &EventSpec) -> f64 {
    match e {
        EventSpec::SetPose { t, .. }
        | EventSpec::SetNullspaceTarget { t, .. }
        | EventSpec::SetWrench { t, .. }
        | EventSpec::SetGains { t, .. }
        | EventSpec::Trajectory { t, .. } => *t,
        EventSpec::ExternalWrench { start, .. } => *start,
    }
}

/// Upper bounds on the diagonal, zero below; off-diagonal entries are left free.
fn diagonal_bounds(max: &[f64], what: &str) -> Result<(DMatrix<f64>, DMatrix<f64>), ScenarioError> {
    if max.iter().any(|m| !(*m >= 0.0)) {
        return invalid(format!("{what}: bounds must be non-negative"));
    }
    let n = max.len();
    let lower = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { f64::NEG_INFINITY });
    let upper = DMatrix::from_fn(n, n, |i, j| if i == j { max[i] } else { f64::INFINITY });
    Ok((lower, upper))
}

fn cartesian_bounds(max: &Axes, what: &str) -> Result<Bounds<Matrix6<f64>>, ScenarioError> {
    let (lo, hi) = diagonal_bounds(max.to_vector().as_slice(), what)?;
    Ok(Bounds::new(Matrix6::from_iterator(lo.iter().copied()), Matrix6::from_iterator(hi.iter().copied()))?)
}

fn limits(spec: &LimitSpec, chain: &Chain) -> Result<crate::controller::SafetyLimits<f64>, ScenarioError> {
    let n = chain.dof();
    let mut limits = crate::controller::SafetyLimits::unbounded(n);
    if let Some(max) = &spec.k_ca_max {
        limits.cartesian_stiffness = cartesian_bounds(max, "limits.k_ca_max")?;
    }
    if let Some(max) = &spec.d_ca_max {
        limits.cartesian_damping = cartesian_bounds(max, "limits.d_ca_max")?;
    }
    if let Some(max) = &spec.k_ns_max {
        let (lo, hi) = diagonal_bounds(max.resolve(n, "limits.k_ns_max")?.as_slice(), "limits.k_ns_max")?;
        limits.nullspace_stiffness = Bounds::new(lo, hi)?;
    }
    if let Some(max) = &spec.d_ns_max {
        let (lo, hi) = diagonal_bounds(max.resolve(n, "limits.d_ns_max")?.as_slice(), "limits.d_ns_max")?;
        limits.nullspace_damping = Bounds::new(lo, hi)?;
    }
    if let Some(max) = &spec.wrench_max {
        let hi = max.to_vector();
        if hi.iter().any(|m| !(*m >= 0.0)) {
            return invalid("limits.wrench_max: bounds must be non-negative");
        }
        limits.wrench = Bounds::new(-hi, hi)?;
    }
    if let Some(step) = spec.max_torque_step {
        if !(step > 0.0 && step.is_finite()) {
            return invalid(format!("limits.max_torque_step must be positive, got {step}"));
        }
        limits.max_torque_step = Some(step);
    }
    if spec.clamp_effort {
        match chain.effort_limits() {
            Some(effort) => limits.effort_limits = Some(DVector::from_vec(effort)),
            None => return invalid("limits.clamp_effort: the model does not give every joint an effort limit"),
        }
    }
    Ok(limits)
}

// ---------------------------------------------------------------------------
// Dotted-key overrides

/// Every numeric setting in a scenario document as a dotted key. Three-element arrays
/// use `x`, `y`, `z`; other arrays use indices.
pub fn numeric_keys(value: &Value) -> Vec<String> {
    fn walk(value: &Value, prefix: &str, out: &mut Vec<String>) {
        let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
        match value {
            Value::Number(_) => out.push(prefix.to_string()),
            Value::Object(map) => map.iter().for_each(|(k, v)| walk(v, &join(k), out)),
            Value::Array(items) => {
                for (i, v) in items.iter().enumerate() {
                    walk(v, &join(&index_name(i, items.len())), out);
                }
            }
            _ => {}
        }
    }
    let mut out = Vec::new();
    walk(value, "", &mut out);
    out
}

fn index_name(i: usize, len: usize) -> String {
    match (len, i) {
        (3, 0) => "x".into(),
        (3, 1) => "y".into(),
        (3, 2) => "z".into(),
        _ => i.to_string(),
    }
}

fn lookup<'a>(value: &'a mut Value, key: &str) -> Option<&'a mut Value> {
    let mut node = value;
    for part in key.split('.') {
        node = match node {
            Value::Object(map) => map.get_mut(part)?,
            Value::Array(items) => {
                let len = items.len();
                let index = (0..len).find(|&i| index_name(i, len) == part)?;
                &mut items[index]
            }
            _ => return None,
        };
    }
    node.is_number().then_some(node)
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("unknown setting '{key}'")]
pub struct UnknownKey {
    pub key: String,
    pub known: Vec<String>,
}

/// Overwrites the numeric setting at `key`. Keys are tried from the document root,
/// then inside `controller`, so `gains.k_ca.trans.x` works as a short form.
pub fn set_numeric(value: &mut Value, key: &str, number: f64) -> Result<(), UnknownKey> {
    let unknown = |value: &Value| UnknownKey {
        key: key.to_string(),
        known: numeric_keys(value),
    };
    let Some(number) = serde_json::Number::from_f64(number) else {
        return Err(unknown(value));
    };
    if lookup(value, key).is_none() && lookup(value, &format!("controller.{key}")).is_none() {
        return Err(unknown(value));
    }
    let slot = match lookup(value, key) {
        Some(slot) => slot,
        None => lookup(value, &format!("controller.{key}")).expect("checked above"),
    };
    *slot = Value::Number(number);
    Ok(())
}
