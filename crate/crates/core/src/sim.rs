//! Closed-loop simulation: controller and rigid-body dynamics stepped at one fixed rate.

use std::path::Path;
use std::sync::mpsc;
use std::thread;

use nalgebra::{DVector, Vector3, Vector6};
use serde_json::Value;
use thiserror::Error;

use crate::controller::{trajectory_target, Command, ControllerError, JointTrajectory, StepInput};
use crate::dynamics::{forward_step, gravity_torques, DynamicsError};
use crate::kinematics::{chain_frames, jacobian_from_frames, rotate_six, CartesianPose, TaskFrame};
use crate::record::LogRecord;
use crate::scenario::{set_numeric, EventAction, Scenario, ScenarioError, UnknownKey};
use crate::{Controller, DimensionError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("t = {t} s: {source}")]
    Controller {
        t: f64,
        #[source]
        source: ControllerError,
    },
    #[error("t = {t} s: {source}")]
    Dynamics {
        t: f64,
        #[source]
        source: DynamicsError,
    },
    #[error("t = {t} s: {source}")]
    Kinematics {
        t: f64,
        #[source]
        source: DimensionError,
    },
    /// The state went non-finite in the step after `last_good`; `records` holds the log
    /// up to and including that step.
    #[error("state became non-finite after t = {last_good} s")]
    NonFiniteState { last_good: f64, records: Vec<LogRecord> },
}

/// Event times are met when `t` is within this fraction of a step of them.
const EVENT_TOLERANCE: f64 = 1e-9;

/// Number of control steps in a scenario.
pub fn step_count(scenario: &Scenario) -> usize {
    ((scenario.duration / scenario.dt).round() as usize).max(1)
}

pub fn run_scenario(scenario: &Scenario) -> Result<Vec<LogRecord>, SimError> {
    let chain = &scenario.chain;
    let dt = scenario.dt;
    let mut controller = Controller::new(scenario.config.clone(), scenario.gains.clone(), scenario.targets.clone())
        .map_err(|source| SimError::Controller { t: 0.0, source })?;
    let (mailbox, inbox) = mpsc::channel();
    let mut state = scenario.initial.clone();
    let mut next_event = 0;
    let mut trajectory: Option<&JointTrajectory<f64>> = None;
    let steps = step_count(scenario);
    let mut records = Vec::with_capacity(steps);

    for k in 0..steps {
        let t = k as f64 * dt;
        let due = t + EVENT_TOLERANCE * dt;
        let controller_err = |source| SimError::Controller { t, source };
        let kinematics_err = |source| SimError::Kinematics { t, source };

        while let Some(event) = scenario.events.get(next_event).filter(|e| e.time <= due) {
            match &event.action {
                EventAction::Command(command) => {
                    if matches!(command, Command::SetPose(_) | Command::SetNullspaceTarget(_)) {
                        trajectory = None;
                    }
                    mailbox.send(command.clone()).expect("inbox is alive");
                }
                EventAction::Trajectory(traj) => trajectory = Some(traj),
            }
            next_event += 1;
        }
        if let Some(traj) = trajectory {
            let (q, pose) = trajectory_target(traj, t, chain).map_err(kinematics_err)?;
            mailbox.send(Command::SetPose(pose)).expect("inbox is alive");
            mailbox.send(Command::SetNullspaceTarget(q)).expect("inbox is alive");
        }
        for warning in controller.drain(&inbox).map_err(controller_err)? {
            log::warn!("t = {t} s: {warning:?} target outside bounds, saturated");
        }

        let frames = chain_frames(chain, &state.q).map_err(kinematics_err)?;
        let pose = CartesianPose::from_isometry(&frames.tip);
        let jacobian = jacobian_from_frames(chain, &frames);
        let gravity_torque = if scenario.config.gravity_feedforward {
            Some(gravity_torques(chain, &state.q, &scenario.gravity).map_err(kinematics_err)?)
        } else {
            None
        };
        let output = controller
            .step(&StepInput {
                q: &state.q,
                qdot: &state.qdot,
                jacobian: &jacobian,
                pose: &pose,
                dt,
                gravity_torque: gravity_torque.as_ref(),
            })
            .map_err(controller_err)?;

        let rotation = pose.rotation_matrix();
        let mut external = Vector6::zeros();
        for w in scenario.external_wrenches.iter().filter(|w| w.active(due)) {
            external += match w.frame {
                TaskFrame::Base => w.wrench,
                TaskFrame::EndEffector => rotate_six(&rotation, &w.wrench),
            };
        }
        let velocity = &jacobian * &state.qdot;
        let linear = Vector3::new(velocity[0], velocity[1], velocity[2]);
        for wall in &scenario.walls {
            let force = wall.force(&pose.translation, &linear);
            let mut linear_part = external.fixed_rows_mut::<3>(0);
            linear_part += force;
        }
        let tau_ext: DVector<f64> = jacobian.tr_mul(&external);

        let filters = controller.filters();
        let gains = &filters.gains.current;
        let q = pose.orientation.quaternion();
        records.push(LogRecord {
            t,
            q: state.q.as_slice().to_vec(),
            qdot: state.qdot.as_slice().to_vec(),
            position: pose.translation.into(),
            orientation: [q.w, q.i, q.j, q.k],
            pose_error: output.pose_error.into(),
            tau_cartesian: output.cartesian.as_slice().to_vec(),
            tau_nullspace: output.nullspace.as_slice().to_vec(),
            tau_wrench: output.wrench.as_slice().to_vec(),
            tau_gravity: output.gravity.as_slice().to_vec(),
            tau_c: output.torque.as_slice().to_vec(),
            external_wrench: external.into(),
            commanded_wrench: filters.wrench.current.into(),
            k_cartesian: gains.cartesian_stiffness.diagonal().into(),
            d_cartesian: gains.cartesian_damping.diagonal().into(),
            k_nullspace: gains.nullspace_stiffness.diagonal().as_slice().to_vec(),
            d_nullspace: gains.nullspace_damping.diagonal().as_slice().to_vec(),
        });

        let next = forward_step(chain, &state, &output.torque, &tau_ext, &scenario.gravity, dt)
            .map_err(|source| SimError::Dynamics { t, source })?;
        if !next.is_finite() {
            return Err(SimError::NonFiniteState { last_good: t, records });
        }
        state = next;
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReportError {
    #[error("log is empty")]
    EmptyLog,
    #[error("window of {window} s is longer than the {duration} s log")]
    WindowTooLong { window: f64, duration: f64 },
    #[error("window must be positive, got {0}")]
    InvalidWindow(f64),
}

/// Statistics over the trailing part of a log.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateReport {
    pub window: f64,
    pub samples: usize,
    pub mean_pose_error: Vector6<f64>,
    pub max_abs_pose_error: Vector6<f64>,
    pub mean_torque: DVector<f64>,
    pub max_abs_torque: DVector<f64>,
    /// Largest torque vector norm seen in the window.
    pub max_torque_norm: f64,
}

impl SteadyStateReport {
    pub fn mean_translation_error(&self) -> f64 {
        self.mean_pose_error.fixed_rows::<3>(0).norm()
    }

    pub fn mean_rotation_error(&self) -> f64 {
        self.mean_pose_error.fixed_rows::<3>(3).norm()
    }
}

impl std::fmt::Display for SteadyStateReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:.6e}")).collect::<Vec<_>>().join(", ");
        writeln!(f, "steady state over last {} s ({} samples)", self.window, self.samples)?;
        writeln!(f, "  mean pose error     [{}]", list(self.mean_pose_error.as_slice()))?;
        writeln!(f, "  max |pose error|    [{}]", list(self.max_abs_pose_error.as_slice()))?;
        writeln!(f, "  |mean translation|  {:.6e} m", self.mean_translation_error())?;
        writeln!(f, "  |mean rotation|     {:.6e} rad", self.mean_rotation_error())?;
        writeln!(f, "  mean torque         [{}]", list(self.mean_torque.as_slice()))?;
        writeln!(f, "  max |torque|        [{}]", list(self.max_abs_torque.as_slice()))?;
        write!(f, "  max torque norm     {:.6e} N·m", self.max_torque_norm)
    }
}

/// Summarises the records in the last `window` seconds of `log`.
pub fn steady_state_report(log: &[LogRecord], window: f64) -> Result<SteadyStateReport, ReportError> {
    let (first, last) = match (log.first(), log.last()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(ReportError::EmptyLog),
    };
    if !(window > 0.0 && window.is_finite()) {
        return Err(ReportError::InvalidWindow(window));
    }
    let step = if log.len() > 1 { log[1].t - log[0].t } else { 0.0 };
    let duration = last.t - first.t + step;
    if window > duration * (1.0 + 1e-9) {
        return Err(ReportError::WindowTooLong { window, duration });
    }
    let start = last.t - window + 0.5 * step;
    let tail: Vec<&LogRecord> = log.iter().filter(|r| r.t >= start).collect();
    let n = last.tau_c.len();
    let count = tail.len() as f64;
    let mut mean_pose_error = Vector6::zeros();
    let mut max_abs_pose_error = Vector6::zeros();
    let mut mean_torque = DVector::zeros(n);
    let mut max_abs_torque = DVector::zeros(n);
    let mut max_torque_norm = 0.0_f64;
    for record in &tail {
        let e = Vector6::from(record.pose_error);
        let tau = DVector::from_column_slice(&record.tau_c);
        mean_pose_error += e / count;
        max_abs_pose_error = max_abs_pose_error.sup(&e.abs());
        mean_torque += &tau / count;
        max_abs_torque = max_abs_torque.sup(&tau.abs());
        max_torque_norm = max_torque_norm.max(tau.norm());
    }
    Ok(SteadyStateReport {
        window,
        samples: tail.len(),
        mean_pose_error,
        max_abs_pose_error,
        mean_torque,
        max_abs_torque,
        max_torque_norm,
    })
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("no values to sweep")]
    NoValues,
    #[error(transparent)]
    UnknownKey(#[from] UnknownKey),
    #[error("{key} = {value}: {source}")]
    Scenario {
        key: String,
        value: f64,
        #[source]
        source: ScenarioError,
    },
    #[error("{key} = {value}: {source}")]
    Sim {
        key: String,
        value: f64,
        #[source]
        source: SimError,
    },
    #[error("{key} = {value}: {source}")]
    Report {
        key: String,
        value: f64,
        #[source]
        source: ReportError,
    },
}

/// Runs the scenario document once per value of the setting `key`, in parallel, and
/// reports the trailing `window` seconds of each run. Results follow the order of `values`.
pub fn sweep(
    document: &Value,
    dir: &Path,
    key: &str,
    values: &[f64],
    window: f64,
) -> Result<Vec<(f64, SteadyStateReport)>, SweepError> {
    if values.is_empty() {
        return Err(SweepError::NoValues);
    }
    let mut documents = Vec::with_capacity(values.len());
    for &value in values {
        let mut doc = document.clone();
        set_numeric(&mut doc, key, value)?;
        documents.push(doc);
    }
    let run = |value: f64, doc: Value| -> Result<SteadyStateReport, SweepError> {
        let key = key.to_string();
        let scenario = Scenario::from_value(doc, dir).map_err(|source| SweepError::Scenario {
            key: key.clone(),
            value,
            source,
        })?;
        let log = run_scenario(&scenario).map_err(|source| SweepError::Sim {
            key: key.clone(),
            value,
            source,
        })?;
        steady_state_report(&log, window).map_err(|source| SweepError::Report { key, value, source })
    };
    let results: Vec<_> = thread::scope(|scope| {
        let handles: Vec<_> = values
            .iter()
            .zip(documents)
            .map(|(&value, doc)| scope.spawn(move || run(value, doc)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    values.iter().zip(results).map(|(&v, r)| r.map(|report| (v, report))).collect()
}
