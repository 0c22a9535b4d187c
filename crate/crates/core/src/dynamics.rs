//! Rigid-body dynamics of a serial chain: `M(q) q̈ + C(q, q̇) q̇ + g(q) = τ`.
//!
//! Inverse dynamics uses the recursive Newton-Euler algorithm; the mass matrix uses the
//! composite-rigid-body algorithm. Both work in joint frames (the frame of joint `i`
//! after its rotation, in which body `i`'s inertia is stored).

use nalgebra::{DMatrix, DVector, Matrix3, Matrix6, UnitQuaternion, Vector3, Vector6};
use thiserror::Error;

use crate::model::KinematicChain;
use crate::{DimensionError, Real};

/// Mass matrices with a condition number above this are treated as singular.
pub const MAX_MASS_MATRIX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct JointState<T: Real> {
    /// Joint positions (rad).
    pub q: DVector<T>,
    /// Joint velocities (rad/s).
    pub qdot: DVector<T>,
}

impl<T: Real> JointState<T> {
    pub fn new(q: DVector<T>, qdot: DVector<T>) -> Result<Self, DimensionError> {
        DimensionError::check("joint velocities", q.len(), qdot.len())?;
        Ok(Self { q, qdot })
    }

    pub fn at_rest(q: DVector<T>) -> Self {
        let n = q.len();
        Self {
            q,
            qdot: DVector::zeros(n),
        }
    }

    pub fn dof(&self) -> usize {
        self.q.len()
    }

    pub fn is_finite(&self) -> bool {
        crate::all_finite(&self.q) && crate::all_finite(&self.qdot)
    }
}

/// The terms of the joint-space equation of motion at one state.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsTerms<T: Real> {
    pub mass_matrix: DMatrix<T>,
    /// `C(q, q̇) q̇`
    pub bias: DVector<T>,
    pub gravity: DVector<T>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Dimension(#[from] DimensionError),
    #[error("mass matrix is singular or ill-conditioned (condition number {condition:e})")]
    SingularMassMatrix { condition: f64 },
    #[error("time step must be positive and finite, got {0}")]
    InvalidTimeStep(f64),
}

fn skew<T: Real>(v: &Vector3<T>) -> Matrix3<T> {
    Matrix3::new(T::ZERO, -v.z, v.y, v.z, T::ZERO, -v.x, -v.y, v.x, T::ZERO)
}

/// Pose of each joint frame in its predecessor: `(rotation, translation)`.
fn relative_transforms<T: Real>(chain: &KinematicChain<T>, q: &DVector<T>) -> Vec<(Matrix3<T>, Vector3<T>)> {
    chain
        .joints()
        .iter()
        .zip(q.iter())
        .map(|(joint, &angle)| {
            let iso = joint.parent_to_joint * UnitQuaternion::from_axis_angle(&joint.axis, angle);
            (iso.rotation.to_rotation_matrix().into_inner(), iso.translation.vector)
        })
        .collect()
}

/// `τ = M(q) q̈ + C(q, q̇) q̇ + g(q)` for a uniform gravitational acceleration `gravity`
/// (m/s², base frame; e.g. `(0, 0, −9.81)`).
pub fn inverse_dynamics<T: Real>(
    chain: &KinematicChain<T>,
    q: &DVector<T>,
    qdot: &DVector<T>,
    qddot: &DVector<T>,
    gravity: &Vector3<T>,
) -> Result<DVector<T>, DimensionError> {
    let n = chain.dof();
    DimensionError::check("joint positions", n, q.len())?;
    DimensionError::check("joint velocities", n, qdot.len())?;
    DimensionError::check("joint accelerations", n, qddot.len())?;

    let xforms = relative_transforms(chain, q);
    let mut force = Vec::with_capacity(n);
    let mut moment = Vec::with_capacity(n);

    // Gravity enters as an upward acceleration of the base.
    let mut omega = Vector3::zeros();
    let mut alpha = Vector3::zeros();
    let mut lin = -gravity;
    for (i, joint) in chain.joints().iter().enumerate() {
        let (rot, p) = &xforms[i];
        let axis = joint.axis.into_inner();
        let rt = rot.transpose();
        let lin_i = rt * (lin + alpha.cross(p) + omega.cross(&omega.cross(p)));
        let omega_in = rt * omega;
        let omega_i = omega_in + axis * qdot[i];
        let alpha_i = rt * alpha + omega_in.cross(&(axis * qdot[i])) + axis * qddot[i];

        let body = &joint.body;
        let acc_com = lin_i + alpha_i.cross(&body.com) + omega_i.cross(&omega_i.cross(&body.com));
        force.push(acc_com * body.mass);
        moment.push(body.inertia * alpha_i + omega_i.cross(&(body.inertia * omega_i)));

        omega = omega_i;
        alpha = alpha_i;
        lin = lin_i;
    }

    let mut tau = DVector::zeros(n);
    let mut f_next = Vector3::zeros();
    let mut n_next = Vector3::zeros();
    for i in (0..n).rev() {
        let body = &chain.joints()[i].body;
        let (f_child, n_child) = if i + 1 < n {
            let (rot, p) = &xforms[i + 1];
            let f = rot * f_next;
            (f, rot * n_next + p.cross(&f))
        } else {
            (Vector3::zeros(), Vector3::zeros())
        };
        let f_i = force[i] + f_child;
        let n_i = moment[i] + body.com.cross(&force[i]) + n_child;
        tau[i] = chain.joints()[i].axis.dot(&n_i);
        f_next = f_i;
        n_next = n_i;
    }
    Ok(tau)
}

/// Joint-space inertia matrix by the composite-rigid-body algorithm.
pub fn mass_matrix<T: Real>(chain: &KinematicChain<T>, q: &DVector<T>) -> Result<DMatrix<T>, DimensionError> {
    let n = chain.dof();
    DimensionError::check("joint positions", n, q.len())?;
    let xforms = relative_transforms(chain, q);

    // Spatial quantities are (angular; linear). Force transform from frame i into its
    // predecessor: [[R, p̂R], [0, R]].
    let force_xform = |i: usize| -> Matrix6<T> {
        let (rot, p) = &xforms[i];
        let mut x = Matrix6::zeros();
        x.fixed_view_mut::<3, 3>(0, 0).copy_from(rot);
        x.fixed_view_mut::<3, 3>(0, 3).copy_from(&(skew(p) * rot));
        x.fixed_view_mut::<3, 3>(3, 3).copy_from(rot);
        x
    };

    let mut composite: Vec<Matrix6<T>> = chain
        .joints()
        .iter()
        .map(|joint| {
            let b = &joint.body;
            let c = skew(&b.com);
            let mut inertia = Matrix6::zeros();
            inertia
                .fixed_view_mut::<3, 3>(0, 0)
                .copy_from(&(b.inertia + c * c.transpose() * b.mass));
            inertia.fixed_view_mut::<3, 3>(0, 3).copy_from(&(c * b.mass));
            inertia.fixed_view_mut::<3, 3>(3, 0).copy_from(&(c.transpose() * b.mass));
            inertia
                .fixed_view_mut::<3, 3>(3, 3)
                .copy_from(&(Matrix3::identity() * b.mass));
            inertia
        })
        .collect();
    for i in (1..n).rev() {
        let x = force_xform(i);
        let carried = x * composite[i] * x.transpose();
        composite[i - 1] += carried;
    }

    let motion_axis = |i: usize| -> Vector6<T> {
        let a = chain.joints()[i].axis;
        Vector6::new(a.x, a.y, a.z, T::ZERO, T::ZERO, T::ZERO)
    };
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut f = composite[i] * motion_axis(i);
        m[(i, i)] = motion_axis(i).dot(&f);
        for j in (0..i).rev() {
            f = force_xform(j + 1) * f;
            let value = motion_axis(j).dot(&f);
            m[(i, j)] = value;
            m[(j, i)] = value;
        }
    }
    Ok(m)
}

/// Coriolis and centripetal torques `C(q, q̇) q̇`.
pub fn bias_torques<T: Real>(chain: &KinematicChain<T>, q: &DVector<T>, qdot: &DVector<T>) -> Result<DVector<T>, DimensionError> {
    let n = chain.dof();
    inverse_dynamics(chain, q, qdot, &DVector::zeros(n), &Vector3::zeros())
}

/// Torques needed to hold the chain still against `gravity`.
pub fn gravity_torques<T: Real>(chain: &KinematicChain<T>, q: &DVector<T>, gravity: &Vector3<T>) -> Result<DVector<T>, DimensionError> {
    let n = chain.dof();
    inverse_dynamics(chain, q, &DVector::zeros(n), &DVector::zeros(n), gravity)
}

pub fn dynamics_terms<T: Real>(
    chain: &KinematicChain<T>,
    state: &JointState<T>,
    gravity: &Vector3<T>,
) -> Result<DynamicsTerms<T>, DimensionError> {
    Ok(DynamicsTerms {
        mass_matrix: mass_matrix(chain, &state.q)?,
        bias: bias_torques(chain, &state.q, &state.qdot)?,
        gravity: gravity_torques(chain, &state.q, gravity)?,
    })
}

/// Solves `M(q) q̈ = τ − C q̇ − g` with a Cholesky factorization, rejecting
/// ill-conditioned mass matrices.
pub fn forward_dynamics<T: Real>(
    chain: &KinematicChain<T>,
    state: &JointState<T>,
    tau: &DVector<T>,
    gravity: &Vector3<T>,
) -> Result<DVector<T>, DynamicsError> {
    let n = chain.dof();
    DimensionError::check("joint velocities", n, state.qdot.len())?;
    DimensionError::check("joint torques", n, tau.len())?;
    let m = mass_matrix(chain, &state.q)?;
    // bias + gravity in one pass
    let h = inverse_dynamics(chain, &state.q, &state.qdot, &DVector::zeros(n), gravity)?;

    let eigen = m.clone().symmetric_eigenvalues();
    let (lo, hi) = (eigen.min(), eigen.max());
    let condition = if lo > T::ZERO { (hi / lo).to_f64() } else { f64::INFINITY };
    if !(condition <= MAX_MASS_MATRIX_CONDITION) {
        return Err(DynamicsError::SingularMassMatrix { condition });
    }
    let chol = m
        .cholesky()
        .ok_or(DynamicsError::SingularMassMatrix { condition })?;
    Ok(chol.solve(&(tau - h)))
}

/// One semi-implicit Euler step of `M q̈ + C q̇ + g = τ_c + τ_ext`.
pub fn forward_step<T: Real>(
    chain: &KinematicChain<T>,
    state: &JointState<T>,
    tau_c: &DVector<T>,
    tau_ext: &DVector<T>,
    gravity: &Vector3<T>,
    dt: T,
) -> Result<JointState<T>, DynamicsError> {
    if !(dt > T::ZERO && dt.is_finite()) {
        return Err(DynamicsError::InvalidTimeStep(dt.to_f64()));
    }
    DimensionError::check("joint positions", chain.dof(), state.q.len())?;
    DimensionError::check("commanded joint torques", chain.dof(), tau_c.len())?;
    DimensionError::check("external joint torques", chain.dof(), tau_ext.len())?;
    let qddot = forward_dynamics(chain, state, &(tau_c + tau_ext), gravity)?;
    let qdot = &state.qdot + qddot * dt;
    let q = &state.q + &qdot * dt;
    Ok(JointState { q, qdot })
}

/// Kinetic energy `½ q̇ᵀ M(q) q̇`.
pub fn kinetic_energy<T: Real>(chain: &KinematicChain<T>, state: &JointState<T>) -> Result<T, DimensionError> {
    let m = mass_matrix(chain, &state.q)?;
    Ok((state.qdot.transpose() * m * &state.qdot)[(0, 0)] * T::HALF)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ChainJoint, RigidBodyInertia};
    use nalgebra::{Isometry3, Unit};

    const G: f64 = 9.81;

    /// 1 kg point mass at 1 m, rotating about −y so that positive q raises the mass
    /// under gravity along −z.
    fn pendulum() -> KinematicChain<f64> {
        let joint = ChainJoint {
            name: "pivot".into(),
            parent_to_joint: Isometry3::identity(),
            axis: Unit::new_normalize(-Vector3::y()),
            position_limits: None,
            effort_limit: None,
            body: RigidBodyInertia::point_mass(1.0, Vector3::x()),
        };
        KinematicChain::new("base", "bob", vec![joint], Isometry3::translation(1.0, 0.0, 0.0)).unwrap()
    }

    fn down() -> Vector3<f64> {
        Vector3::new(0.0, 0.0, -G)
    }

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn no_motion_no_gravity_no_torque() {
        let tau = inverse_dynamics(&pendulum(), &v(&[0.7]), &v(&[0.0]), &v(&[0.0]), &Vector3::zeros()).unwrap();
        assert_eq!(tau, v(&[0.0]));
    }

    #[test]
    fn pendulum_gravity_closed_form() {
        let chain = pendulum();
        for q in [0.0, 0.3, -1.2, 2.0] {
            let g = gravity_torques(&chain, &v(&[q]), &down()).unwrap();
            assert!((g[0] - G * q.cos()).abs() < 1e-12, "q={q}");
        }
        let vertical = gravity_torques(&chain, &v(&[std::f64::consts::FRAC_PI_2]), &down()).unwrap();
        assert!(vertical[0].abs() < 1e-12);
        assert_eq!(gravity_torques(&chain, &v(&[0.3]), &Vector3::zeros()).unwrap(), v(&[0.0]));
    }

    #[test]
    fn pendulum_mass_matrix() {
        let m = mass_matrix(&pendulum(), &v(&[0.4])).unwrap();
        assert!((m[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn equilibrium_step_is_identity() {
        let chain = pendulum();
        let state = JointState::at_rest(v(&[0.2]));
        let next = forward_step(&chain, &state, &v(&[0.0]), &v(&[0.0]), &Vector3::zeros(), 1e-3).unwrap();
        assert_eq!(next, state);
    }

    #[test]
    fn constant_torque_double_integrator() {
        let chain = pendulum();
        let mut state = JointState::at_rest(v(&[0.0]));
        let (tau, dt) = (0.5, 1e-3);
        for _ in 0..1000 {
            state = forward_step(&chain, &state, &v(&[tau]), &v(&[0.0]), &Vector3::zeros(), dt).unwrap();
        }
        assert!((state.qdot[0] - tau * 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_step() {
        let chain = pendulum();
        let state = JointState::at_rest(v(&[0.0]));
        assert!(matches!(
            forward_step(&chain, &state, &v(&[0.0]), &v(&[0.0]), &down(), 0.0),
            Err(DynamicsError::InvalidTimeStep(_))
        ));
        assert!(matches!(
            forward_step(&chain, &state, &v(&[0.0, 1.0]), &v(&[0.0]), &down(), 1e-3),
            Err(DynamicsError::Dimension(_))
        ));
    }

    #[test]
    fn massless_chain_is_singular() {
        let mut chain = pendulum();
        let joints = vec![ChainJoint {
            body: RigidBodyInertia::zero(),
            ..chain.joints()[0].clone()
        }];
        chain = KinematicChain::new("b", "t", joints, Isometry3::identity()).unwrap();
        let state = JointState::at_rest(v(&[0.0]));
        assert!(matches!(
            forward_step(&chain, &state, &v(&[1.0]), &v(&[0.0]), &down(), 1e-3),
            Err(DynamicsError::SingularMassMatrix { .. })
        ));
    }
}
