//! Corpus loaders and independent reference computations shared by the test targets.
#![allow(dead_code)]

use std::path::PathBuf;

use impedance_core::kinematics::{chain_frames, forward_kinematics};
use impedance_core::model::{extract_chain, parse_robot_description, RobotModel};
use impedance_core::scenario::Scenario;
use impedance_core::Chain;
use nalgebra::{DMatrix, DVector, Matrix3, UnitQuaternion, Vector3};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn model(file: &str) -> RobotModel {
    let text = std::fs::read_to_string(crate_dir().join("models").join(file)).unwrap();
    parse_robot_description(&text).unwrap().model
}

pub fn chain(file: &str, base: &str, tip: &str) -> Chain {
    extract_chain(&model(file), base, tip).unwrap()
}

pub fn panda() -> Chain {
    chain("panda_like.urdf", "link0", "tcp")
}

pub fn planar2() -> Chain {
    chain("planar2.urdf", "base", "tip")
}

pub fn pendulum() -> Chain {
    chain("pendulum.urdf", "base", "bob")
}

pub fn one_dof() -> Chain {
    chain("one_dof.urdf", "base", "tip")
}

pub fn scenario_path(name: &str) -> PathBuf {
    crate_dir().join("scenarios").join(name)
}

pub fn scenario_json(name: &str) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(scenario_path(name)).unwrap()).unwrap()
}

pub fn scenario(doc: serde_json::Value) -> Scenario {
    Scenario::from_value(doc, &crate_dir().join("scenarios")).unwrap()
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Joint angles inside the model's limits (or ±π where there are none).
pub fn random_q(rng: &mut StdRng, chain: &Chain) -> DVector<f64> {
    DVector::from_iterator(
        chain.dof(),
        chain.joints().iter().map(|j| {
            let [lo, hi] = j.position_limits.unwrap_or([-std::f64::consts::PI, std::f64::consts::PI]);
            rng.gen_range(lo..hi)
        }),
    )
}

pub fn random_vector(rng: &mut StdRng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_iterator(n, (0..n).map(|_| rng.gen_range(-scale..scale)))
}

/// Rotation vector of `r` computed from the matrix (trace/antisymmetric part), valid
/// for angles well below π.
pub fn small_rotation_vector(r: &Matrix3<f64>) -> Vector3<f64> {
    let cos = ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    let angle = cos.acos();
    let axis_sin = Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]) / 2.0;
    if angle < 1e-12 {
        axis_sin
    } else {
        axis_sin * (angle / angle.sin())
    }
}

/// Central finite-difference Jacobian of the tip pose: position rows from the
/// translation, orientation rows from the relative rotation between the two samples.
pub fn fd_jacobian(chain: &Chain, q: &DVector<f64>, h: f64) -> DMatrix<f64> {
    let mut jac = DMatrix::zeros(6, chain.dof());
    for j in 0..chain.dof() {
        let mut plus = q.clone();
        let mut minus = q.clone();
        plus[j] += h;
        minus[j] -= h;
        let a = forward_kinematics(chain, &plus).unwrap();
        let b = forward_kinematics(chain, &minus).unwrap();
        let dp = (a.translation - b.translation) / (2.0 * h);
        let dr = a.rotation_matrix() * b.rotation_matrix().transpose();
        let w = small_rotation_vector(&dr) / (2.0 * h);
        for r in 0..3 {
            jac[(r, j)] = dp[r];
            jac[(r + 3, j)] = w[r];
        }
    }
    jac
}

/// World position of each body's centre of mass and its world-frame inertia tensor.
fn bodies(chain: &Chain, q: &DVector<f64>) -> Vec<(f64, Vector3<f64>, Matrix3<f64>)> {
    let frames = chain_frames(chain, q).unwrap();
    chain
        .joints()
        .iter()
        .zip(&frames.joints)
        .map(|(joint, frame)| {
            let r = frame.rotation.to_rotation_matrix().into_inner();
            let com = frame.transform_point(&joint.body.com.into()).coords;
            (joint.body.mass, com, r * joint.body.inertia * r.transpose())
        })
        .collect()
}

/// Mass matrix from the kinetic energy of each body, using per-body point Jacobians:
/// `M = Σ m Jvᵀ Jv + Jωᵀ I Jω`.
pub fn energy_mass_matrix(chain: &Chain, q: &DVector<f64>) -> DMatrix<f64> {
    let n = chain.dof();
    let frames = chain_frames(chain, q).unwrap();
    let axes: Vec<(Vector3<f64>, Vector3<f64>)> = chain
        .joints()
        .iter()
        .zip(&frames.joints)
        .map(|(j, f)| (f.rotation * j.axis.into_inner(), f.translation.vector))
        .collect();
    let mut m = DMatrix::zeros(n, n);
    for (i, (mass, com, inertia)) in bodies(chain, q).into_iter().enumerate() {
        let mut jv = DMatrix::zeros(3, n);
        let mut jw = DMatrix::zeros(3, n);
        for (k, (z, p)) in axes.iter().enumerate().take(i + 1) {
            jv.set_column(k, &z.cross(&(com - p)));
            jw.set_column(k, z);
        }
        let inertia = DMatrix::from_column_slice(3, 3, inertia.as_slice());
        m += jv.transpose() * &jv * mass + jw.transpose() * inertia * &jw;
    }
    m
}

pub fn potential_energy(chain: &Chain, q: &DVector<f64>, gravity: &Vector3<f64>) -> f64 {
    bodies(chain, q).iter().map(|(m, c, _)| -m * gravity.dot(c)).sum()
}

/// Joint torques from the Euler–Lagrange equations with finite-difference derivatives
/// of the energy mass matrix and potential: `M q̈ + c(q, q̇) + ∂V/∂q`.
pub fn lagrangian_inverse_dynamics(
    chain: &Chain,
    q: &DVector<f64>,
    qdot: &DVector<f64>,
    qddot: &DVector<f64>,
    gravity: &Vector3<f64>,
) -> DVector<f64> {
    let n = chain.dof();
    let h = 1e-6;
    let mut dm = Vec::with_capacity(n);
    let mut dv = DVector::zeros(n);
    for k in 0..n {
        let mut plus = q.clone();
        let mut minus = q.clone();
        plus[k] += h;
        minus[k] -= h;
        dm.push((energy_mass_matrix(chain, &plus) - energy_mass_matrix(chain, &minus)) / (2.0 * h));
        dv[k] = (potential_energy(chain, &plus, gravity) - potential_energy(chain, &minus, gravity)) / (2.0 * h);
    }
    let mut coriolis = DVector::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                coriolis[i] += (dm[k][(i, j)] - 0.5 * dm[i][(j, k)]) * qdot[j] * qdot[k];
            }
        }
    }
    energy_mass_matrix(chain, q) * qddot + coriolis + dv
}

/// Closed-form dynamics of the planar two-link corpus arm (joints about z, link 1 of
/// length 1 m): mass matrix and Coriolis/centrifugal torques.
pub fn planar2_closed_form(q: &DVector<f64>, qdot: &DVector<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let (m1, lc1, i1) = (1.0, 0.5, 0.1);
    let (m2, lc2, i2) = (0.8, 0.4, 0.05);
    let l1 = 1.0;
    let (c2, s2) = (q[1].cos(), q[1].sin());
    let m11 = i1 + i2 + m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * c2);
    let m12 = i2 + m2 * (lc2 * lc2 + l1 * lc2 * c2);
    let m22 = i2 + m2 * lc2 * lc2;
    let h = m2 * l1 * lc2 * s2;
    let bias = DVector::from_vec(vec![
        -h * (2.0 * qdot[0] * qdot[1] + qdot[1] * qdot[1]),
        h * qdot[0] * qdot[0],
    ]);
    (DMatrix::from_row_slice(2, 2, &[m11, m12, m12, m22]), bias)
}

/// Fourth-order Runge–Kutta integration of the unforced pendulum corpus model
/// (1 kg at 1 m, q measured up from horizontal): `q̈ = −g cos q`.
pub fn pendulum_rk4(q0: f64, qdot0: f64, g: f64, duration: f64, dt: f64) -> Vec<(f64, f64)> {
    let f = |q: f64, w: f64| (w, -g * q.cos());
    let steps = (duration / dt).round() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let (mut q, mut w) = (q0, qdot0);
    out.push((q, w));
    for _ in 0..steps {
        let k1 = f(q, w);
        let k2 = f(q + 0.5 * dt * k1.0, w + 0.5 * dt * k1.1);
        let k3 = f(q + 0.5 * dt * k2.0, w + 0.5 * dt * k2.1);
        let k4 = f(q + dt * k3.0, w + dt * k3.1);
        q += dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        w += dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        out.push((q, w));
    }
    out
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
}

pub fn quaternion_angle(a: &UnitQuaternion<f64>, b: &UnitQuaternion<f64>) -> f64 {
    a.angle_to(b)
}
