mod common;

use impedance_core::dynamics::{
    bias_torques, forward_dynamics, forward_step, gravity_torques, inverse_dynamics, kinetic_energy, mass_matrix,
    DynamicsError,
};
use impedance_core::State;
use nalgebra::{DVector, Vector3};

#[test]
fn inverse_dynamics_matches_lagrangian_oracle() {
    let gravity = Vector3::new(0.0, -9.81, 0.0);
    for (chain, seed) in [(common::planar2(), 21), (common::panda(), 22)] {
        let mut rng = common::rng(seed);
        for _ in 0..10 {
            let q = common::random_q(&mut rng, &chain);
            let qdot = common::random_vector(&mut rng, chain.dof(), 2.0);
            let qddot = common::random_vector(&mut rng, chain.dof(), 5.0);
            let tau = inverse_dynamics(&chain, &q, &qdot, &qddot, &gravity).unwrap();
            let oracle = common::lagrangian_inverse_dynamics(&chain, &q, &qdot, &qddot, &gravity);
            let err = (tau - &oracle).amax();
            assert!(err <= 1e-6 * (1.0 + oracle.amax()), "error {err}");
        }
    }
}

#[test]
fn mass_matrix_matches_energy_oracle() {
    for (chain, seed) in [(common::planar2(), 23), (common::panda(), 24)] {
        let mut rng = common::rng(seed);
        for _ in 0..20 {
            let q = common::random_q(&mut rng, &chain);
            let m = mass_matrix(&chain, &q).unwrap();
            assert!(common::max_abs(&(m - common::energy_mass_matrix(&chain, &q))) < 1e-12);
        }
    }
}

#[test]
fn planar_closed_form_terms() {
    let chain = common::planar2();
    let mut rng = common::rng(25);
    for _ in 0..50 {
        let q = common::random_q(&mut rng, &chain);
        let qdot = common::random_vector(&mut rng, 2, 3.0);
        let (m, c) = common::planar2_closed_form(&q, &qdot);
        assert!(common::max_abs(&(mass_matrix(&chain, &q).unwrap() - m)) < 1e-12);
        assert!((bias_torques(&chain, &q, &qdot).unwrap() - c).amax() < 1e-12);
    }
}

#[test]
fn bias_is_quadratic_in_velocity() {
    let chain = common::panda();
    let mut rng = common::rng(26);
    let q = common::random_q(&mut rng, &chain);
    let qdot = common::random_vector(&mut rng, 7, 1.0);
    let one = bias_torques(&chain, &q, &qdot).unwrap();
    let three = bias_torques(&chain, &q, &(&qdot * 3.0)).unwrap();
    assert!((three - one * 9.0).amax() < 1e-10);
    assert!(bias_torques(&chain, &q, &DVector::zeros(7)).unwrap().amax() == 0.0);
}

#[test]
fn gravity_torque_is_potential_gradient() {
    let chain = common::panda();
    let g = Vector3::new(0.0, 0.0, -9.81);
    let mut rng = common::rng(27);
    for _ in 0..10 {
        let q = common::random_q(&mut rng, &chain);
        let tau = gravity_torques(&chain, &q, &g).unwrap();
        for k in 0..7 {
            let h = 1e-6;
            let mut plus = q.clone();
            let mut minus = q.clone();
            plus[k] += h;
            minus[k] -= h;
            let grad = (common::potential_energy(&chain, &plus, &g) - common::potential_energy(&chain, &minus, &g)) / (2.0 * h);
            assert!((tau[k] - grad).abs() < 1e-7);
        }
    }
}

#[test]
fn forward_dynamics_inverts_inverse_dynamics() {
    let chain = common::panda();
    let g = Vector3::new(0.0, 0.0, -9.81);
    let mut rng = common::rng(28);
    for _ in 0..20 {
        let q = common::random_q(&mut rng, &chain);
        let qdot = common::random_vector(&mut rng, 7, 1.0);
        let qddot = common::random_vector(&mut rng, 7, 3.0);
        let tau = inverse_dynamics(&chain, &q, &qdot, &qddot, &g).unwrap();
        let state = State::new(q, qdot).unwrap();
        let back = forward_dynamics(&chain, &state, &tau, &g).unwrap();
        assert!((back - qddot).amax() < 1e-8);
    }
}

#[test]
fn step_rejects_bad_inputs() {
    let chain = common::planar2();
    let state = State::at_rest(DVector::zeros(2));
    let tau = DVector::zeros(2);
    let g = Vector3::zeros();
    assert!(matches!(
        forward_step(&chain, &state, &tau, &tau, &g, 0.0),
        Err(DynamicsError::InvalidTimeStep(_))
    ));
    assert!(matches!(
        forward_step(&chain, &state, &DVector::zeros(3), &tau, &g, 1e-3),
        Err(DynamicsError::Dimension(_))
    ));
}

#[test]
fn kinetic_energy_matches_mass_matrix_quadratic_form() {
    let chain = common::planar2();
    let state = State::new(DVector::from_vec(vec![0.3, -0.7]), DVector::from_vec(vec![1.0, 2.0])).unwrap();
    let (m, _) = common::planar2_closed_form(&state.q, &state.qdot);
    let expected = 0.5 * (state.qdot.transpose() * m * &state.qdot)[(0, 0)];
    assert!((kinetic_energy(&chain, &state).unwrap() - expected).abs() < 1e-12);
}
