//! The three torque terms of the control law.

use nalgebra::{DMatrix, DVector, Matrix6, Vector6};

use crate::{DimensionError, Real};

/// Relative singular-value cutoff used for the nullspace projector.
pub const PSEUDO_INVERSE_CUTOFF: f64 = 1e-6;

fn check_jacobian<T: Real>(jac: &DMatrix<T>, n: usize) -> Result<(), DimensionError> {
    DimensionError::check("jacobian rows", 6, jac.nrows())?;
    DimensionError::check("jacobian columns", n, jac.ncols())
}

/// Task-space spring-damper: `Jᵀ (−K Δξ − D J q̇)`.
pub fn cartesian_impedance_torque<T: Real>(
    jac: &DMatrix<T>,
    pose_error: &Vector6<T>,
    qdot: &DVector<T>,
    stiffness: &Matrix6<T>,
    damping: &Matrix6<T>,
) -> Result<DVector<T>, DimensionError> {
    check_jacobian(jac, qdot.len())?;
    let twist = jac * qdot;
    let wrench = -(stiffness * pose_error) - damping * twist;
    Ok(jac.tr_mul(&wrench))
}

/// Moore-Penrose pseudoinverse by SVD. Singular values at or below
/// `relative_cutoff · σ_max` are treated as zero.
pub fn pseudo_inverse<T: Real>(m: &DMatrix<T>, relative_cutoff: T) -> DMatrix<T> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return DMatrix::zeros(cols, rows);
    }
    let svd = m.clone().svd(true, true);
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        unreachable!("svd was asked for both singular vector sets");
    };
    let sigma_max = svd.singular_values.max();
    let threshold = sigma_max * relative_cutoff;
    let mut inv_sigma = svd.singular_values.clone();
    for s in inv_sigma.iter_mut() {
        *s = if *s > threshold && *s > T::ZERO { T::ONE / *s } else { T::ZERO };
    }
    // V Σ⁺ Uᵀ
    let mut v_scaled = v_t.transpose();
    for (mut col, &s) in v_scaled.column_iter_mut().zip(inv_sigma.iter()) {
        col *= s;
    }
    v_scaled * u.transpose()
}

/// `N = I − Jᵀ (Jᵀ)⁺` for a task Jacobian of any row count.
pub fn nullspace_projector<T: Real>(jac: &DMatrix<T>) -> DMatrix<T> {
    nullspace_projector_with_cutoff(jac, T::lit(PSEUDO_INVERSE_CUTOFF))
}

pub fn nullspace_projector_with_cutoff<T: Real>(jac: &DMatrix<T>, relative_cutoff: T) -> DMatrix<T> {
    let n = jac.ncols();
    let jt = jac.transpose();
    let pinv = pseudo_inverse(&jt, relative_cutoff);
    DMatrix::identity(n, n) - jt * pinv
}

/// Posture torque `τ₀ = −K_ns (q − q_d) − D_ns q̇`, projected by `N`.
pub fn nullspace_torque<T: Real>(
    projector: &DMatrix<T>,
    q: &DVector<T>,
    qdot: &DVector<T>,
    q_desired: &DVector<T>,
    stiffness: &DMatrix<T>,
    damping: &DMatrix<T>,
) -> Result<DVector<T>, DimensionError> {
    let n = q.len();
    DimensionError::check("projector rows", n, projector.nrows())?;
    DimensionError::check("projector columns", n, projector.ncols())?;
    DimensionError::check("joint velocities", n, qdot.len())?;
    DimensionError::check("nullspace target", n, q_desired.len())?;
    DimensionError::check("nullspace stiffness", n * n, stiffness.len())?;
    DimensionError::check("nullspace damping", n * n, damping.len())?;
    let tau0 = -(stiffness * (q - q_desired)) - damping * qdot;
    Ok(projector * tau0)
}

/// Feed-forward wrench torque `Jᵀ F`.
pub fn wrench_torque<T: Real>(jac: &DMatrix<T>, wrench: &Vector6<T>) -> Result<DVector<T>, DimensionError> {
    DimensionError::check("jacobian rows", 6, jac.nrows())?;
    Ok(jac.tr_mul(wrench))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilibrium_gives_zero() {
        let jac = DMatrix::from_fn(6, 3, |r, c| (r * 3 + c) as f64 * 0.1);
        let tau = cartesian_impedance_torque(
            &jac,
            &Vector6::zeros(),
            &DVector::zeros(3),
            &(Matrix6::identity() * 100.0),
            &(Matrix6::identity() * 10.0),
        )
        .unwrap();
        assert_eq!(tau, DVector::zeros(3));
    }

    #[test]
    fn scalar_spring() {
        let mut jac = DMatrix::zeros(6, 1);
        jac[(0, 0)] = 1.0;
        let dx = Vector6::new(0.1, 0.0, 0.0, 0.0, 0.0, 0.0);
        let tau = cartesian_impedance_torque(&jac, &dx, &DVector::zeros(1), &(Matrix6::identity() * 100.0), &Matrix6::zeros()).unwrap();
        assert!((tau[0] + 10.0f64).abs() < 1e-12);
    }

    #[test]
    fn toy_projector() {
        let jac = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let n = nullspace_projector(&jac);
        assert_eq!(n, DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0])));
    }

    #[test]
    fn zero_jacobian_projects_nothing_away() {
        let n = nullspace_projector(&DMatrix::<f64>::zeros(6, 3));
        assert_eq!(n, DMatrix::identity(3, 3));
    }

    #[test]
    fn square_invertible_jacobian_has_empty_nullspace() {
        let jac = DMatrix::from_fn(6, 6, |r, c| if r == c { 2.0 } else { 0.1 * (r as f64 - c as f64) });
        let n = nullspace_projector(&jac);
        assert!(n.amax() < 1e-10, "{n}");
        let q = DVector::from_element(6, 0.3);
        let tau = nullspace_torque(&n, &q, &DVector::zeros(6), &DVector::zeros(6), &DMatrix::identity(6, 6), &DMatrix::zeros(6, 6)).unwrap();
        assert!(tau.amax() < 1e-10);
    }

    #[test]
    fn wrench_single_column() {
        let jac = DMatrix::from_column_slice(6, 1, &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        let tau = wrench_torque(&jac, &Vector6::new(0.0, 0.0, 5.0, 0.0, 0.0, 0.0)).unwrap();
        assert_eq!(tau[0], 5.0);
        assert_eq!(wrench_torque(&jac, &Vector6::zeros()).unwrap()[0], 0.0);
    }

    #[test]
    fn dimension_errors() {
        let jac = DMatrix::<f64>::zeros(5, 2);
        assert!(wrench_torque(&jac, &Vector6::zeros()).is_err());
        let jac = DMatrix::<f64>::zeros(6, 2);
        assert!(cartesian_impedance_torque(&jac, &Vector6::zeros(), &DVector::zeros(3), &Matrix6::zeros(), &Matrix6::zeros()).is_err());
        let n = DMatrix::<f64>::identity(2, 2);
        assert!(nullspace_torque(&n, &DVector::zeros(2), &DVector::zeros(2), &DVector::zeros(3), &n, &n).is_err());
    }
}
