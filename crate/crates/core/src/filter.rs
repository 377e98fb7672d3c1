//! Constant-velocity Kalman filter primitives shared by the per-sensor
//! tracker and the fusion node.
//!
//! State order is (s, d, v_s, v_d). Process noise follows the continuous
//! white-acceleration model with a configurable PSD per axis, and updates
//! use the Joseph form so covariances stay symmetric PSD under long
//! predict/update sequences.

use nalgebra::{Matrix4, SMatrix, SVector, Vector4};

use crate::error::{Error, Result};
use crate::scalar::{convert, Scalar};

/// CV state transition over `dt`.
pub fn cv_transition<T: Scalar>(dt: T) -> Matrix4<T> {
    let mut f = Matrix4::identity();
    f[(0, 2)] = dt;
    f[(1, 3)] = dt;
    f
}

/// Continuous white-acceleration process noise over `dt` with PSD `q`
/// ((m/s^2)^2/Hz) applied independently per axis.
pub fn cv_process_noise<T: Scalar>(dt: T, q: T) -> Matrix4<T> {
    let dt2 = dt * dt;
    let dt3 = dt2 * dt;
    let third: T = convert(1.0 / 3.0);
    let half: T = convert(0.5);
    let mut m = Matrix4::zeros();
    for (pos, vel) in [(0, 2), (1, 3)] {
        m[(pos, pos)] = q * dt3 * third;
        m[(pos, vel)] = q * dt2 * half;
        m[(vel, pos)] = q * dt2 * half;
        m[(vel, vel)] = q * dt;
    }
    m
}

/// In-place CV prediction.
pub fn predict<T: Scalar>(x: &mut Vector4<T>, p: &mut Matrix4<T>, dt: T, q: T) {
    let f = cv_transition(dt);
    *x = f * *x;
    *p = f * *p * f.transpose() + cv_process_noise(dt, q);
    symmetrize(p);
}

/// In-place Kalman update with an M-dimensional linear measurement.
///
/// Returns the squared Mahalanobis distance of the innovation.
pub fn update<T: Scalar, const M: usize>(
    x: &mut Vector4<T>,
    p: &mut Matrix4<T>,
    z: &SVector<T, M>,
    h: &SMatrix<T, M, 4>,
    r: &SMatrix<T, M, M>,
) -> Result<T> {
    let innovation = z - h * *x;
    let s = h * *p * h.transpose() + r;
    let s_inv = s
        .try_inverse()
        .ok_or_else(|| Error::Numeric("singular innovation covariance".into()))?;
    let mahal2 = (innovation.transpose() * s_inv * innovation)[(0, 0)];
    let gain = *p * h.transpose() * s_inv;
    *x += gain * innovation;
    let joseph = Matrix4::identity() - gain * h;
    *p = joseph * *p * joseph.transpose() + gain * r * gain.transpose();
    symmetrize(p);
    Ok(mahal2)
}

/// Squared Mahalanobis distance of a position measurement against a
/// predicted state, using S = H P H' + R.
pub fn position_mahalanobis2<T: Scalar>(
    x: &Vector4<T>,
    p: &Matrix4<T>,
    z: &SVector<T, 2>,
    r: &SMatrix<T, 2, 2>,
) -> Result<T> {
    let h = position_observation::<T>();
    let innovation = z - h * x;
    let s = h * p * h.transpose() + r;
    let s_inv = s
        .try_inverse()
        .ok_or_else(|| Error::Numeric("singular innovation covariance".into()))?;
    Ok((innovation.transpose() * s_inv * innovation)[(0, 0)])
}

/// Observation matrix picking (s, d).
pub fn position_observation<T: Scalar>() -> SMatrix<T, 2, 4> {
    let mut h = SMatrix::<T, 2, 4>::zeros();
    h[(0, 0)] = T::one();
    h[(1, 1)] = T::one();
    h
}

/// Observation matrix picking (s, d, v_s).
pub fn position_speed_observation<T: Scalar>() -> SMatrix<T, 3, 4> {
    let mut h = SMatrix::<T, 3, 4>::zeros();
    h[(0, 0)] = T::one();
    h[(1, 1)] = T::one();
    h[(2, 2)] = T::one();
    h
}

pub fn symmetrize<T: Scalar>(p: &mut Matrix4<T>) {
    let half: T = convert(0.5);
    *p = (*p + p.transpose()) * half;
}

/// Is the matrix symmetric positive semi-definite within tolerance?
pub fn is_symmetric_psd<T: Scalar>(p: &Matrix4<T>, tol: T) -> bool {
    for i in 0..4 {
        for j in 0..4 {
            if (p[(i, j)] - p[(j, i)]).abs() > tol {
                return false;
            }
        }
    }
    p.symmetric_eigenvalues().iter().all(|&e| e >= -tol)
}
