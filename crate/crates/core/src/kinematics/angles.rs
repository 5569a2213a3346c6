//! Cardan decomposition of joint rotations.
//!
//! The sequence is flexion/extension about the proximal y axis, then
//! adduction/abduction about the floating x axis, then axial rotation about
//! the distal z axis: `Q = Ry(β) · Rx(α) · Rz(γ)`. Angle vectors are stored
//! in axis order `(α, β, γ)`.

use nalgebra::{Matrix3, Rotation3, Vector3};

use crate::error::{Error, Result};

/// Decompositions with |α| at or above this limit are reported as singular.
pub const GIMBAL_LIMIT_DEG: f64 = 89.0;

fn rx(a: f64) -> Rotation3<f64> {
    Rotation3::from_axis_angle(&Vector3::x_axis(), a)
}
fn ry(a: f64) -> Rotation3<f64> {
    Rotation3::from_axis_angle(&Vector3::y_axis(), a)
}
fn rz(a: f64) -> Rotation3<f64> {
    Rotation3::from_axis_angle(&Vector3::z_axis(), a)
}

/// Right-hand model angles `(α, β, γ)` of a rotation matrix.
pub fn cardan_from_matrix(q: &Matrix3<f64>) -> Result<Vector3<f64>> {
    let a = (-q[(1, 2)]).clamp(-1.0, 1.0).asin();
    if a.abs().to_degrees() >= GIMBAL_LIMIT_DEG {
        return Err(Error::SingularAttitude(a.to_degrees()));
    }
    let b = q[(0, 2)].atan2(q[(2, 2)]);
    let g = q[(1, 0)].atan2(q[(1, 1)]);
    Ok(Vector3::new(a, b, g))
}

/// Rotation for right-hand model angles `(α, β, γ)`.
pub fn rotation_from_cardan(angles: &Vector3<f64>) -> Rotation3<f64> {
    ry(angles.y) * rx(angles.x) * rz(angles.z)
}

/// Anatomical joint angles of the relative rotation `R_p⁻¹ R_d`.
///
/// `reference` is the same relative rotation in the calibration posture, so
/// the calibration posture decomposes to zero. `signs` maps model to
/// anatomical values per axis.
pub fn decompose_rotation(
    relative: &Rotation3<f64>,
    reference: &Rotation3<f64>,
    signs: &Vector3<f64>,
) -> Result<Vector3<f64>> {
    let q = reference.inverse() * relative;
    Ok(cardan_from_matrix(q.matrix())?.component_mul(signs))
}

/// Inverse of [`decompose_rotation`].
pub fn compose_rotation(
    anatomical: &Vector3<f64>,
    reference: &Rotation3<f64>,
    signs: &Vector3<f64>,
) -> Rotation3<f64> {
    reference * rotation_from_cardan(&anatomical.component_mul(signs))
}

/// Relative angular velocity in distal-frame components from model angles
/// and their rates.
pub fn cardan_angular_velocity(angles: &Vector3<f64>, rates: &Vector3<f64>) -> Vector3<f64> {
    let rz_t = rz(angles.z).inverse();
    let rx_t = rx(angles.x).inverse();
    rz_t * (rx_t * Vector3::new(0.0, rates.y, 0.0))
        + rz_t * Vector3::new(rates.x, 0.0, 0.0)
        + Vector3::new(0.0, 0.0, rates.z)
}

/// Scaled helical axis (axis × angle, rad) of the joint rotation relative to
/// the calibration posture.
pub fn helical_vector(relative: &Rotation3<f64>, reference: &Rotation3<f64>) -> Vector3<f64> {
    (reference.inverse() * relative).scaled_axis()
}

/// Removes 2π jumps so consecutive samples differ by less than π.
pub fn unwrap(series: &mut [f64]) {
    use std::f64::consts::{PI, TAU};
    for k in 1..series.len() {
        let d = series[k] - series[k - 1];
        if d.abs() > PI {
            series[k] -= TAU * (d / TAU).round();
        }
    }
}
