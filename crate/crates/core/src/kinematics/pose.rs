use nalgebra::{Matrix3, Rotation3, Translation3, Vector3};

use super::Pose;
use crate::error::{Error, Result};

/// Least-squares rigid transform and its RMS point mismatch (m).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidFit {
    pub pose: Pose,
    pub residual: f64,
}

/// True when the points do not span a plane (all on one line, or coincident).
pub fn is_collinear(points: &[Vector3<f64>]) -> bool {
    if points.len() < 3 {
        return true;
    }
    let n = points.len() as f64;
    let centroid = points.iter().sum::<Vector3<f64>>() / n;
    let cov = points
        .iter()
        .map(|p| (p - centroid) * (p - centroid).transpose())
        .sum::<Matrix3<f64>>();
    let mut eig: Vec<f64> = cov.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    !(eig[0] > 0.0 && eig[1] > 1e-12 * eig[0])
}

/// Weighted SVD fit of `observed ≈ R · template + t`.
///
/// Point pairs are matched by index. Weights default to 1.
pub fn fit_rigid_transform(
    template: &[Vector3<f64>],
    observed: &[Vector3<f64>],
    weights: Option<&[f64]>,
) -> Result<RigidFit> {
    if template.len() != observed.len() {
        return Err(Error::Misaligned(format!(
            "{} template points vs {} observed points",
            template.len(),
            observed.len()
        )));
    }
    if let Some(w) = weights {
        if w.len() != template.len() {
            return Err(Error::Misaligned(
                "weight count differs from point count".into(),
            ));
        }
        if w.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::Precondition(
                "marker weights must be non-negative".into(),
            ));
        }
    }
    let weight = |i: usize| weights.map_or(1.0, |w| w[i]);
    let used: Vec<usize> = (0..template.len()).filter(|&i| weight(i) > 0.0).collect();
    if used.len() < 3 {
        return Err(Error::Degenerate(format!(
            "{} valid point pairs; at least 3 are required",
            used.len()
        )));
    }
    let used_template: Vec<Vector3<f64>> = used.iter().map(|&i| template[i]).collect();
    if is_collinear(&used_template) {
        return Err(Error::Degenerate("template points are collinear".into()));
    }

    let total: f64 = used.iter().map(|&i| weight(i)).sum();
    let p_bar = used
        .iter()
        .map(|&i| template[i] * weight(i))
        .sum::<Vector3<f64>>()
        / total;
    let q_bar = used
        .iter()
        .map(|&i| observed[i] * weight(i))
        .sum::<Vector3<f64>>()
        / total;
    let h = used
        .iter()
        .map(|&i| (template[i] - p_bar) * (observed[i] - q_bar).transpose() * weight(i))
        .sum::<Matrix3<f64>>();

    let svd = h.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::Numerical("SVD did not converge".into())),
    };
    let v = v_t.transpose();
    // Reflection guard on the weakest singular direction.
    let d = (v * u.transpose()).determinant().signum();
    let weakest = svd.singular_values.imin();
    let mut diag = Vector3::repeat(1.0);
    diag[weakest] = d;
    let r = v * Matrix3::from_diagonal(&diag) * u.transpose();
    let rotation = Rotation3::from_matrix_unchecked(r);
    let t = q_bar - rotation * p_bar;
    let pose = Pose::from_parts(Translation3::from(t), rotation);

    let sq: f64 = used
        .iter()
        .map(|&i| {
            weight(i)
                * (pose * nalgebra::Point3::from(template[i]) - nalgebra::Point3::from(observed[i]))
                    .norm_squared()
        })
        .sum();
    Ok(RigidFit {
        pose,
        residual: (sq / total).sqrt(),
    })
}

/// Pose of `distal` expressed in the frame of `proximal`.
pub fn relative_pose(proximal: &Pose, distal: &Pose) -> Pose {
    proximal.inv_mul(distal)
}

/// Largest deviation of `RᵀR` from identity (max-abs norm).
pub fn orthogonality_error(r: &Matrix3<f64>) -> f64 {
    (r.transpose() * r - Matrix3::identity()).abs().max()
}

/// Closest proper rotation to an arbitrary 3×3 matrix.
pub(crate) fn nearest_rotation(m: &Matrix3<f64>) -> Rotation3<f64> {
    let svd = m.svd(true, true);
    match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => {
            let d = (u * v_t).determinant().signum();
            let weakest = svd.singular_values.imin();
            let mut diag = Vector3::repeat(1.0);
            diag[weakest] = d;
            Rotation3::from_matrix_unchecked(u * Matrix3::from_diagonal(&diag) * v_t)
        }
        _ => Rotation3::from_matrix(m),
    }
}
