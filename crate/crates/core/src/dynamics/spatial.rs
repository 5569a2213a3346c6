use nalgebra::{Matrix3, Point3, Rotation3, Vector3};

use crate::error::{Error, Result};
use crate::kinematics::{
    differentiate, low_pass_filter, nearest_rotation, PoseTrack, SegmentPoseSeries,
};
use crate::model::LimbChain;

/// Lab-frame kinematics of one rigid segment.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentKinematics {
    pub name: String,
    pub rotation: Vec<Rotation3<f64>>,
    pub origin: Vec<Vector3<f64>>,
    pub origin_velocity: Vec<Vector3<f64>>,
    pub com: Vec<Vector3<f64>>,
    pub com_velocity: Vec<Vector3<f64>>,
    pub com_acceleration: Vec<Vector3<f64>>,
    pub angular_velocity: Vec<Vector3<f64>>,
    pub angular_acceleration: Vec<Vector3<f64>>,
}

impl SegmentKinematics {
    /// Velocity of the material point currently at lab position `p`.
    pub fn point_velocity(&self, k: usize, p: &Vector3<f64>) -> Vector3<f64> {
        self.origin_velocity[k] + self.angular_velocity[k].cross(&(p - self.origin[k]))
    }

    /// Lab position of a point given in segment coordinates.
    pub fn to_lab(&self, k: usize, local: &Vector3<f64>) -> Vector3<f64> {
        self.rotation[k] * local + self.origin[k]
    }
}

/// Kinematics of the reference segment and every chain segment.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentSpatialState {
    pub times: Vec<f64>,
    pub sample_rate: f64,
    pub reference: SegmentKinematics,
    pub segments: Vec<SegmentKinematics>,
}

impl SegmentSpatialState {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

fn filtered_vectors(
    series: impl Fn(usize) -> Vector3<f64>,
    n: usize,
    rate: f64,
    cutoff: Option<f64>,
) -> Result<[Vec<f64>; 3]> {
    let mut out: [Vec<f64>; 3] = Default::default();
    for (c, o) in out.iter_mut().enumerate() {
        let raw: Vec<f64> = (0..n).map(|k| series(k)[c]).collect();
        *o = low_pass_filter(&raw, rate, cutoff)?;
    }
    Ok(out)
}

fn derivative_vectors(parts: &[Vec<f64>; 3], dt: f64) -> Result<[Vec<f64>; 3]> {
    Ok([
        differentiate(&parts[0], dt)?,
        differentiate(&parts[1], dt)?,
        differentiate(&parts[2], dt)?,
    ])
}

fn to_vectors(parts: &[Vec<f64>; 3]) -> Vec<Vector3<f64>> {
    (0..parts[0].len())
        .map(|k| Vector3::new(parts[0][k], parts[1][k], parts[2][k]))
        .collect()
}

fn segment_kinematics(
    track: &PoseTrack,
    com_offset: &Vector3<f64>,
    rate: f64,
    cutoff: Option<f64>,
) -> Result<SegmentKinematics> {
    let n = track.poses.len();
    let dt = 1.0 / rate;

    // Rotation matrix entries are filtered and differentiated element-wise.
    let mut r_filtered: Vec<Vec<f64>> = Vec::with_capacity(9);
    let mut r_rate: Vec<Vec<f64>> = Vec::with_capacity(9);
    for e in 0..9 {
        let raw: Vec<f64> = track.poses.iter().map(|p| p.rotation.matrix()[e]).collect();
        let f = low_pass_filter(&raw, rate, cutoff)?;
        r_rate.push(differentiate(&f, dt)?);
        r_filtered.push(f);
    }
    let matrix_at = |m: &[Vec<f64>], k: usize| Matrix3::from_iterator((0..9).map(|e| m[e][k]));

    let mut rotation = Vec::with_capacity(n);
    let mut angular_velocity = Vec::with_capacity(n);
    for k in 0..n {
        let r = matrix_at(&r_filtered, k);
        let w_hat = matrix_at(&r_rate, k) * r.transpose();
        let w = Vector3::new(
            0.5 * (w_hat[(2, 1)] - w_hat[(1, 2)]),
            0.5 * (w_hat[(0, 2)] - w_hat[(2, 0)]),
            0.5 * (w_hat[(1, 0)] - w_hat[(0, 1)]),
        );
        if !w.iter().all(|v| v.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite angular velocity for segment '{}'",
                track.segment
            )));
        }
        angular_velocity.push(w);
        rotation.push(nearest_rotation(&r));
    }
    let w_parts = [0, 1, 2].map(|c| angular_velocity.iter().map(|w| w[c]).collect::<Vec<f64>>());
    let angular_acceleration = to_vectors(&derivative_vectors(&w_parts, dt)?);

    let origin = filtered_vectors(|k| track.poses[k].translation.vector, n, rate, cutoff)?;
    let origin_velocity = derivative_vectors(&origin, dt)?;
    let com_point = Point3::from(*com_offset);
    let com = filtered_vectors(|k| (track.poses[k] * com_point).coords, n, rate, cutoff)?;
    let com_velocity = derivative_vectors(&com, dt)?;
    let com_acceleration = derivative_vectors(&com_velocity, dt)?;

    Ok(SegmentKinematics {
        name: track.segment.clone(),
        rotation,
        origin: to_vectors(&origin),
        origin_velocity: to_vectors(&origin_velocity),
        com: to_vectors(&com),
        com_velocity: to_vectors(&com_velocity),
        com_acceleration: to_vectors(&com_acceleration),
        angular_velocity,
        angular_acceleration,
    })
}

/// Filters segment poses and derives lab-frame velocities and
/// accelerations. `cutoff = None` disables filtering.
pub fn segment_spatial_states(
    chain: &LimbChain,
    poses: &SegmentPoseSeries,
    cutoff: Option<f64>,
) -> Result<SegmentSpatialState> {
    if poses.segments.len() != chain.segments().len() {
        return Err(Error::Misaligned(
            "pose series does not match the chain".into(),
        ));
    }
    if poses.len() < 3 {
        return Err(Error::Precondition(format!(
            "at least 3 frames are required, got {}",
            poses.len()
        )));
    }
    let rate = poses.sample_rate;
    let reference = segment_kinematics(&poses.reference, &Vector3::zeros(), rate, cutoff)?;
    let segments = chain
        .segments()
        .iter()
        .zip(&poses.segments)
        .map(|(spec, track)| segment_kinematics(track, &spec.com_offset, rate, cutoff))
        .collect::<Result<Vec<_>>>()?;
    Ok(SegmentSpatialState {
        times: poses.times.clone(),
        sample_rate: rate,
        reference,
        segments,
    })
}
