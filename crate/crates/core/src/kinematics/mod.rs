//! Marker trajectories to segment poses and joint kinematics.

mod angles;
mod pose;
mod signal;

use nalgebra::{IsometryMatrix3, Point3, Rotation3, Vector3};

use crate::error::{Error, Result};
use crate::model::{JointKind, LimbChain, MarkerPoint};

pub use angles::{
    cardan_angular_velocity, cardan_from_matrix, compose_rotation, decompose_rotation,
    helical_vector, rotation_from_cardan, unwrap, GIMBAL_LIMIT_DEG,
};
pub(crate) use pose::nearest_rotation;
pub use pose::{fit_rigid_transform, is_collinear, orthogonality_error, relative_pose, RigidFit};
pub use signal::{bridge_gaps, differentiate, low_pass_filter, uniform_rate, Butterworth};

/// Rigid transform from a segment frame to the lab frame.
pub type Pose = IsometryMatrix3<f64>;

/// Longest run of missing marker samples that is filled by interpolation.
pub const MAX_GAP_FRAMES: usize = 5;

/// One marker's lab trajectory (m). `None` marks an occluded sample.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkerTrack {
    pub segment: String,
    pub label: String,
    pub positions: Vec<Option<Vector3<f64>>>,
}

/// Uniformly sampled marker trajectories.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkerFrameSeries {
    times: Vec<f64>,
    sample_rate: f64,
    tracks: Vec<MarkerTrack>,
}

impl MarkerFrameSeries {
    pub fn new(times: Vec<f64>, tracks: Vec<MarkerTrack>) -> Result<Self> {
        let sample_rate = if times.len() == 1 {
            1.0
        } else {
            uniform_rate(&times)?
        };
        for t in &tracks {
            if t.positions.len() != times.len() {
                return Err(Error::Misaligned(format!(
                    "marker {}:{} has {} samples for {} time stamps",
                    t.segment,
                    t.label,
                    t.positions.len(),
                    times.len()
                )));
            }
        }
        for (i, t) in tracks.iter().enumerate() {
            if tracks[..i]
                .iter()
                .any(|o| o.segment == t.segment && o.label == t.label)
            {
                return Err(Error::Precondition(format!(
                    "marker {}:{} appears twice",
                    t.segment, t.label
                )));
            }
        }
        Ok(MarkerFrameSeries {
            times,
            sample_rate,
            tracks,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn tracks(&self) -> &[MarkerTrack] {
        &self.tracks
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn track(&self, segment: &str, label: &str) -> Option<&MarkerTrack> {
        self.tracks
            .iter()
            .find(|t| t.segment == segment && t.label == label)
    }
}

/// Fitted poses of one segment over a trial.
#[derive(Clone, Debug, PartialEq)]
pub struct PoseTrack {
    pub segment: String,
    pub poses: Vec<Pose>,
    /// RMS marker residual of each fit (m).
    pub residuals: Vec<f64>,
    /// True where at least one marker sample was interpolated.
    pub bridged: Vec<bool>,
}

/// Poses of the reference segment and of every chain segment, proximal to
/// distal.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentPoseSeries {
    pub times: Vec<f64>,
    pub sample_rate: f64,
    pub reference: PoseTrack,
    pub segments: Vec<PoseTrack>,
}

impl SegmentPoseSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Proximal pose track of chain joint `j`.
    pub fn proximal(&self, j: usize) -> &PoseTrack {
        if j == 0 {
            &self.reference
        } else {
            &self.segments[j - 1]
        }
    }
}

/// Segment poses in the calibration posture; joint angles and translations
/// are measured relative to it.
#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationPoses {
    pub reference: Pose,
    pub segments: Vec<Pose>,
}

impl CalibrationPoses {
    /// Calibration from the first frame of a pose series.
    pub fn first_frame(poses: &SegmentPoseSeries) -> Self {
        CalibrationPoses {
            reference: poses.reference.poses[0],
            segments: poses.segments.iter().map(|s| s.poses[0]).collect(),
        }
    }

    fn proximal(&self, j: usize) -> &Pose {
        if j == 0 {
            &self.reference
        } else {
            &self.segments[j - 1]
        }
    }
}

fn marker_columns<'a>(
    segment: &str,
    template: &'a [MarkerPoint],
    markers: &'a MarkerFrameSeries,
) -> Result<Vec<(&'a MarkerPoint, &'a MarkerTrack)>> {
    template
        .iter()
        .map(|m| {
            markers
                .track(segment, &m.label)
                .map(|t| (m, t))
                .ok_or_else(|| {
                    Error::Precondition(format!(
                        "marker {segment}:{} is in the chain template but not in the data",
                        m.label
                    ))
                })
        })
        .collect()
}

fn fit_track(
    segment: &str,
    template: &[MarkerPoint],
    markers: &MarkerFrameSeries,
) -> Result<PoseTrack> {
    let columns = marker_columns(segment, template, markers)?;
    let n = markers.len();
    // Bridge short gaps per coordinate; markers with long gaps keep their
    // holes and simply drop out of the affected fits.
    let mut filled: Vec<Vec<Option<Vector3<f64>>>> = Vec::with_capacity(columns.len());
    let mut bridged = vec![false; n];
    for (_, track) in &columns {
        let coord = |c: usize| -> Vec<Option<f64>> {
            track.positions.iter().map(|p| p.map(|v| v[c])).collect()
        };
        let parts: Result<Vec<(Vec<f64>, Vec<bool>)>> = (0..3)
            .map(|c| bridge_gaps(&coord(c), MAX_GAP_FRAMES))
            .collect();
        match parts {
            Ok(parts) => {
                for (b, &p) in bridged.iter_mut().zip(&parts[0].1) {
                    *b |= p;
                }
                filled.push(
                    (0..n)
                        .map(|k| Some(Vector3::new(parts[0].0[k], parts[1].0[k], parts[2].0[k])))
                        .collect(),
                );
            }
            Err(Error::GapTooLong(_)) => filled.push(track.positions.clone()),
            Err(e) => return Err(e),
        }
    }

    let template_points: Vec<Vector3<f64>> = columns.iter().map(|(m, _)| m.position).collect();
    let mut poses = Vec::with_capacity(n);
    let mut residuals = Vec::with_capacity(n);
    let mut observed = vec![Vector3::zeros(); columns.len()];
    let mut weights = vec![0.0; columns.len()];
    for k in 0..n {
        for (i, col) in filled.iter().enumerate() {
            match col[k] {
                Some(p) => {
                    observed[i] = p;
                    weights[i] = 1.0;
                }
                None => weights[i] = 0.0,
            }
        }
        let valid = weights.iter().filter(|w| **w > 0.0).count();
        if valid < 3 {
            return Err(Error::GapTooLong(format!(
                "segment '{segment}' has {valid} usable markers at t = {} s",
                markers.times()[k]
            )));
        }
        let fit = fit_rigid_transform(&template_points, &observed, Some(&weights))?;
        poses.push(fit.pose);
        residuals.push(fit.residual);
    }
    Ok(PoseTrack {
        segment: segment.to_string(),
        poses,
        residuals,
        bridged,
    })
}

/// Fits every segment's pose at every frame.
pub fn estimate_poses(chain: &LimbChain, markers: &MarkerFrameSeries) -> Result<SegmentPoseSeries> {
    if markers.len() < 3 {
        return Err(Error::Precondition(format!(
            "at least 3 marker frames are required, got {}",
            markers.len()
        )));
    }
    let reference = fit_track(&chain.reference().name, &chain.reference().markers, markers)?;
    let segments = chain
        .segments()
        .iter()
        .map(|s| fit_track(&s.name, &s.markers, markers))
        .collect::<Result<Vec<_>>>()?;
    Ok(SegmentPoseSeries {
        times: markers.times().to_vec(),
        sample_rate: markers.sample_rate(),
        reference,
        segments,
    })
}

/// Calibration posture from a static trial: each marker is averaged over
/// its valid samples and every segment is fitted once.
pub fn calibrate(
    chain: &LimbChain,
    static_markers: &MarkerFrameSeries,
) -> Result<CalibrationPoses> {
    let fit_mean = |segment: &str, template: &[MarkerPoint]| -> Result<Pose> {
        let columns = marker_columns(segment, template, static_markers)?;
        let mut observed = Vec::with_capacity(columns.len());
        let mut weights = Vec::with_capacity(columns.len());
        for (_, track) in &columns {
            let valid: Vec<Vector3<f64>> = track.positions.iter().flatten().copied().collect();
            if valid.is_empty() {
                observed.push(Vector3::zeros());
                weights.push(0.0);
            } else {
                observed.push(valid.iter().sum::<Vector3<f64>>() / valid.len() as f64);
                weights.push(1.0);
            }
        }
        let template: Vec<Vector3<f64>> = columns.iter().map(|(m, _)| m.position).collect();
        Ok(fit_rigid_transform(&template, &observed, Some(&weights))?.pose)
    };
    Ok(CalibrationPoses {
        reference: fit_mean(&chain.reference().name, &chain.reference().markers)?,
        segments: chain
            .segments()
            .iter()
            .map(|s| fit_mean(&s.name, &s.markers))
            .collect::<Result<Vec<_>>>()?,
    })
}

/// Kinematics of one joint. Angular quantities are in rad, rad/s and
/// rad/s², linear ones in m, m/s and m/s², all in anatomical sign
/// convention and in axis order x, y, z.
#[derive(Clone, Debug, PartialEq)]
pub struct JointTrack {
    pub kind: JointKind,
    /// Cardan angles `(α, β, γ)` relative to the calibration posture.
    pub angles: Vec<Vector3<f64>>,
    pub angle_rates: Vec<Vector3<f64>>,
    pub angle_accels: Vec<Vector3<f64>>,
    /// Relative angular velocity of the distal segment, distal-frame components.
    pub angular_velocity: Vec<Vector3<f64>>,
    /// Joint-center displacement from calibration, proximal-frame components.
    pub translations: Vec<Vector3<f64>>,
    pub translation_rates: Vec<Vector3<f64>>,
    pub translation_accels: Vec<Vector3<f64>>,
    /// Relative joint-center velocity, distal-frame components.
    pub linear_velocity: Vec<Vector3<f64>>,
    /// Scaled helical axis of the joint rotation, proximal-frame components.
    pub helical: Vec<Vector3<f64>>,
    /// False where the attitude was singular and the angles were bridged.
    pub valid: Vec<bool>,
    pub translations_enabled: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointStateSeries {
    pub times: Vec<f64>,
    pub sample_rate: f64,
    pub joints: Vec<JointTrack>,
}

impl JointStateSeries {
    pub fn joint(&self, kind: JointKind) -> Option<&JointTrack> {
        self.joints.iter().find(|j| j.kind == kind)
    }
}

fn components(series: &[Vector3<f64>], c: usize) -> Vec<f64> {
    series.iter().map(|v| v[c]).collect()
}

fn from_components(parts: &[Vec<f64>; 3]) -> Vec<Vector3<f64>> {
    (0..parts[0].len())
        .map(|k| Vector3::new(parts[0][k], parts[1][k], parts[2][k]))
        .collect()
}

/// Filters each component, then returns value, first and second derivative.
type Smoothed = (Vec<Vector3<f64>>, Vec<Vector3<f64>>, Vec<Vector3<f64>>);

fn smooth_and_differentiate(
    series: &[Vector3<f64>],
    sample_rate: f64,
    cutoff: Option<f64>,
) -> Result<Smoothed> {
    let dt = 1.0 / sample_rate;
    let mut x: [Vec<f64>; 3] = Default::default();
    let mut v: [Vec<f64>; 3] = Default::default();
    let mut a: [Vec<f64>; 3] = Default::default();
    for c in 0..3 {
        x[c] = low_pass_filter(&components(series, c), sample_rate, cutoff)?;
        v[c] = differentiate(&x[c], dt)?;
        a[c] = differentiate(&v[c], dt)?;
    }
    Ok((
        from_components(&x),
        from_components(&v),
        from_components(&a),
    ))
}

/// Joint angles, translations and their derivatives for every joint.
///
/// Angles and translations are filtered with `cutoff` (Hz, `None` for no
/// filtering) before differentiation.
pub fn joint_states(
    chain: &LimbChain,
    poses: &SegmentPoseSeries,
    calibration: &CalibrationPoses,
    cutoff: Option<f64>,
) -> Result<JointStateSeries> {
    let n = poses.len();
    if poses.segments.len() != chain.segments().len()
        || calibration.segments.len() != chain.segments().len()
    {
        return Err(Error::Misaligned(
            "pose series does not match the chain".into(),
        ));
    }
    if n < 3 {
        return Err(Error::Precondition(format!(
            "at least 3 frames are required, got {n}"
        )));
    }
    let mut joints = Vec::with_capacity(chain.joints().len());
    for (j, spec) in chain.joints().iter().enumerate() {
        let conv = &chain.convention().joints()[j];
        let rot_signs = conv.rotation_signs();
        let trans_signs = conv.translation_signs();
        let prox_track = poses.proximal(j);
        let dist_track = &poses.segments[j];
        let center = Point3::from(spec.center_offset);

        let cal_prox = calibration.proximal(j);
        let cal_dist = &calibration.segments[j];
        let cal_rel = relative_pose(cal_prox, cal_dist).rotation;
        let cal_center = cal_prox
            .inverse_transform_point(&(cal_dist * center))
            .coords;

        let mut model_angles: [Vec<Option<f64>>; 3] = Default::default();
        let mut raw_translation = Vec::with_capacity(n);
        let mut helical = Vec::with_capacity(n);
        let mut valid = vec![true; n];
        #[allow(clippy::needless_range_loop)]
        for k in 0..n {
            let prox = &prox_track.poses[k];
            let dist = &dist_track.poses[k];
            let rel = relative_pose(prox, dist).rotation;
            let q = cal_rel.inverse() * rel;
            match cardan_from_matrix(q.matrix()) {
                Ok(a) => (0..3).for_each(|c| model_angles[c].push(Some(a[c]))),
                Err(Error::SingularAttitude(_)) => {
                    valid[k] = false;
                    (0..3).for_each(|c| model_angles[c].push(None));
                }
                Err(e) => return Err(e),
            }
            helical.push(helical_vector(&rel, &cal_rel).component_mul(&rot_signs));
            let center_in_prox = prox.inverse_transform_point(&(dist * center)).coords;
            raw_translation.push(if spec.translations_enabled {
                center_in_prox - cal_center
            } else {
                Vector3::zeros()
            });
        }

        let mut angle_parts: [Vec<f64>; 3] = Default::default();
        for c in 0..3 {
            let (mut filled, _) = bridge_gaps(&model_angles[c], MAX_GAP_FRAMES)
                .map_err(|_| Error::SingularAttitude(GIMBAL_LIMIT_DEG))?;
            unwrap(&mut filled);
            angle_parts[c] = filled;
        }
        let model = from_components(&angle_parts);
        let (q, qd, qdd) = smooth_and_differentiate(&model, poses.sample_rate, cutoff)?;
        let (d, dd, ddd) = smooth_and_differentiate(&raw_translation, poses.sample_rate, cutoff)?;

        let mut angular_velocity = Vec::with_capacity(n);
        let mut linear_velocity = Vec::with_capacity(n);
        for k in 0..n {
            angular_velocity.push(cardan_angular_velocity(&q[k], &qd[k]).component_mul(&rot_signs));
            // Proximal-frame rate expressed in the distal frame.
            let rel: Rotation3<f64> = cal_rel * rotation_from_cardan(&q[k]);
            linear_velocity.push((rel.inverse() * dd[k]).component_mul(&trans_signs));
        }
        let signed = |s: &[Vector3<f64>], signs: &Vector3<f64>| -> Vec<Vector3<f64>> {
            s.iter().map(|v| v.component_mul(signs)).collect()
        };
        joints.push(JointTrack {
            kind: spec.kind,
            angles: signed(&q, &rot_signs),
            angle_rates: signed(&qd, &rot_signs),
            angle_accels: signed(&qdd, &rot_signs),
            angular_velocity,
            translations: signed(&d, &trans_signs),
            translation_rates: signed(&dd, &trans_signs),
            translation_accels: signed(&ddd, &trans_signs),
            linear_velocity,
            helical,
            valid,
            translations_enabled: spec.translations_enabled,
        });
    }
    Ok(JointStateSeries {
        times: poses.times.clone(),
        sample_rate: poses.sample_rate,
        joints,
    })
}
