use nalgebra::Vector3;

use super::grf::GrfSeries;
use super::spatial::SegmentSpatialState;
use crate::error::{Error, Result};
use crate::model::{JointKind, LimbChain};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InverseDynamicsOptions {
    /// Gravitational acceleration vector in the lab frame (m/s²).
    pub gravity: Vector3<f64>,
    /// Vertical force (N) above which the ground reaction is applied.
    pub contact_threshold: f64,
}

impl InverseDynamicsOptions {
    pub fn for_chain(chain: &LimbChain) -> Self {
        InverseDynamicsOptions {
            gravity: Vector3::new(0.0, 0.0, -crate::GRAVITY),
            contact_threshold: GrfSeries::default_threshold(chain.body_mass()),
        }
    }
}

/// Net load that the proximal segment exerts on the distal segment at one
/// joint.
#[derive(Clone, Debug, PartialEq)]
pub struct JointLoads {
    pub kind: JointKind,
    /// Joint center, lab frame (m).
    pub center: Vec<Vector3<f64>>,
    /// Lab-frame joint contact force (N) and net moment about the center (N·m).
    pub force_lab: Vec<Vector3<f64>>,
    pub moment_lab: Vec<Vector3<f64>>,
    /// Distal-frame components in the anatomical sign convention.
    pub force: Vec<Vector3<f64>>,
    pub moment: Vec<Vector3<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetJointLoadSeries {
    pub times: Vec<f64>,
    pub body_mass: f64,
    pub joints: Vec<JointLoads>,
    /// True where the ground reaction was applied to the distal segment.
    pub contact: Vec<bool>,
    /// Load the chain exerts on the reference segment at the first joint
    /// (lab frame). Non-zero in general; it closes the balance of the
    /// modelled chain.
    pub reference_reaction_force: Vec<Vector3<f64>>,
    pub reference_reaction_moment: Vec<Vector3<f64>>,
}

impl NetJointLoadSeries {
    pub fn joint(&self, kind: JointKind) -> Option<&JointLoads> {
        self.joints.iter().find(|j| j.kind == kind)
    }

    /// Anatomical joint force divided by body mass (N/kg).
    pub fn force_per_kg(&self, j: usize) -> Vec<Vector3<f64>> {
        self.joints[j]
            .force
            .iter()
            .map(|f| f / self.body_mass)
            .collect()
    }

    /// Anatomical net moment divided by body mass (N·m/kg).
    pub fn moment_per_kg(&self, j: usize) -> Vec<Vector3<f64>> {
        self.joints[j]
            .moment
            .iter()
            .map(|m| m / self.body_mass)
            .collect()
    }
}

/// Recursive Newton–Euler from the most distal segment to the first joint.
///
/// `grf` must be sampled at the same instants as `spatial`. All sums are
/// formed in the lab frame; results are also rotated into the distal
/// segment frame and mapped to the anatomical convention.
pub fn inverse_dynamics(
    chain: &LimbChain,
    spatial: &SegmentSpatialState,
    grf: &GrfSeries,
    options: &InverseDynamicsOptions,
) -> Result<NetJointLoadSeries> {
    let n = spatial.len();
    let nseg = chain.segments().len();
    if spatial.segments.len() != nseg {
        return Err(Error::Misaligned(
            "spatial state does not match the chain".into(),
        ));
    }
    if grf.len() != n {
        return Err(Error::Misaligned(format!(
            "{} force samples for {n} kinematic frames",
            grf.len()
        )));
    }
    if grf
        .times
        .iter()
        .zip(&spatial.times)
        .any(|(a, b)| (a - b).abs() > 1e-9)
    {
        return Err(Error::Misaligned(
            "force and kinematic time stamps differ".into(),
        ));
    }

    let g = options.gravity;
    let mut joints: Vec<JointLoads> = chain
        .joints()
        .iter()
        .map(|j| JointLoads {
            kind: j.kind,
            center: Vec::with_capacity(n),
            force_lab: Vec::with_capacity(n),
            moment_lab: Vec::with_capacity(n),
            force: Vec::with_capacity(n),
            moment: Vec::with_capacity(n),
        })
        .collect();
    let mut contact = Vec::with_capacity(n);
    let mut reaction_force = Vec::with_capacity(n);
    let mut reaction_moment = Vec::with_capacity(n);

    let mut forces = vec![Vector3::zeros(); nseg];
    let mut moments = vec![Vector3::zeros(); nseg];
    let mut centers = vec![Vector3::zeros(); nseg];
    for k in 0..n {
        let loaded = grf.force[k].z > options.contact_threshold;
        if loaded && !grf.cop_valid[k] {
            return Err(Error::MissingCop { time: grf.times[k] });
        }
        contact.push(loaded);
        for (i, spec) in chain.joints().iter().enumerate() {
            centers[i] = spatial.segments[i].to_lab(k, &spec.center_offset);
        }

        for i in (0..nseg).rev() {
            let seg = &chain.segments()[i];
            let kin = &spatial.segments[i];
            let r = kin.rotation[k];
            let c = kin.com[k];
            let inertia = r.matrix() * seg.inertia * r.matrix().transpose();
            let w = kin.angular_velocity[k];
            let wd = kin.angular_acceleration[k];
            let p = centers[i];

            let mut f = seg.mass * (kin.com_acceleration[k] - g);
            let mut m = inertia * wd + w.cross(&(inertia * w));
            if i + 1 < nseg {
                f += forces[i + 1];
                m += moments[i + 1] + (centers[i + 1] - c).cross(&forces[i + 1]);
            } else if loaded {
                let f_ext = grf.force[k];
                let m_ext =
                    Vector3::new(0.0, 0.0, grf.free_moment.as_ref().map_or(0.0, |fm| fm[k]));
                f -= f_ext;
                m -= m_ext + (grf.cop[k] - c).cross(&f_ext);
            }
            m -= (p - c).cross(&f);
            if !(f.iter().chain(m.iter()).all(|v| v.is_finite())) {
                return Err(Error::Numerical(format!(
                    "non-finite joint load at t = {} s",
                    spatial.times[k]
                )));
            }
            forces[i] = f;
            moments[i] = m;
        }

        for (i, loads) in joints.iter_mut().enumerate() {
            let conv = &chain.convention().joints()[i];
            let rt = spatial.segments[i].rotation[k].inverse();
            loads.center.push(centers[i]);
            loads.force_lab.push(forces[i]);
            loads.moment_lab.push(moments[i]);
            loads
                .force
                .push((rt * forces[i]).component_mul(&conv.translation_signs()));
            loads
                .moment
                .push((rt * moments[i]).component_mul(&conv.rotation_signs()));
        }
        reaction_force.push(-forces[0]);
        reaction_moment.push(-moments[0]);
    }

    Ok(NetJointLoadSeries {
        times: spatial.times.clone(),
        body_mass: chain.body_mass(),
        joints,
        contact,
        reference_reaction_force: reaction_force,
        reference_reaction_moment: reaction_moment,
    })
}

/// Power delivered to the chain by loads that are not joint loads (W).
#[derive(Clone, Debug, PartialEq)]
pub struct ExternalPower {
    /// Ground reaction power on the distal segment.
    pub ground: Vec<f64>,
    /// Power delivered by the reference segment through the first joint.
    pub reference: Vec<f64>,
}

/// Ground and reference power for a finished inverse-dynamics run.
pub fn external_power(
    loads: &NetJointLoadSeries,
    spatial: &SegmentSpatialState,
    grf: &GrfSeries,
) -> Result<ExternalPower> {
    let n = spatial.len();
    if loads.times.len() != n || grf.len() != n {
        return Err(Error::Misaligned(
            "power inputs have different lengths".into(),
        ));
    }
    let distal = spatial
        .segments
        .last()
        .ok_or_else(|| Error::Precondition("empty chain".into()))?;
    let first = &loads.joints[0];
    let mut ground = Vec::with_capacity(n);
    let mut reference = Vec::with_capacity(n);
    for k in 0..n {
        ground.push(if loads.contact[k] {
            let free = grf.free_moment.as_ref().map_or(0.0, |m| m[k]);
            grf.force[k].dot(&distal.point_velocity(k, &grf.cop[k]))
                + free * distal.angular_velocity[k].z
        } else {
            0.0
        });
        reference.push(
            first.force_lab[k].dot(&spatial.reference.point_velocity(k, &first.center[k]))
                + first.moment_lab[k].dot(&spatial.reference.angular_velocity[k]),
        );
    }
    Ok(ExternalPower { ground, reference })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::segment_spatial_states;
    use crate::kinematics::{Pose, PoseTrack, SegmentPoseSeries};
    use crate::model::{default_forelimb, JointSpec, MarkerPoint, ReferenceSegment, SegmentSpec};
    use nalgebra::{Matrix3, Rotation3, Translation3};

    fn markers() -> Vec<MarkerPoint> {
        ["a", "b", "c"]
            .iter()
            .zip([[0.05, 0.0, -0.1], [0.0, 0.05, -0.3], [-0.05, 0.0, -0.6]])
            .map(|(l, p)| MarkerPoint {
                label: l.to_string(),
                position: Vector3::from(p),
            })
            .collect()
    }

    fn rod_chain(mass: f64, length: f64, inertia: Matrix3<f64>) -> LimbChain {
        LimbChain::new(
            ReferenceSegment {
                name: "humerus".into(),
                markers: markers(),
            },
            vec![SegmentSpec {
                name: "rod".into(),
                length,
                mass,
                com_offset: Vector3::new(0.0, 0.0, -length / 2.0),
                inertia,
                markers: markers(),
            }],
            vec![JointSpec {
                kind: JointKind::Elbow,
                proximal_segment: "humerus".into(),
                distal_segment: "rod".into(),
                center_offset: Vector3::zeros(),
                translations_enabled: false,
            }],
            70.0,
        )
        .unwrap()
    }

    fn track(name: &str, poses: Vec<Pose>) -> PoseTrack {
        PoseTrack {
            segment: name.into(),
            residuals: vec![0.0; poses.len()],
            bridged: vec![false; poses.len()],
            poses,
        }
    }

    fn constant_series(reference: Pose, segments: &[(&str, Pose)], n: usize) -> SegmentPoseSeries {
        SegmentPoseSeries {
            times: (0..n).map(|k| k as f64 * 0.01).collect(),
            sample_rate: 100.0,
            reference: track("humerus", vec![reference; n]),
            segments: segments
                .iter()
                .map(|(s, p)| track(s, vec![*p; n]))
                .collect(),
        }
    }

    fn no_grf(times: &[f64]) -> GrfSeries {
        let n = times.len();
        GrfSeries::new(
            times.to_vec(),
            vec![Vector3::zeros(); n],
            vec![Vector3::zeros(); n],
            vec![false; n],
            None,
        )
        .unwrap()
    }

    #[test]
    fn static_horizontal_rod() {
        let chain = rod_chain(2.0, 1.0, Matrix3::zeros());
        // Rod pointing forward: local −z maps to lab +x.
        let pose = Pose::from_parts(
            Translation3::identity(),
            Rotation3::from_axis_angle(&Vector3::y_axis(), -std::f64::consts::FRAC_PI_2),
        );
        let poses = constant_series(Pose::identity(), &[("rod", pose)], 5);
        let spatial = segment_spatial_states(&chain, &poses, None).unwrap();
        let grf = no_grf(&poses.times);
        let loads = inverse_dynamics(
            &chain,
            &spatial,
            &grf,
            &InverseDynamicsOptions::for_chain(&chain),
        )
        .unwrap();
        let j = &loads.joints[0];
        for k in 0..5 {
            assert!((j.force_lab[k] - Vector3::new(0.0, 0.0, 19.62)).norm() < 1e-9);
            assert!((j.moment_lab[k].norm() - 9.81).abs() < 1e-9);
            assert!((j.moment_lab[k] - Vector3::new(0.0, -9.81, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn massless_chain_transmits_ground_force() {
        let base = default_forelimb();
        let massless = vec![crate::model::InertialProperties::massless(); base.segments().len()];
        let chain = base.with_inertia(&massless).unwrap();
        // Straight vertical limb: every segment frame aligned with the lab.
        let mut segs = Vec::new();
        let mut z = 0.0;
        for s in chain.segments() {
            segs.push((
                s.name.as_str(),
                Pose::from_parts(Translation3::new(0.0, 0.0, z), Rotation3::identity()),
            ));
            z -= s.length;
        }
        let poses = constant_series(Pose::identity(), &segs, 5);
        let spatial = segment_spatial_states(&chain, &poses, None).unwrap();
        let f = Vector3::new(150.0, -20.0, 4000.0);
        let cop = Vector3::new(0.03, 0.01, z);
        let grf = GrfSeries::new(
            poses.times.clone(),
            vec![f; 5],
            vec![cop; 5],
            vec![true; 5],
            None,
        )
        .unwrap();
        let loads = inverse_dynamics(
            &chain,
            &spatial,
            &grf,
            &InverseDynamicsOptions::for_chain(&chain),
        )
        .unwrap();
        for j in &loads.joints {
            for k in 0..5 {
                assert!((j.force_lab[k] + f).norm() < 1e-9);
                let expected = -(cop - j.center[k]).cross(&f);
                assert!((j.moment_lab[k] - expected).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn missing_cop_during_contact_is_an_error() {
        let chain = rod_chain(2.0, 1.0, Matrix3::zeros());
        let poses = constant_series(Pose::identity(), &[("rod", Pose::identity())], 5);
        let spatial = segment_spatial_states(&chain, &poses, None).unwrap();
        let grf = GrfSeries::new(
            poses.times.clone(),
            vec![Vector3::new(0.0, 0.0, 500.0); 5],
            vec![Vector3::zeros(); 5],
            vec![true, true, false, true, true],
            None,
        )
        .unwrap();
        let err = inverse_dynamics(
            &chain,
            &spatial,
            &grf,
            &InverseDynamicsOptions::for_chain(&chain),
        )
        .unwrap_err();
        assert!(matches!(err, Error::MissingCop { time } if (time - 0.02).abs() < 1e-12));
    }

    /// A body spinning steadily about a non-principal axis needs a moment
    /// equal to ω × Iω.
    #[test]
    fn gyroscopic_moment() {
        let inertia = Matrix3::from_diagonal(&Vector3::new(0.3, 0.2, 0.1));
        let chain = rod_chain(0.0, 1.0, Matrix3::zeros())
            .with_inertia(&[crate::model::InertialProperties {
                mass: 1.0,
                com_offset: Vector3::zeros(),
                inertia,
            }])
            .unwrap();
        let w = Vector3::new(1.0, 2.0, 0.5);
        let rate = 2000.0;
        let n = 401;
        let times: Vec<f64> = (0..n).map(|k| k as f64 / rate).collect();
        let rod: Vec<Pose> = times
            .iter()
            .map(|&t| Pose::from_parts(Translation3::identity(), Rotation3::new(w * t)))
            .collect();
        let poses = SegmentPoseSeries {
            times: times.clone(),
            sample_rate: rate,
            reference: track("humerus", vec![Pose::identity(); n]),
            segments: vec![track("rod", rod)],
        };
        let spatial = segment_spatial_states(&chain, &poses, None).unwrap();
        let loads = inverse_dynamics(
            &chain,
            &spatial,
            &no_grf(&times),
            &InverseDynamicsOptions::for_chain(&chain),
        )
        .unwrap();
        for k in [100, 200, 300] {
            let r = spatial.segments[0].rotation[k];
            let expected = w.cross(&(r.matrix() * inertia * r.matrix().transpose() * w));
            assert!(
                (loads.joints[0].moment_lab[k] - expected).norm() < 1e-4,
                "{:?}",
                loads.joints[0].moment_lab[k]
            );
        }
    }

    #[test]
    fn loads_scale_with_mass() {
        let chain = default_forelimb();
        let scaled = chain.scaled_mass(2.5).unwrap();
        let rate = 200.0;
        let n = 60;
        let times: Vec<f64> = (0..n).map(|k| k as f64 / rate).collect();
        let mut segs: Vec<Vec<Pose>> = vec![Vec::new(); chain.segments().len()];
        for &t in &times {
            let mut z = 0.0;
            for (i, s) in chain.segments().iter().enumerate() {
                let rot = Rotation3::new(Vector3::new(
                    0.1,
                    0.4 * (5.0 * t).sin() * (i as f64 + 1.0),
                    0.05,
                ));
                segs[i].push(Pose::from_parts(Translation3::new(0.2 * t, 0.0, z), rot));
                z -= s.length;
            }
        }
        let poses = SegmentPoseSeries {
            times: times.clone(),
            sample_rate: rate,
            reference: track("humerus", vec![Pose::identity(); n]),
            segments: chain
                .segments()
                .iter()
                .zip(segs)
                .map(|(s, p)| track(&s.name, p))
                .collect(),
        };
        let spatial = segment_spatial_states(&chain, &poses, None).unwrap();
        let grf = no_grf(&times);
        let a = inverse_dynamics(
            &chain,
            &spatial,
            &grf,
            &InverseDynamicsOptions::for_chain(&chain),
        )
        .unwrap();
        let b = inverse_dynamics(
            &scaled,
            &spatial,
            &grf,
            &InverseDynamicsOptions::for_chain(&chain),
        )
        .unwrap();
        for (ja, jb) in a.joints.iter().zip(&b.joints) {
            for k in 0..n {
                assert!(
                    (ja.moment[k] * 2.5 - jb.moment[k]).norm() < 1e-9 * (1.0 + jb.moment[k].norm())
                );
                assert!(
                    (ja.force[k] * 2.5 - jb.force[k]).norm() < 1e-9 * (1.0 + jb.force[k].norm())
                );
            }
        }
        // Per-kg loads are unchanged.
        let (pa, pb) = (a.moment_per_kg(1), b.moment_per_kg(1));
        for k in 0..n {
            assert!((pa[k] - pb[k]).norm() < 1e-12);
        }
    }
}
