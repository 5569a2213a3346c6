//! Limb chain definition: segments, joints, inertial parameters and the
//! anatomical sign convention.
//!
//! Segment frames follow the anatomical axes of the limb: x cranial, y medial
//! (to the left for a right limb viewed from behind), z proximal. The
//! reference segment (the humerus for a forelimb) is measured kinematically
//! but carries no inertial parameters; the chain's equations stop at the
//! proximal side of the first joint.

mod config;
mod convention;

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use config::{
    build_chain, inertial_from_body_mass, ChainConfig, InertialCoefficients, InertialProperties,
    JointConfig, MarkerConfig, ReferenceConfig, SegmentConfig,
};
pub use convention::{
    from_anatomical, to_anatomical, AnatomicalConvention, ConventionRow, Coordinate,
    JointConvention, CONVENTION_TABLE,
};

/// The shipped four-segment forelimb configuration (TOML).
pub const DEFAULT_FORELIMB: &str = include_str!("../../data/forelimb.toml");

/// Parses and builds [`DEFAULT_FORELIMB`].
pub fn default_forelimb() -> LimbChain {
    build_chain(&ChainConfig::from_toml_str(DEFAULT_FORELIMB).expect("shipped chain parses"))
        .expect("shipped chain is valid")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    Elbow,
    Carpus,
    Fetlock,
    Pastern,
    Coffin,
}

impl JointKind {
    pub const ALL: [JointKind; 5] = [
        JointKind::Elbow,
        JointKind::Carpus,
        JointKind::Fetlock,
        JointKind::Pastern,
        JointKind::Coffin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            JointKind::Elbow => "elbow",
            JointKind::Carpus => "carpus",
            JointKind::Fetlock => "fetlock",
            JointKind::Pastern => "pastern",
            JointKind::Coffin => "coffin",
        }
    }

    /// Joint translations are only trusted at the elbow and pastern.
    pub fn default_translations_enabled(self) -> bool {
        matches!(self, JointKind::Elbow | JointKind::Pastern)
    }
}

impl fmt::Display for JointKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for JointKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        JointKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown joint '{s}'")))
    }
}

/// A labeled point of a segment's marker template, in segment coordinates (m).
#[derive(Clone, Debug, PartialEq)]
pub struct MarkerPoint {
    pub label: String,
    pub position: Vector3<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SegmentSpec {
    pub name: String,
    pub length: f64,
    pub mass: f64,
    /// Center of mass in the segment frame.
    pub com_offset: Vector3<f64>,
    /// Inertia tensor about the center of mass, segment frame.
    pub inertia: Matrix3<f64>,
    pub markers: Vec<MarkerPoint>,
}

/// The kinematically measured parent of the first joint.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceSegment {
    pub name: String,
    pub markers: Vec<MarkerPoint>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointSpec {
    pub kind: JointKind,
    pub proximal_segment: String,
    pub distal_segment: String,
    /// Joint center in the distal segment frame.
    pub center_offset: Vector3<f64>,
    pub translations_enabled: bool,
}

/// A validated open chain. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct LimbChain {
    reference: ReferenceSegment,
    segments: Vec<SegmentSpec>,
    joints: Vec<JointSpec>,
    convention: AnatomicalConvention,
    body_mass: f64,
}

impl LimbChain {
    /// Validates and orders the chain proximal to distal.
    ///
    /// Joints may be given in any order; segments are reordered to follow the
    /// joints.
    pub fn new(
        reference: ReferenceSegment,
        segments: Vec<SegmentSpec>,
        joints: Vec<JointSpec>,
        body_mass: f64,
    ) -> Result<Self> {
        if !(body_mass > 0.0) {
            return Err(Error::Config(format!(
                "body mass must be positive, got {body_mass}"
            )));
        }
        check_markers(&reference.name, &reference.markers)?;

        let mut names = vec![reference.name.as_str()];
        for s in &segments {
            if names.contains(&s.name.as_str()) {
                return Err(Error::Config(format!(
                    "duplicate segment name '{}'",
                    s.name
                )));
            }
            names.push(&s.name);
            validate_segment(s)?;
        }
        if joints.len() != segments.len() {
            return Err(Error::Config(format!(
                "{} joints for {} segments; every segment needs exactly one proximal joint",
                joints.len(),
                segments.len()
            )));
        }
        for (i, j) in joints.iter().enumerate() {
            if joints[..i].iter().any(|o| o.kind == j.kind) {
                return Err(Error::Config(format!("duplicate joint '{}'", j.kind)));
            }
            for side in [&j.proximal_segment, &j.distal_segment] {
                if !names.contains(&side.as_str()) {
                    return Err(Error::Config(format!(
                        "joint '{}' references undeclared segment '{side}'",
                        j.kind
                    )));
                }
            }
        }

        // Walk the chain from the reference; each step must find exactly one joint.
        let mut ordered_joints = Vec::with_capacity(joints.len());
        let mut ordered_segments = Vec::with_capacity(segments.len());
        let mut current = reference.name.clone();
        let mut visited = vec![reference.name.clone()];
        while ordered_joints.len() < joints.len() {
            let next: Vec<&JointSpec> = joints
                .iter()
                .filter(|j| j.proximal_segment == current)
                .collect();
            let joint = match next.as_slice() {
                [] => {
                    return Err(Error::Config(format!(
                        "chain is disconnected after segment '{current}'"
                    )))
                }
                [one] => *one,
                _ => {
                    return Err(Error::Config(format!(
                        "segment '{current}' has {} distal joints; only a single open chain is supported",
                        next.len()
                    )))
                }
            };
            if visited.contains(&joint.distal_segment) {
                return Err(Error::Config(format!(
                    "joint '{}' closes a cycle at segment '{}'",
                    joint.kind, joint.distal_segment
                )));
            }
            let seg = segments
                .iter()
                .find(|s| s.name == joint.distal_segment)
                .ok_or_else(|| {
                    Error::Config(format!(
                        "joint '{}' has the reference segment as its distal side",
                        joint.kind
                    ))
                })?;
            visited.push(joint.distal_segment.clone());
            current = joint.distal_segment.clone();
            ordered_joints.push(joint.clone());
            ordered_segments.push(seg.clone());
        }

        let kinds: Vec<JointKind> = ordered_joints.iter().map(|j| j.kind).collect();
        Ok(LimbChain {
            reference,
            segments: ordered_segments,
            joints: ordered_joints,
            convention: AnatomicalConvention::for_joints(&kinds),
            body_mass,
        })
    }

    pub fn reference(&self) -> &ReferenceSegment {
        &self.reference
    }

    pub fn segments(&self) -> &[SegmentSpec] {
        &self.segments
    }

    pub fn joints(&self) -> &[JointSpec] {
        &self.joints
    }

    pub fn convention(&self) -> &AnatomicalConvention {
        &self.convention
    }

    pub fn body_mass(&self) -> f64 {
        self.body_mass
    }

    pub fn joint_kinds(&self) -> Vec<JointKind> {
        self.joints.iter().map(|j| j.kind).collect()
    }

    pub fn total_segment_mass(&self) -> f64 {
        self.segments.iter().map(|s| s.mass).sum()
    }

    /// Same geometry with masses, inertias and body mass multiplied by `k`.
    pub fn scaled_mass(&self, k: f64) -> Result<Self> {
        let segments = self
            .segments
            .iter()
            .map(|s| SegmentSpec {
                mass: s.mass * k,
                inertia: s.inertia * k,
                ..s.clone()
            })
            .collect();
        LimbChain::new(
            self.reference.clone(),
            segments,
            self.joints.clone(),
            self.body_mass * k,
        )
    }

    /// Replaces the inertial parameters of every segment (used by tests and
    /// oracle scenarios that need massless or modified links).
    pub fn with_inertia(&self, props: &[InertialProperties]) -> Result<Self> {
        if props.len() != self.segments.len() {
            return Err(Error::Misaligned(format!(
                "{} inertial entries for {} segments",
                props.len(),
                self.segments.len()
            )));
        }
        let segments = self
            .segments
            .iter()
            .zip(props)
            .map(|(s, p)| SegmentSpec {
                mass: p.mass,
                com_offset: p.com_offset,
                inertia: p.inertia,
                ..s.clone()
            })
            .collect();
        LimbChain::new(
            self.reference.clone(),
            segments,
            self.joints.clone(),
            self.body_mass,
        )
    }

    /// Copy with the given joint's translation flag changed.
    pub fn with_translations(&self, kind: JointKind, enabled: bool) -> Self {
        let mut out = self.clone();
        for j in out.joints.iter_mut().filter(|j| j.kind == kind) {
            j.translations_enabled = enabled;
        }
        out
    }
}

fn validate_segment(s: &SegmentSpec) -> Result<()> {
    if !(s.length > 0.0) {
        return Err(Error::Config(format!(
            "segment '{}': length must be positive",
            s.name
        )));
    }
    if !(s.mass >= 0.0) {
        return Err(Error::Config(format!(
            "segment '{}': mass must be non-negative",
            s.name
        )));
    }
    if s.mass == 0.0 && s.inertia.abs().max() > 0.0 {
        return Err(Error::Config(format!(
            "segment '{}': massless segment with non-zero inertia",
            s.name
        )));
    }
    let scale = s.inertia.abs().max().max(f64::MIN_POSITIVE);
    if (s.inertia - s.inertia.transpose()).abs().max() > 1e-12 * scale {
        return Err(Error::Config(format!(
            "segment '{}': inertia is not symmetric",
            s.name
        )));
    }
    let eig = s.inertia.symmetric_eigenvalues();
    if eig.min() < -1e-12 * scale {
        return Err(Error::Config(format!(
            "segment '{}': inertia is not positive semi-definite",
            s.name
        )));
    }
    check_markers(&s.name, &s.markers)
}

fn check_markers(segment: &str, markers: &[MarkerPoint]) -> Result<()> {
    if markers.len() < 3 {
        return Err(Error::Config(format!(
            "segment '{segment}': needs at least 3 template markers, got {}",
            markers.len()
        )));
    }
    for (i, m) in markers.iter().enumerate() {
        if markers[..i].iter().any(|o| o.label == m.label) {
            return Err(Error::Config(format!(
                "segment '{segment}': duplicate marker label '{}'",
                m.label
            )));
        }
    }
    let points: Vec<Vector3<f64>> = markers.iter().map(|m| m.position).collect();
    if crate::kinematics::is_collinear(&points) {
        return Err(Error::Config(format!(
            "segment '{segment}': marker template is collinear"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn markers() -> Vec<MarkerPoint> {
        vec![
            MarkerPoint {
                label: "a".into(),
                position: Vector3::new(0.05, 0.0, -0.05),
            },
            MarkerPoint {
                label: "b".into(),
                position: Vector3::new(0.0, 0.05, -0.15),
            },
            MarkerPoint {
                label: "c".into(),
                position: Vector3::new(-0.05, 0.0, -0.25),
            },
        ]
    }

    fn seg(name: &str) -> SegmentSpec {
        SegmentSpec {
            name: name.into(),
            length: 0.3,
            mass: 1.0,
            com_offset: Vector3::new(0.0, 0.0, -0.15),
            inertia: Matrix3::from_diagonal(&Vector3::new(0.01, 0.01, 0.002)),
            markers: markers(),
        }
    }

    fn joint(kind: JointKind, p: &str, d: &str) -> JointSpec {
        JointSpec {
            kind,
            proximal_segment: p.into(),
            distal_segment: d.into(),
            center_offset: Vector3::zeros(),
            translations_enabled: kind.default_translations_enabled(),
        }
    }

    fn reference() -> ReferenceSegment {
        ReferenceSegment {
            name: "humerus".into(),
            markers: markers(),
        }
    }

    #[test]
    fn joints_are_ordered_from_reference() {
        let chain = LimbChain::new(
            reference(),
            vec![seg("cannon"), seg("radius")],
            vec![
                joint(JointKind::Carpus, "radius", "cannon"),
                joint(JointKind::Elbow, "humerus", "radius"),
            ],
            400.0,
        )
        .unwrap();
        assert_eq!(
            chain.joint_kinds(),
            vec![JointKind::Elbow, JointKind::Carpus]
        );
        assert_eq!(chain.segments()[0].name, "radius");
    }

    #[test]
    fn branching_rejected() {
        let err = LimbChain::new(
            reference(),
            vec![seg("radius"), seg("cannon")],
            vec![
                joint(JointKind::Elbow, "humerus", "radius"),
                joint(JointKind::Carpus, "humerus", "cannon"),
            ],
            400.0,
        )
        .unwrap_err();
        assert!(err.to_string().contains("single open chain"), "{err}");
    }

    #[test]
    fn cycle_rejected() {
        let err = LimbChain::new(
            reference(),
            vec![seg("radius"), seg("cannon")],
            vec![
                joint(JointKind::Elbow, "humerus", "radius"),
                joint(JointKind::Carpus, "radius", "humerus"),
            ],
            400.0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn asymmetric_inertia_rejected() {
        let mut s = seg("radius");
        s.inertia[(0, 1)] = 0.001;
        let err = LimbChain::new(
            reference(),
            vec![s],
            vec![joint(JointKind::Elbow, "humerus", "radius")],
            400.0,
        )
        .unwrap_err();
        assert!(err.to_string().contains("symmetric"));
    }

    #[test]
    fn collinear_template_rejected() {
        let mut s = seg("radius");
        s.markers = (0..3)
            .map(|i| MarkerPoint {
                label: format!("m{i}"),
                position: Vector3::new(0.0, 0.0, -0.1 * i as f64),
            })
            .collect();
        let err = LimbChain::new(
            reference(),
            vec![s],
            vec![joint(JointKind::Elbow, "humerus", "radius")],
            400.0,
        )
        .unwrap_err();
        assert!(err.to_string().contains("collinear"));
    }

    #[test]
    fn joint_names_parse() {
        assert_eq!("Fetlock".parse::<JointKind>().unwrap(), JointKind::Fetlock);
        assert!("shoulder".parse::<JointKind>().is_err());
    }
}
