//! TOML chain-configuration documents and body-mass scaling of inertial
//! parameters.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{JointKind, JointSpec, LimbChain, MarkerPoint, ReferenceSegment, SegmentSpec};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkerConfig {
    pub label: String,
    /// Position in the segment frame, meters.
    pub position: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    pub name: String,
    pub markers: Vec<MarkerConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentConfig {
    pub name: String,
    pub length: f64,
    /// Explicit inertial parameters. When any of these is missing the
    /// segment is scaled from body mass with the `[inertial]` coefficients.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub com_offset: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inertia: Option<[[f64; 3]; 3]>,
    pub markers: Vec<MarkerConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointConfig {
    pub name: JointKind,
    pub proximal: String,
    pub distal: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_offset: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub translations_enabled: Option<bool>,
}

/// Per-segment scaling coefficients relative to body mass and segment length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InertialCoefficients {
    /// Segment mass / body mass.
    pub mass_fraction: f64,
    /// Distance of the center of mass from the proximal end / segment length.
    pub com_fraction: f64,
    /// Radii of gyration about the COM (x, y, z) / segment length.
    pub gyration: [f64; 3],
}

impl InertialCoefficients {
    /// Representative equine forelimb coefficients shipped as defaults.
    ///
    /// These are plausible round numbers for a warmblood-sized horse. They
    /// are NOT measured values; supply subject-specific coefficients in the
    /// `[inertial]` table for real analyses.
    pub fn representative_defaults() -> BTreeMap<String, InertialCoefficients> {
        let c = |mass_fraction, com_fraction, gyration| InertialCoefficients {
            mass_fraction,
            com_fraction,
            gyration,
        };
        BTreeMap::from([
            ("radius".to_string(), c(0.0150, 0.42, [0.27, 0.27, 0.10])),
            ("cannon".to_string(), c(0.0045, 0.45, [0.28, 0.28, 0.09])),
            ("pastern".to_string(), c(0.0016, 0.48, [0.30, 0.30, 0.12])),
            ("p1".to_string(), c(0.0011, 0.48, [0.30, 0.30, 0.12])),
            ("p2".to_string(), c(0.0007, 0.48, [0.32, 0.32, 0.14])),
            ("hoof".to_string(), c(0.0025, 0.40, [0.35, 0.35, 0.30])),
        ])
    }
}

/// Inertial fields of a [`SegmentSpec`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InertialProperties {
    pub mass: f64,
    pub com_offset: Vector3<f64>,
    pub inertia: Matrix3<f64>,
}

impl InertialProperties {
    pub fn massless() -> Self {
        InertialProperties {
            mass: 0.0,
            com_offset: Vector3::zeros(),
            inertia: Matrix3::zeros(),
        }
    }
}

/// Scales segment inertial parameters from body mass.
///
/// `segments` lists `(name, length)` pairs. The COM lies on the long axis,
/// `com_fraction · length` distal of the segment origin, and the inertia
/// tensor is diagonal with `mass · (k · length)²` entries.
pub fn inertial_from_body_mass(
    body_mass: f64,
    coefficients: &BTreeMap<String, InertialCoefficients>,
    segments: &[(&str, f64)],
) -> Result<Vec<InertialProperties>> {
    if !(body_mass > 0.0) {
        return Err(Error::Precondition(format!(
            "body mass must be positive, got {body_mass}"
        )));
    }
    segments
        .iter()
        .map(|&(name, length)| {
            let c = coefficients.get(name).ok_or_else(|| {
                Error::Config(format!("no inertial coefficients for segment '{name}'"))
            })?;
            let all = [
                c.mass_fraction,
                c.com_fraction,
                c.gyration[0],
                c.gyration[1],
                c.gyration[2],
            ];
            if all.iter().any(|v| !(*v >= 0.0)) {
                return Err(Error::Precondition(format!(
                    "negative inertial coefficient for segment '{name}'"
                )));
            }
            let mass = c.mass_fraction * body_mass;
            let k = Vector3::from(c.gyration) * length;
            Ok(InertialProperties {
                mass,
                com_offset: Vector3::new(0.0, 0.0, -c.com_fraction * length),
                inertia: Matrix3::from_diagonal(&k.component_mul(&k).scale(mass)),
            })
        })
        .collect()
}

/// The chain-configuration document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub body_mass: f64,
    pub reference: ReferenceConfig,
    pub segments: Vec<SegmentConfig>,
    pub joints: Vec<JointConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inertial: Option<BTreeMap<String, InertialCoefficients>>,
}

impl ChainConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("chain config serializes")
    }
}

fn markers(list: &[MarkerConfig]) -> Vec<MarkerPoint> {
    list.iter()
        .map(|m| MarkerPoint {
            label: m.label.clone(),
            position: Vector3::from(m.position),
        })
        .collect()
}

/// Builds and validates a [`LimbChain`] from its configuration document.
pub fn build_chain(config: &ChainConfig) -> Result<LimbChain> {
    let defaults;
    let table = match &config.inertial {
        Some(t) => t,
        None => {
            defaults = InertialCoefficients::representative_defaults();
            &defaults
        }
    };

    let mut segments = Vec::with_capacity(config.segments.len());
    for s in &config.segments {
        let explicit = (s.mass, s.com_offset, s.inertia);
        let props = match explicit {
            (Some(mass), Some(com), Some(inertia)) => InertialProperties {
                mass,
                com_offset: Vector3::from(com),
                inertia: Matrix3::from_row_slice(&inertia.concat()),
            },
            _ => {
                let scaled =
                    inertial_from_body_mass(config.body_mass, table, &[(&s.name, s.length)])?[0];
                InertialProperties {
                    mass: s.mass.unwrap_or(scaled.mass),
                    com_offset: s.com_offset.map(Vector3::from).unwrap_or(scaled.com_offset),
                    inertia: s
                        .inertia
                        .map(|i| Matrix3::from_row_slice(&i.concat()))
                        .unwrap_or(scaled.inertia),
                }
            }
        };
        if !(props.mass > 0.0) {
            return Err(Error::Config(format!(
                "segment '{}': mass must be positive",
                s.name
            )));
        }
        segments.push(SegmentSpec {
            name: s.name.clone(),
            length: s.length,
            mass: props.mass,
            com_offset: props.com_offset,
            inertia: props.inertia,
            markers: markers(&s.markers),
        });
    }

    let joints = config
        .joints
        .iter()
        .map(|j| JointSpec {
            kind: j.name,
            proximal_segment: j.proximal.clone(),
            distal_segment: j.distal.clone(),
            center_offset: j
                .center_offset
                .map(Vector3::from)
                .unwrap_or_else(Vector3::zeros),
            translations_enabled: j
                .translations_enabled
                .unwrap_or_else(|| j.name.default_translations_enabled()),
        })
        .collect();

    LimbChain::new(
        ReferenceSegment {
            name: config.reference.name.clone(),
            markers: markers(&config.reference.markers),
        },
        segments,
        joints,
        config.body_mass,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const FOUR_SEGMENT: &str = super::super::DEFAULT_FORELIMB;

    #[test]
    fn four_segment_chain() {
        let chain = build_chain(&ChainConfig::from_toml_str(FOUR_SEGMENT).unwrap()).unwrap();
        assert_eq!(
            chain.joint_kinds(),
            vec![
                JointKind::Elbow,
                JointKind::Carpus,
                JointKind::Fetlock,
                JointKind::Coffin
            ]
        );
        let lengths: Vec<f64> = chain.segments().iter().map(|s| s.length).collect();
        assert_eq!(lengths, vec![0.369, 0.282, 0.114, 0.080]);
        assert_eq!(chain.body_mass(), 433.0);
        assert!(chain.joints()[0].translations_enabled);
        assert!(!chain.joints()[1].translations_enabled);
        assert_eq!(chain.convention().len(), 24);
    }

    #[test]
    fn duplicate_segment_rejected() {
        let doubled = FOUR_SEGMENT.replacen(
            "[[segments]]\nname = \"pastern\"",
            "[[segments]]\nname = \"cannon\"",
            1,
        );
        let err = build_chain(&ChainConfig::from_toml_str(&doubled).unwrap()).unwrap_err();
        assert!(
            err.to_string().contains("duplicate segment name 'cannon'"),
            "{err}"
        );
    }

    #[test]
    fn five_joint_chain_with_pastern() {
        let five = FOUR_SEGMENT
            .replace(
                "name = \"pastern\"\nlength = 0.114",
                "name = \"p1\"\nlength = 0.070",
            )
            .replace("distal = \"pastern\"", "distal = \"p1\"")
            .replace(
                "[[joints]]\nname = \"coffin\"\nproximal = \"pastern\"",
                "[[joints]]\nname = \"pastern\"\nproximal = \"p1\"\ndistal = \"p2\"\n\n[[joints]]\nname = \"coffin\"\nproximal = \"p2\"",
            )
            + r#"
[[segments]]
name = "p2"
length = 0.044
markers = [
  { label = "q1", position = [0.02, 0.02, -0.01] },
  { label = "q2", position = [-0.02, 0.02, -0.02] },
  { label = "q3", position = [0.00, -0.02, -0.04] },
]
"#;
        let chain = build_chain(&ChainConfig::from_toml_str(&five).unwrap()).unwrap();
        assert_eq!(chain.joints().len(), 5);
        assert_eq!(chain.joint_kinds(), JointKind::ALL.to_vec());
        assert!(chain.joints()[3].translations_enabled);
        assert_eq!(chain.convention().len(), 30);
    }

    #[test]
    fn radius_mass_from_coefficient() {
        let table = BTreeMap::from([(
            "radius".to_string(),
            InertialCoefficients {
                mass_fraction: 0.02,
                com_fraction: 0.4,
                gyration: [0.3, 0.3, 0.1],
            },
        )]);
        let p = inertial_from_body_mass(433.0, &table, &[("radius", 0.369)]).unwrap();
        assert!((p[0].mass - 8.66).abs() < 1e-12);
    }

    #[test]
    fn zero_body_mass_rejected() {
        let table = InertialCoefficients::representative_defaults();
        assert!(matches!(
            inertial_from_body_mass(0.0, &table, &[("radius", 0.369)]),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn missing_coefficient_rejected() {
        let table = InertialCoefficients::representative_defaults();
        let err = inertial_from_body_mass(433.0, &table, &[("ulna", 0.3)]).unwrap_err();
        assert!(err.to_string().contains("ulna"));
    }

    #[test]
    fn mass_is_linear_in_body_mass() {
        let table = InertialCoefficients::representative_defaults();
        let segs = [
            ("radius", 0.369),
            ("cannon", 0.282),
            ("pastern", 0.114),
            ("hoof", 0.08),
        ];
        let a = inertial_from_body_mass(433.0, &table, &segs).unwrap();
        let b = inertial_from_body_mass(866.0, &table, &segs).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(2.0 * x.mass, y.mass);
        }
        let total: f64 = a.iter().map(|p| p.mass).sum();
        let coeff: f64 = segs.iter().map(|(n, _)| table[*n].mass_fraction).sum();
        assert!((total - 433.0 * coeff).abs() <= 1e-12 * total);
    }
}
