use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::profile::Profile;
use crate::error::{Error, Result};
use crate::model::{build_chain, default_forelimb, ChainConfig, JointKind, LimbChain};

/// Constant-velocity motion of the reference segment.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseMotion {
    /// Reference origin at t = 0 (m).
    #[serde(default)]
    pub origin: [f64; 3],
    #[serde(default)]
    pub velocity: [f64; 3],
    /// Rotation of the reference frame about lab y (rad).
    #[serde(default)]
    pub pitch: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    #[serde(default)]
    pub angle: f64,
    #[serde(default)]
    pub rate: f64,
}

/// Hinge torque `profile(t) − stiffness·q − damping·q̇` (N·m).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorqueDrive {
    #[serde(default)]
    pub profile: Profile,
    #[serde(default)]
    pub stiffness: f64,
    #[serde(default)]
    pub damping: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrfShape {
    /// Vertical force `peak·sin(πs)` over the contact, `s ∈ [0, 1]`.
    #[default]
    HalfSine,
    /// Vertical force `peak` throughout the contact.
    Constant,
}

/// Scripted ground reaction on the most distal segment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrfScript {
    /// Contact interval (s).
    pub start: f64,
    pub end: f64,
    /// Peak vertical force (N).
    pub peak: f64,
    #[serde(default)]
    pub shape: GrfShape,
    /// Fore–aft force amplitude as a fraction of `peak`; braking in the
    /// first half of a half-sine contact, propulsion in the second.
    #[serde(default)]
    pub forward_fraction: f64,
    /// Center of pressure at contact start and end; linear in between (m).
    pub cop_start: [f64; 3],
    pub cop_end: [f64; 3],
}

impl GrfScript {
    /// Force and COP at `t`; `None` outside the contact.
    pub fn sample(&self, t: f64) -> Option<(nalgebra::Vector3<f64>, nalgebra::Vector3<f64>)> {
        if t < self.start || t > self.end {
            return None;
        }
        let s = (t - self.start) / (self.end - self.start);
        let (fz, fx) = match self.shape {
            GrfShape::HalfSine => {
                let pi = std::f64::consts::PI;
                (
                    self.peak * (pi * s).sin(),
                    -self.forward_fraction * self.peak * (2.0 * pi * s).sin(),
                )
            }
            GrfShape::Constant => (self.peak, self.forward_fraction * self.peak),
        };
        let a = nalgebra::Vector3::from(self.cop_start);
        let b = nalgebra::Vector3::from(self.cop_end);
        Some((nalgebra::Vector3::new(fx, 0.0, fz), a + (b - a) * s))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    /// Standard deviation of independent Gaussian marker jitter per
    /// coordinate (m).
    #[serde(default)]
    pub sd: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            sd: 0.0,
            seed: default_seed(),
        }
    }
}

fn default_seed() -> u64 {
    1
}
fn default_name() -> String {
    "scenario".into()
}
fn default_dt() -> f64 {
    1e-3
}
fn default_marker_rate() -> f64 {
    120.0
}
fn default_grf_rate() -> f64 {
    1000.0
}
fn default_gravity() -> f64 {
    crate::GRAVITY
}
fn default_static_frames() -> usize {
    10
}

/// A synthetic experiment: chain, prescribed torques or angles, optional
/// ground reaction script, sampling and marker noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticScenario {
    #[serde(default = "default_name")]
    pub name: String,
    /// Inline chain; the shipped forelimb when both this and `chain_file`
    /// are absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainConfig>,
    /// Chain document path, relative to the scenario file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain_file: Option<PathBuf>,
    /// Simulated time span (s).
    pub duration: f64,
    /// Integration step (s).
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_marker_rate")]
    pub marker_rate: f64,
    #[serde(default = "default_grf_rate")]
    pub grf_rate: f64,
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    #[serde(default)]
    pub base: BaseMotion,
    /// Initial hinge angles and rates by joint name (torque-driven only).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub initial: BTreeMap<String, InitialState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub torques: Option<BTreeMap<String, TorqueDrive>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angles: Option<BTreeMap<String, Profile>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grf: Option<GrfScript>,
    #[serde(default)]
    pub noise: NoiseModel,
    /// Frames in the synthesized static (calibration) capture.
    #[serde(default = "default_static_frames")]
    pub static_frames: usize,
}

/// How the hinges are driven, resolved to chain joint order.
#[derive(Clone, Debug, PartialEq)]
pub enum Drive {
    Torques(Vec<TorqueDrive>),
    Angles(Vec<Profile>),
}

impl SyntheticScenario {
    /// Scenario on the shipped forelimb with default sampling and no drive.
    pub fn new(name: &str, duration: f64) -> Self {
        SyntheticScenario {
            name: name.to_string(),
            chain: None,
            chain_file: None,
            duration,
            dt: default_dt(),
            marker_rate: default_marker_rate(),
            grf_rate: default_grf_rate(),
            gravity: default_gravity(),
            base: BaseMotion::default(),
            initial: BTreeMap::new(),
            torques: None,
            angles: None,
            grf: None,
            noise: NoiseModel::default(),
            static_frames: default_static_frames(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    /// Reads a scenario and inlines its `chain_file`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut s: Self = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))?;
        if let Some(rel) = s.chain_file.take() {
            if s.chain.is_some() {
                return Err(Error::Config(
                    "give either 'chain' or 'chain_file', not both".into(),
                ));
            }
            let full = path.parent().unwrap_or(Path::new(".")).join(rel);
            s.chain = Some(ChainConfig::load(&full)?);
        }
        Ok(s)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn build_chain(&self) -> Result<LimbChain> {
        if self.chain_file.is_some() {
            return Err(Error::Config(
                "chain_file is resolved when loading the scenario from disk".into(),
            ));
        }
        match &self.chain {
            Some(c) => build_chain(c),
            None => Ok(default_forelimb()),
        }
    }

    fn joint_index(chain: &LimbChain, name: &str) -> Result<usize> {
        let kind: JointKind = name.parse()?;
        chain
            .joints()
            .iter()
            .position(|j| j.kind == kind)
            .ok_or_else(|| Error::Config(format!("joint '{name}' is not part of the chain")))
    }

    fn per_joint<T: Clone + Default>(
        chain: &LimbChain,
        map: &BTreeMap<String, T>,
    ) -> Result<Vec<T>> {
        let mut out = vec![T::default(); chain.joints().len()];
        for (name, v) in map {
            out[Self::joint_index(chain, name)?] = v.clone();
        }
        Ok(out)
    }

    /// Checks parameters and resolves the drive against `chain`.
    pub fn resolve(&self, chain: &LimbChain) -> Result<(Drive, Vec<InitialState>)> {
        let positive = [
            ("duration", self.duration),
            ("dt", self.dt),
            ("marker_rate", self.marker_rate),
            ("grf_rate", self.grf_rate),
        ];
        for (what, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{what} must be positive, got {v}")));
            }
        }
        if !(self.gravity >= 0.0) {
            return Err(Error::Config("gravity must be non-negative".into()));
        }
        if !(self.noise.sd >= 0.0) {
            return Err(Error::Config("noise sd must be non-negative".into()));
        }
        if let Some(g) = &self.grf {
            if !(g.end > g.start) || !g.peak.is_finite() {
                return Err(Error::Config(
                    "grf contact needs end > start and a finite peak".into(),
                ));
            }
        }
        let drive = match (&self.torques, &self.angles) {
            (Some(t), None) => {
                let d = Self::per_joint(chain, t)?;
                for (j, v) in d.iter().enumerate() {
                    v.profile.validate(&format!("torque of joint {j}"))?;
                }
                Drive::Torques(d)
            }
            (None, Some(a)) => {
                if !self.initial.is_empty() {
                    return Err(Error::Config(
                        "initial states only apply to torque-driven scenarios".into(),
                    ));
                }
                let d = Self::per_joint(chain, a)?;
                for (j, p) in d.iter().enumerate() {
                    p.validate(&format!("angle of joint {j}"))?;
                }
                Drive::Angles(d)
            }
            _ => {
                return Err(Error::Config(
                    "a scenario prescribes exactly one of 'torques' or 'angles'".into(),
                ))
            }
        };
        let initial = Self::per_joint(chain, &self.initial)?;
        Ok((drive, initial))
    }
}
