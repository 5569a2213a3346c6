//! Trot-like single-stride trial on the shipped forelimb.

use std::collections::BTreeMap;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::planar::{Base, PlanarChain};
use super::profile::{Harmonic, Profile};
use super::scenario::{GrfScript, GrfShape, NoiseModel, SyntheticScenario};
use super::simulate::{simulate, Simulation};
use crate::error::{Error, Result};
use crate::model::{default_forelimb, JointKind};

/// Slack before the first sample so the contact is already under way when
/// recording starts (s).
const LEAD: f64 = 0.0005;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrotParameters {
    /// Stance duration / stride duration.
    pub stance_fraction: f64,
    /// Stride duration (s).
    pub stride: f64,
    /// Forward speed (m/s).
    pub speed: f64,
    /// Peak vertical ground reaction per body mass (N/kg).
    pub peak_grf: f64,
    /// Multiplier on every joint-angle oscillation; zero holds the limb still.
    pub amplitude: f64,
    /// Fore–aft force amplitude as a fraction of the vertical peak.
    pub forward_fraction: f64,
    pub marker_rate: f64,
    pub grf_rate: f64,
    /// Marker jitter (m).
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for TrotParameters {
    fn default() -> Self {
        TrotParameters {
            stance_fraction: 0.435,
            stride: 0.706,
            speed: 3.13,
            peak_grf: 9.44,
            amplitude: 1.0,
            forward_fraction: 0.1,
            marker_rate: 120.0,
            grf_rate: 1000.0,
            noise_sd: 0.0,
            seed: 1,
        }
    }
}

impl TrotParameters {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("stride", self.stride),
            ("speed", self.speed),
            ("peak_grf", self.peak_grf),
            ("marker_rate", self.marker_rate),
            ("grf_rate", self.grf_rate),
        ];
        for (what, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{what} must be positive, got {v}")));
            }
        }
        if !(self.stance_fraction > 0.0 && self.stance_fraction < 1.0) {
            return Err(Error::Config(format!(
                "stance_fraction must lie in (0, 1), got {}",
                self.stance_fraction
            )));
        }
        let others = [
            ("amplitude", self.amplitude),
            ("forward_fraction", self.forward_fraction),
            ("noise_sd", self.noise_sd),
        ];
        for (what, v) in others {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "{what} must be non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Joint-angle oscillations over one stride (rad), before scaling.
fn base_profiles(stride: f64) -> [(JointKind, Profile); 4] {
    let p = |terms: &[(f64, f64)]| Profile {
        offset: 0.0,
        period: stride,
        harmonics: terms
            .iter()
            .map(|&(amplitude, phase)| Harmonic { amplitude, phase })
            .collect(),
    };
    [
        (JointKind::Elbow, p(&[(0.30, 0.4), (0.06, 1.1)])),
        (JointKind::Carpus, p(&[(0.45, -2.2), (0.15, -1.0)])),
        (JointKind::Fetlock, p(&[(0.25, 1.6), (0.10, 0.3)])),
        (JointKind::Coffin, p(&[(0.12, -0.5), (0.04, 2.0)])),
    ]
}

/// Simulates one stride starting at ground contact. The recording spans the
/// stride rounded to whole marker frames.
///
/// The vertical reaction is a half-sine whose part above the default
/// contact threshold spans exactly the requested stance fraction, so the
/// detected stance matches the parameter.
pub fn synth_trot(params: &TrotParameters) -> Result<Simulation> {
    params.validate()?;
    let chain = default_forelimb();
    let planar = PlanarChain::from_chain(&chain)?;
    let height: f64 = chain.segments().iter().map(|s| s.length).sum();

    let span = (params.stride * params.marker_rate).round().max(2.0) / params.marker_rate;
    let mut scenario = SyntheticScenario::new("trot", span);
    scenario.marker_rate = params.marker_rate;
    scenario.grf_rate = params.grf_rate;
    scenario.base.origin = [0.0, 0.0, height];
    scenario.base.velocity = [params.speed, 0.0, 0.0];
    scenario.noise = NoiseModel {
        sd: params.noise_sd,
        seed: params.seed,
    };
    let profiles: Vec<(JointKind, Profile)> = base_profiles(params.stride)
        .into_iter()
        .map(|(k, p)| (k, p.scaled(params.amplitude)))
        .collect();
    scenario.angles = Some(
        profiles
            .iter()
            .map(|(k, p)| (k.name().to_string(), p.clone()))
            .collect::<BTreeMap<_, _>>(),
    );

    let body_mass = chain.body_mass();
    let peak = params.peak_grf * body_mass;
    let threshold = crate::dynamics::GrfSeries::default_threshold(body_mass);
    let s_th = (threshold / peak).min(0.49).asin() / std::f64::consts::PI;
    let stance = params.stance_fraction * span;
    let contact = (stance + LEAD) / (1.0 - 2.0 * s_th);
    let start = -s_th * contact - LEAD;
    let end = start + contact;

    let base = Base {
        origin: Vector3::from(scenario.base.origin),
        velocity: Vector3::from(scenario.base.velocity),
        pitch: 0.0,
    };
    let sole = |t: f64| -> [f64; 3] {
        let e: Vec<(f64, f64, f64)> = profiles.iter().map(|(_, p)| p.eval(t)).collect();
        let q: Vec<f64> = e.iter().map(|v| v.0).collect();
        let qd: Vec<f64> = e.iter().map(|v| v.1).collect();
        let qdd: Vec<f64> = e.iter().map(|v| v.2).collect();
        let states = planar.kinematics(&base, t, &q, &qd, &qdd);
        let last = planar.len() - 1;
        let p = states[last].point(&planar.bodies[last].tip);
        [p.x, 0.0, p.z]
    };
    scenario.grf = Some(GrfScript {
        start,
        end,
        peak,
        shape: GrfShape::HalfSine,
        forward_fraction: params.forward_fraction,
        cop_start: sole(start.max(0.0)),
        cop_end: sole(end),
    });
    simulate(&scenario, &chain)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        let bad = TrotParameters {
            stance_fraction: 1.0,
            ..TrotParameters::default()
        };
        assert!(synth_trot(&bad).is_err());
        let bad = TrotParameters {
            stride: -1.0,
            ..TrotParameters::default()
        };
        assert!(synth_trot(&bad).is_err());
    }
}
