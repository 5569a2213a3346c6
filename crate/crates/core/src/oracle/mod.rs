//! Synthetic ground truth for the inverse pipeline.
//!
//! A planar forward-dynamics simulator drives hinge chains with prescribed
//! torques or angles and a scripted ground reaction, then writes marker and
//! force-plate data in the same form as a recorded trial. The true loads,
//! powers and energies come along so the inverse pipeline can be scored by
//! [`roundtrip_check`].

mod planar;
mod profile;
mod roundtrip;
mod scenario;
mod simulate;
mod trot;
mod verify;

use std::collections::BTreeMap;

use crate::model::{
    ChainConfig, JointConfig, JointKind, MarkerConfig, ReferenceConfig, SegmentConfig,
};

pub use profile::{Harmonic, Profile};
pub use roundtrip::{
    relative_error, roundtrip_check, scored_frames, JointErrors, RoundtripReport, WorkEnergyBalance,
};
pub use scenario::{
    BaseMotion, Drive, GrfScript, GrfShape, InitialState, NoiseModel, SyntheticScenario,
    TorqueDrive,
};
pub use simulate::{simulate, simulate_forward, GroundTruth, Simulation, TruthJoint};
pub use trot::{synth_trot, TrotParameters};
pub use verify::{run_verification, CheckResult, VerifyOptions, CHECK_NAMES, CONVENTION_FIXTURE};

/// Height of the base origin in the built-in pendulum scenarios (m).
const PIVOT_HEIGHT: f64 = 2.0;

const ROD_JOINTS: [JointKind; 3] = [JointKind::Elbow, JointKind::Carpus, JointKind::Fetlock];

fn marker(label: String, p: [f64; 3]) -> MarkerConfig {
    MarkerConfig { label, position: p }
}

/// Chain of uniform rods `(length, mass)` hanging from a reference named
/// `base`, joined by elbow, carpus and fetlock hinges.
pub fn rod_chain(rods: &[(f64, f64)], body_mass: f64) -> ChainConfig {
    assert!(rods.len() <= ROD_JOINTS.len(), "at most three rods");
    let segments: Vec<SegmentConfig> = rods
        .iter()
        .enumerate()
        .map(|(i, &(length, mass))| {
            let name = format!("rod{}", i + 1);
            let lateral = mass * length * length / 12.0;
            let axial = mass * 0.02 * 0.02 / 2.0;
            SegmentConfig {
                markers: vec![
                    marker(format!("{name}a"), [0.3, 0.05, -0.2 * length]),
                    marker(format!("{name}b"), [-0.3, 0.1, -0.5 * length]),
                    marker(format!("{name}c"), [0.0, -0.3, -0.8 * length]),
                ],
                name,
                length,
                mass: Some(mass),
                com_offset: Some([0.0, 0.0, -0.5 * length]),
                inertia: Some([[lateral, 0.0, 0.0], [0.0, lateral, 0.0], [0.0, 0.0, axial]]),
            }
        })
        .collect();
    let joints = segments
        .iter()
        .enumerate()
        .map(|(i, s)| JointConfig {
            name: ROD_JOINTS[i],
            proximal: if i == 0 {
                "base".into()
            } else {
                segments[i - 1].name.clone()
            },
            distal: s.name.clone(),
            center_offset: None,
            translations_enabled: None,
        })
        .collect();
    ChainConfig {
        body_mass,
        reference: ReferenceConfig {
            name: "base".into(),
            markers: vec![
                marker("b1".into(), [0.3, 0.0, 0.1]),
                marker("b2".into(), [-0.3, 0.1, 0.2]),
                marker("b3".into(), [0.0, -0.3, 0.3]),
            ],
        },
        segments,
        joints,
        inertial: None,
    }
}

fn rods_scenario(name: &str, duration: f64, rods: &[(f64, f64)]) -> SyntheticScenario {
    let mass = rods.iter().map(|r| r.1).sum();
    let mut s = SyntheticScenario::new(name, duration);
    s.chain = Some(rod_chain(rods, mass));
    s.base.origin = [0.0, 0.0, PIVOT_HEIGHT];
    s
}

fn joint_map<T>(values: Vec<T>) -> BTreeMap<String, T> {
    values
        .into_iter()
        .enumerate()
        .map(|(i, v)| (ROD_JOINTS[i].name().to_string(), v))
        .collect()
}

fn sine(amplitude: f64, period: f64, phase: f64) -> Profile {
    Profile {
        offset: 0.0,
        period,
        harmonics: vec![Harmonic { amplitude, phase }],
    }
}

const DOUBLE_RODS: [(f64, f64); 2] = [(1.0, 2.0), (0.8, 1.0)];

/// Uniform rod (2 kg, 1 m) released from rest at 10°.
pub fn single_pendulum() -> SyntheticScenario {
    let mut s = rods_scenario("single-pendulum", 6.0, &[(1.0, 2.0)]);
    s.marker_rate = 1000.0;
    s.torques = Some(joint_map(vec![TorqueDrive::default()]));
    s.initial = joint_map(vec![InitialState {
        angle: 10f64.to_radians(),
        rate: 0.0,
    }]);
    s
}

/// Unactuated double pendulum, 2 s at dt = 1e-4.
pub fn conservative_double_pendulum() -> SyntheticScenario {
    let mut s = rods_scenario("conservative-double-pendulum", 2.0, &DOUBLE_RODS);
    s.dt = 1e-4;
    s.torques = Some(joint_map(vec![
        TorqueDrive::default(),
        TorqueDrive::default(),
    ]));
    s.initial = joint_map(vec![
        InitialState {
            angle: 0.6,
            rate: 0.0,
        },
        InitialState {
            angle: -0.4,
            rate: 0.5,
        },
    ]);
    s
}

/// Double pendulum under smooth hinge torques, 2 s at dt = 1e-4, noise-free.
pub fn driven_double_pendulum() -> SyntheticScenario {
    let mut s = rods_scenario("driven-double-pendulum", 2.0, &DOUBLE_RODS);
    s.dt = 1e-4;
    s.torques = Some(joint_map(vec![
        TorqueDrive {
            profile: sine(6.0, 1.0, 0.0),
            stiffness: 0.0,
            damping: 1.0,
        },
        TorqueDrive {
            profile: sine(2.0, 0.8, 0.5),
            stiffness: 0.0,
            damping: 0.5,
        },
    ]));
    s.initial = joint_map(vec![
        InitialState {
            angle: 0.3,
            rate: 0.0,
        },
        InitialState {
            angle: -0.2,
            rate: 0.0,
        },
    ]);
    s
}

/// Hanging double rod held still under a vertical ground reaction equal to
/// body weight at the distal tip.
pub fn static_chain() -> SyntheticScenario {
    let mut s = rods_scenario("static-chain", 0.5, &DOUBLE_RODS);
    let body_mass = 10.0;
    if let Some(c) = s.chain.as_mut() {
        c.body_mass = body_mass;
    }
    s.angles = Some(joint_map(vec![
        Profile::constant(0.0),
        Profile::constant(0.0),
    ]));
    let tip = [0.0, 0.0, PIVOT_HEIGHT - 1.8];
    s.grf = Some(GrfScript {
        start: 0.0,
        end: s.duration,
        peak: body_mass * s.gravity,
        shape: GrfShape::Constant,
        forward_fraction: 0.0,
        cop_start: tip,
        cop_end: tip,
    });
    s
}

/// Single uniform rod (2 kg, 1 m) held horizontal.
pub fn horizontal_rod() -> SyntheticScenario {
    let mut s = rods_scenario("horizontal-rod", 0.5, &[(1.0, 2.0)]);
    s.angles = Some(joint_map(vec![Profile::constant(
        std::f64::consts::FRAC_PI_2,
    )]));
    s
}

/// Bent double rod loaded at its tip by a constant oblique force; run it on
/// a massless copy of the chain.
pub fn massless_chain() -> SyntheticScenario {
    let mut s = rods_scenario("massless-chain", 0.5, &DOUBLE_RODS);
    let (a, b) = (0.3, -0.5);
    s.angles = Some(joint_map(vec![Profile::constant(a), Profile::constant(b)]));
    let tip = [
        -DOUBLE_RODS[0].0 * a.sin() - DOUBLE_RODS[1].0 * (a + b).sin(),
        0.0,
        PIVOT_HEIGHT - DOUBLE_RODS[0].0 * a.cos() - DOUBLE_RODS[1].0 * (a + b).cos(),
    ];
    s.grf = Some(GrfScript {
        start: 0.0,
        end: s.duration,
        peak: 40.0,
        shape: GrfShape::Constant,
        forward_fraction: 0.25,
        cop_start: tip,
        cop_end: tip,
    });
    s
}

/// Double rod swinging through prescribed 1 Hz angle oscillations for 3 s;
/// a smooth target for noisy-marker runs.
pub fn smooth_swing() -> SyntheticScenario {
    let mut s = rods_scenario("smooth-swing", 3.0, &DOUBLE_RODS);
    s.angles = Some(joint_map(vec![sine(0.4, 1.0, 0.0), sine(0.3, 1.0, 1.0)]));
    s
}
