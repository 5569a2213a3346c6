use std::collections::BTreeMap;

use forelimb_core::oracle::*;
use forelimb_core::pipeline::{analyze_trial, AnalysisSettings};
use forelimb_core::{detect_stance, Error};

fn exact() -> AnalysisSettings {
    AnalysisSettings {
        cutoff_kin: None,
        cutoff_grf: None,
        contact_threshold: Some(1e-6),
        grid_points: 101,
    }
}

#[test]
fn released_chain_without_gravity_stays_put() {
    let mut s = conservative_double_pendulum();
    s.gravity = 0.0;
    s.dt = 1e-3;
    s.initial = BTreeMap::new();
    let sim = simulate_forward(&s).unwrap();
    for a in sim.truth.angles.iter().chain(&sim.truth.rates) {
        assert!(a.iter().all(|v| *v == 0.0));
    }
    assert!(sim.truth.kinetic.iter().all(|v| *v == 0.0));
}

#[test]
fn pendulum_period_matches_small_angle_formula() {
    let r = run_verification(&VerifyOptions {
        filter: Some("pendulum-period".into()),
        ..VerifyOptions::default()
    });
    assert!(r[0].passed, "{}", r[0].detail);
}

#[test]
fn unactuated_double_pendulum_conserves_energy() {
    let sim = simulate_forward(&conservative_double_pendulum()).unwrap();
    let e = sim.truth.energy();
    let peak = sim.truth.kinetic.iter().copied().fold(0.0, f64::max);
    assert!(peak > 1.0);
    let drift = e.iter().map(|v| (v - e[0]).abs()).fold(0.0, f64::max) / peak;
    assert!(drift < 1e-6, "drift {drift:e}");
}

#[test]
fn noise_free_roundtrip_recovers_loads() {
    let sim = simulate_forward(&driven_double_pendulum()).unwrap();
    let r = roundtrip_check(&sim, &exact()).unwrap();
    assert!(r.worst() < 1e-3, "{r:?}");
    assert!(r.work_energy.residual() < 1e-3, "{:?}", r.work_energy);
    assert!(
        r.truth_work_energy.residual() < 1e-6,
        "{:?}",
        r.truth_work_energy
    );
}

#[test]
fn static_chain_contact_forces_are_exact() {
    let sim = simulate_forward(&static_chain()).unwrap();
    let r = roundtrip_check(&sim, &exact()).unwrap();
    assert!(r.max_force_error() < 1e-9, "{r:?}");
    assert!(r.max_moment_error() < 1e-9, "{r:?}");
}

#[test]
fn filtered_noisy_markers_stay_within_ten_percent() {
    let mut s = smooth_swing();
    s.noise = NoiseModel { sd: 1e-3, seed: 7 };
    let sim = simulate_forward(&s).unwrap();
    let settings = AnalysisSettings {
        cutoff_kin: Some(6.0),
        ..AnalysisSettings::default()
    };
    let r = roundtrip_check(&sim, &settings).unwrap();
    assert!(r.max_moment_error() > 0.0);
    assert!(r.max_moment_error() < 0.1, "{r:?}");
}

#[test]
fn oversized_step_on_stiff_drive_diverges() {
    let mut s = driven_double_pendulum();
    s.dt = 0.05;
    if let Some(t) = s.torques.as_mut() {
        for d in t.values_mut() {
            d.stiffness = 1e5;
        }
    }
    match simulate_forward(&s) {
        Err(Error::Divergence { time }) => assert!(time > 0.0),
        other => panic!("expected divergence, got {:?}", other.map(|_| ())),
    }
}

#[test]
fn same_seed_same_markers() {
    let mut s = smooth_swing();
    s.duration = 0.5;
    s.noise = NoiseModel { sd: 1e-3, seed: 3 };
    let a = simulate_forward(&s).unwrap();
    let b = simulate_forward(&s).unwrap();
    assert_eq!(a.bundle.markers, b.bundle.markers);
    s.noise.seed = 4;
    let c = simulate_forward(&s).unwrap();
    assert_ne!(a.bundle.markers, c.bundle.markers);
}

#[test]
fn trot_defaults_match_stance_and_peak() {
    let params = TrotParameters::default();
    let sim = synth_trot(&params).unwrap();
    let settings = AnalysisSettings::default();
    let phases = detect_stance(&sim.bundle.grf, settings.threshold(&sim.chain)).unwrap();
    let pct = 100.0 * phases.stance_fraction();
    assert!((43.0..=44.0).contains(&pct), "stance {pct}%");

    let a = analyze_trial(&sim.chain, &sim.bundle, &settings).unwrap();
    let (k, peak) = a
        .grf
        .force
        .iter()
        .enumerate()
        .map(|(k, f)| (k, f.z / sim.chain.body_mass()))
        .fold((0, f64::MIN), |m, v| if v.1 > m.1 { v } else { m });
    assert!((peak - 9.44).abs() / 9.44 < 0.01, "peak {peak}");
    let at = (a.grf.times[k] - phases.stance_start) / phases.stance_duration();
    assert!((0.4..=0.6).contains(&at), "peak at {at} of stance");
}

#[test]
fn trot_contact_forces_concentrate_in_stance() {
    let sim = synth_trot(&TrotParameters::default()).unwrap();
    let a = analyze_trial(&sim.chain, &sim.bundle, &AnalysisSettings::default()).unwrap();
    for j in &a.loads.joints {
        let (mut stance, mut swing): (f64, f64) = (0.0, 0.0);
        for (t, f) in a.loads.times.iter().zip(&j.force) {
            if *t <= a.phases.stance_end {
                stance = stance.max(f.norm());
            } else {
                swing = swing.max(f.norm());
            }
        }
        assert!(stance >= 5.0 * swing, "{}: {stance} vs {swing}", j.kind);
    }
}

#[test]
fn still_limb_does_no_swing_work() {
    let params = TrotParameters {
        amplitude: 0.0,
        ..TrotParameters::default()
    };
    let sim = synth_trot(&params).unwrap();
    let a = analyze_trial(&sim.chain, &sim.bundle, &AnalysisSettings::default()).unwrap();
    for j in &a.power.joints {
        for (t, (r, tr)) in a
            .power
            .times
            .iter()
            .zip(j.rotational.iter().zip(&j.translational))
        {
            if *t > a.phases.stance_end {
                assert!(r.amax() < 1e-9 && tr.amax() < 1e-9, "{} at {t}", j.kind);
            }
        }
    }
    for j in &a.energy.joints {
        let swing = j.combined.swing;
        assert!(swing.generated < 1e-9 && swing.absorbed < 1e-9);
    }
}

#[test]
fn scenario_file_round_trips() {
    let s = driven_double_pendulum();
    let back = SyntheticScenario::from_toml_str(&s.to_toml_string()).unwrap();
    assert_eq!(s, back);
}
