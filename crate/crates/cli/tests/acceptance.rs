//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use nalgebra::{Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use forelimb_core::dynamics::{detect_stance, PhaseEvents};
use forelimb_core::energetics::{
    energy_fractions, extrema, time_normalize, EnergySummary, EnergyTerms, JointEnergy,
    PhaseEnergy, PowerVariant,
};
use forelimb_core::io::write_bundle;
use forelimb_core::kinematics::{
    compose_rotation, decompose_rotation, differentiate, fit_rigid_transform, Pose,
};
use forelimb_core::model::InertialProperties;
use forelimb_core::oracle::{
    conservative_double_pendulum, driven_double_pendulum, horizontal_rod, massless_chain,
    roundtrip_check, run_verification, simulate, simulate_forward, single_pendulum, smooth_swing,
    static_chain, synth_trot, TrotParameters, VerifyOptions,
};
use forelimb_core::pipeline::{analyze_trial, reconstruct, AnalysisSettings};
use forelimb_core::{build_chain, JointKind, Result};

type Outcome = Result<(bool, String)>;
type Criterion = (&'static str, fn() -> Outcome);

fn exact() -> AnalysisSettings {
    AnalysisSettings {
        cutoff_kin: None,
        cutoff_grf: None,
        contact_threshold: Some(1e-6),
        grid_points: 101,
    }
}

fn roundtrip() -> Outcome {
    let start = Instant::now();
    let sim = simulate_forward(&driven_double_pendulum())?;
    let r = roundtrip_check(&sim, &exact())?;
    let secs = start.elapsed().as_secs_f64();
    Ok((
        r.worst() < 1e-3 && secs < 10.0,
        format!(
            "moment {:.2e}, force {:.2e}, power {:.2e}, {secs:.2} s",
            r.max_moment_error(),
            r.max_force_error(),
            r.max_power_error()
        ),
    ))
}

fn static_equilibrium() -> Outcome {
    let sim = simulate_forward(&horizontal_rod())?;
    let r = reconstruct(&sim.chain, &sim.bundle, &exact())?;
    let elbow = &r.loads.joints[0];
    let mut rod: f64 = 0.0;
    for (f, m) in elbow.force_lab.iter().zip(&elbow.moment_lab) {
        rod = rod
            .max((f - Vector3::new(0.0, 0.0, 19.62)).amax())
            .max((m.norm() - 9.81).abs())
            .max(m.x.abs())
            .max(m.z.abs());
    }

    let scenario = massless_chain();
    let massive = build_chain(scenario.chain.as_ref().expect("scenario has a chain"))?;
    let chain = massive.with_inertia(&vec![
        InertialProperties::massless();
        massive.segments().len()
    ])?;
    let sim = simulate(&scenario, &chain)?;
    let r = reconstruct(&sim.chain, &sim.bundle, &exact())?;
    let (grf, cop) = (sim.bundle.grf.force[0], sim.bundle.grf.cop[0]);
    let mut chain_dev: f64 = 0.0;
    for j in &r.loads.joints {
        for k in 0..r.loads.times.len() {
            let arm = cop - j.center[k];
            chain_dev = chain_dev
                .max((j.force_lab[k] + grf).amax() / grf.norm())
                .max((j.moment_lab[k] + arm.cross(&grf)).amax() / (grf.norm() * arm.norm()));
        }
    }
    Ok((
        rod < 1e-9 && chain_dev < 1e-9,
        format!("horizontal rod {rod:.1e}, massless chain {chain_dev:.1e}"),
    ))
}

fn work_energy() -> Outcome {
    let runs = [
        simulate_forward(&driven_double_pendulum())?,
        simulate_forward(&conservative_double_pendulum())?,
        simulate_forward(&single_pendulum())?,
        simulate_forward(&static_chain())?,
        simulate_forward(&smooth_swing())?,
        simulate_forward(&horizontal_rod())?,
        synth_trot(&TrotParameters::default())?,
    ];
    let mut worst: f64 = 0.0;
    for sim in &runs {
        let r = roundtrip_check(sim, &exact())?;
        worst = worst
            .max(r.work_energy.residual())
            .max(r.truth_work_energy.residual());
    }
    Ok((
        worst < 1e-3,
        format!("{} runs, worst residual {worst:.1e}", runs.len()),
    ))
}

fn table_fractions() -> Outcome {
    let rows = [
        (JointKind::Elbow, 1.3325, 0.1234, 0.4154, 0.5207),
        (JointKind::Carpus, 0.0698, 0.0974, 0.0351, 0.0071),
        (JointKind::Fetlock, 0.2266, 0.0171, 0.1664, 0.0021),
        (JointKind::Pastern, 0.0214, 0.0008, 0.0207, 0.0005),
        (JointKind::Coffin, 0.0414, 0.0010, 0.0425, 0.0007),
    ];
    let summary = EnergySummary {
        phases: PhaseEvents {
            stride_start: 0.0,
            stance_start: 0.0,
            stance_end: 0.43,
            stride_end: 1.0,
        },
        joints: rows
            .iter()
            .map(|&(kind, sg, wg, sa, wa)| JointEnergy {
                kind,
                rotation_axes: [PhaseEnergy::default(); 3],
                translation_axes: [PhaseEnergy::default(); 3],
                rotations: PhaseEnergy::default(),
                translations: PhaseEnergy::default(),
                combined: PhaseEnergy {
                    stance: EnergyTerms {
                        generated: sg,
                        absorbed: sa,
                    },
                    swing: EnergyTerms {
                        generated: wg,
                        absorbed: wa,
                    },
                },
            })
            .collect(),
    };
    let tables = energy_fractions(&summary);
    let combined = tables
        .iter()
        .find(|t| t.variant == PowerVariant::Combined)
        .expect("combined table present");
    let elbow = combined.joints[0].stance_generated.unwrap_or(f64::NAN);
    let gen = combined.stance_of_generated.unwrap_or(f64::NAN);
    let abs = combined.stance_of_absorbed.unwrap_or(f64::NAN);
    let net = summary.joints[0].combined.stance.net();
    let ok = (elbow - 79.0).abs() <= 1.0
        && (gen - 88.0).abs() <= 1.0
        && (abs - 56.0).abs() <= 1.0
        && (net - 0.9171).abs() <= 1e-4;
    Ok((
        ok,
        format!("{elbow:.1}% / {gen:.1}% / {abs:.1}%, elbow stance net {net:.4} J/kg"),
    ))
}

/// Smooth stance-phase moment curve (N·m/kg) with a trough of -0.6863 at
/// 14 % and a crest of 0.8597 at 78 %.
fn elbow_moment_fixture(p: f64) -> f64 {
    let (lo, lo_at, hi, hi_at) = (-0.6863, 0.14, 0.8597, 0.78);
    let ease = |u: f64| 0.5 * (1.0 - (std::f64::consts::PI * u).cos());
    if p <= lo_at {
        lo * ease(p / lo_at)
    } else if p <= hi_at {
        lo + (hi - lo) * ease((p - lo_at) / (hi_at - lo_at))
    } else {
        hi * (1.0 - ease((p - hi_at) / (1.0 - hi_at)))
    }
}

fn extrema_fixture() -> Outcome {
    let (duration, n) = (0.3, 301);
    let times: Vec<f64> = (0..n)
        .map(|k| duration * k as f64 / (n - 1) as f64)
        .collect();
    let values: Vec<f64> = times
        .iter()
        .map(|t| elbow_moment_fixture(t / duration))
        .collect();
    let e = extrema(&time_normalize(&times, &values, 101)?)?;
    let ok = (e.max - 0.8597).abs() < 1e-12
        && (e.max_at - 78.0).abs() < 1e-9
        && (e.min + 0.6863).abs() < 1e-12
        && (e.min_at - 14.0).abs() < 1e-9;
    Ok((
        ok,
        format!(
            "max {:.4} at {:.0}%, min {:.4} at {:.0}%",
            e.max, e.max_at, e.min, e.min_at
        ),
    ))
}

fn trot_shape() -> Outcome {
    let params = TrotParameters::default();
    let sim = synth_trot(&params)?;
    let settings = AnalysisSettings::default();
    let phases = detect_stance(&sim.bundle.grf, settings.threshold(&sim.chain))?;
    let stance = 100.0 * phases.stance_fraction();
    let a = analyze_trial(&sim.chain, &sim.bundle, &settings)?;
    let (k, peak) = a
        .grf
        .force
        .iter()
        .map(|f| f.z / sim.chain.body_mass())
        .enumerate()
        .fold(
            (0, f64::MIN),
            |best, (k, v)| if v > best.1 { (k, v) } else { best },
        );
    let peak_at = (a.grf.times[k] - phases.stance_start) / phases.stance_duration();
    let mut min_ratio = f64::INFINITY;
    for j in &a.loads.joints {
        let (mut st, mut sw): (f64, f64) = (0.0, 0.0);
        for (t, f) in a.loads.times.iter().zip(&j.force) {
            if (phases.stance_start..=phases.stance_end).contains(t) {
                st = st.max(f.norm());
            } else {
                sw = sw.max(f.norm());
            }
        }
        min_ratio = min_ratio.min(st / sw);
    }
    let ok = (stance - 43.5).abs() <= 1.5
        && (peak - params.peak_grf).abs() / params.peak_grf < 0.01
        && (0.35..=0.65).contains(&peak_at)
        && min_ratio >= 5.0;
    Ok((
        ok,
        format!(
            "stance {stance:.2}%, peak {peak:.3} N/kg at {:.0}% of stance, contact ratio {min_ratio:.1}",
            100.0 * peak_at
        ),
    ))
}

fn kinematics_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let angles = |rng: &mut ChaCha8Rng| {
        Vector3::new(
            rng.random_range(-85f64..85.0).to_radians(),
            rng.random_range(-179f64..179.0).to_radians(),
            rng.random_range(-179f64..179.0).to_radians(),
        )
    };

    let template = [
        Vector3::new(0.05, 0.0, -0.02),
        Vector3::new(-0.03, 0.04, -0.15),
        Vector3::new(0.01, -0.05, -0.30),
        Vector3::new(0.02, 0.03, -0.22),
    ];
    let mut fit_residual: f64 = 0.0;
    for _ in 0..100 {
        let truth = Pose::from_parts(
            Vector3::new(rng.random(), rng.random(), rng.random()).into(),
            Rotation3::from_scaled_axis(angles(&mut rng)),
        );
        let observed: Vec<_> = template
            .iter()
            .map(|p| truth.transform_point(&(*p).into()).coords)
            .collect();
        let fit = fit_rigid_transform(&template, &observed, None)?;
        fit_residual = fit_residual.max(fit.residual);
    }

    let mut rotation_err: f64 = 0.0;
    for _ in 0..10_000 {
        let reference = Rotation3::from_scaled_axis(angles(&mut rng) * 0.5);
        let signs = Vector3::from_fn(|_, _| if rng.random::<bool>() { 1.0 } else { -1.0 });
        let q = angles(&mut rng);
        let r = compose_rotation(&q, &reference, &signs);
        let back = decompose_rotation(&r, &reference, &signs)?;
        let again = compose_rotation(&back, &reference, &signs);
        rotation_err = rotation_err
            .max((back - q).amax())
            .max((again.matrix() - r.matrix()).amax());
    }

    let table = run_verification(&VerifyOptions {
        filter: Some("convention-table".into()),
        ..VerifyOptions::default()
    });
    let table_ok = table.len() == 1 && table[0].passed;

    let rate = 120.0;
    let times: Vec<f64> = (0..241).map(|k| k as f64 / rate).collect();
    let tau = std::f64::consts::TAU;
    let signal: Vec<f64> = times.iter().map(|t| (tau * t).sin()).collect();
    let d = differentiate(&signal, 1.0 / rate)?;
    let diff_err = times
        .iter()
        .zip(&d)
        .map(|(t, v)| (v - tau * (tau * t).cos()).abs())
        .fold(0.0, f64::max);

    let ok = fit_residual < 1e-12 && rotation_err < 1e-10 && table_ok && diff_err < 1e-3;
    Ok((
        ok,
        format!(
            "fit residual {fit_residual:.1e} m, rotation round trip {rotation_err:.1e}, table {}, derivative {diff_err:.1e}",
            if table_ok { "30/30" } else { "mismatch" }
        ),
    ))
}

fn normalization_invariance() -> Outcome {
    let k = 7.0;
    let sim = synth_trot(&TrotParameters::default())?;
    let settings = AnalysisSettings::default();
    let base = analyze_trial(&sim.chain, &sim.bundle, &settings)?;
    let heavy_chain = sim.chain.scaled_mass(k)?;
    let mut heavy_bundle = sim.bundle.clone();
    for f in &mut heavy_bundle.grf.force {
        *f *= k;
    }
    if let Some(m) = heavy_bundle.grf.free_moment.as_mut() {
        m.iter_mut().for_each(|v| *v *= k);
    }
    let heavy = analyze_trial(&heavy_chain, &heavy_bundle, &settings)?;

    let mut worst: f64 = 0.0;
    for (a, b) in base.curves.iter().zip(&heavy.curves) {
        let scale = a
            .stride
            .values
            .iter()
            .fold(1e-12, |m, v| f64::max(m, v.abs()));
        for (x, y) in a.stride.values.iter().zip(&b.stride.values) {
            worst = worst.max((x - y).abs() / scale);
        }
    }
    for (a, b) in base.energy.joints.iter().zip(&heavy.energy.joints) {
        for (x, y) in [
            (a.combined, b.combined),
            (a.rotations, b.rotations),
            (a.translations, b.translations),
        ] {
            let scale = x.stride().generated.max(x.stride().absorbed).max(1e-12);
            worst = worst
                .max((x.stance.generated - y.stance.generated).abs() / scale)
                .max((x.stance.absorbed - y.stance.absorbed).abs() / scale)
                .max((x.swing.generated - y.swing.generated).abs() / scale)
                .max((x.swing.absorbed - y.swing.absorbed).abs() / scale);
        }
    }
    let same_count = base.curves.len() == heavy.curves.len();

    let n = 157;
    let times: Vec<f64> = (0..n)
        .map(|i| 0.2 + 0.7 * i as f64 / (n - 1) as f64)
        .collect();
    let values: Vec<f64> = times
        .iter()
        .map(|t| {
            1.0 + (std::f64::consts::TAU * 2.0 * t).sin()
                + 0.3 * (std::f64::consts::TAU * 5.0 * t).cos()
        })
        .collect();
    let norm = time_normalize(&times, &values, 101)?;
    let ends_exact = norm.values[0] == values[0] && norm.values[100] == values[n - 1];
    let trapezoid = |x: &[f64], y: &[f64]| -> f64 {
        x.windows(2)
            .zip(y.windows(2))
            .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
            .sum()
    };
    let mean_raw = trapezoid(&times, &values) / (times[n - 1] - times[0]);
    let mean_norm = trapezoid(&norm.percent, &norm.values) / 100.0;
    let integral_err = (mean_norm - mean_raw).abs() / mean_raw.abs();

    let ok = same_count && worst < 1e-9 && ends_exact && integral_err < 0.005;
    Ok((
        ok,
        format!(
            "k = 7 deviation {worst:.1e}, endpoints {}, integral {:.3}%",
            if ends_exact { "exact" } else { "moved" },
            100.0 * integral_err
        ),
    ))
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).expect("readable output") {
            let path = entry.expect("dir entry").path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path
                    .strip_prefix(dir)
                    .expect("inside output")
                    .display()
                    .to_string();
                files.insert(rel, std::fs::read(&path).expect("readable file"));
            }
        }
    }
    files
}

fn determinism() -> Outcome {
    let work = tempfile::tempdir().expect("temp dir");
    for (name, seed) in [("a", 1), ("b", 2)] {
        let params = TrotParameters {
            noise_sd: 5e-4,
            seed,
            ..TrotParameters::default()
        };
        let mut sim = synth_trot(&params)?;
        sim.bundle.id = format!("trial-{name}");
        write_bundle(&work.path().join(name), &sim.bundle)?;
    }
    let manifest = work.path().join("run.toml");
    std::fs::write(
        &manifest,
        "out = \"results\"\n\n[[trials]]\nbundle = \"a\"\n\n[[trials]]\nbundle = \"b\"\n",
    )
    .expect("write manifest");
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_forelimb"))
            .args(["analyze", "--manifest"])
            .arg(&manifest)
            .output()
            .expect("binary runs")
    };
    let first = run();
    if !first.status.success() {
        return Ok((
            false,
            String::from_utf8_lossy(&first.stderr).trim().to_string(),
        ));
    }
    let out = work.path().join("results");
    let before = snapshot(&out);
    let second = run();
    let after = snapshot(&out);
    let differing = before
        .iter()
        .filter(|(k, v)| after.get(*k) != Some(v))
        .count()
        + after.keys().filter(|k| !before.contains_key(*k)).count();
    Ok((
        second.status.success() && differing == 0 && !before.is_empty(),
        format!("{} files, {differing} differ", before.len()),
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("roundtrip", roundtrip),
        ("static-equilibrium", static_equilibrium),
        ("work-energy", work_energy),
        ("table-fractions", table_fractions),
        ("extrema-fixture", extrema_fixture),
        ("trot-shape", trot_shape),
        ("kinematics", kinematics_suite),
        ("normalization", normalization_invariance),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (ok, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
        println!(
            "{} {} {name}: {detail}",
            if ok { "PASS" } else { "FAIL" },
            i + 1
        );
        failed += usize::from(!ok);
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
