//! The built-in oracle suite.

use nalgebra::Vector3;

use super::roundtrip::roundtrip_check;
use super::simulate::{simulate, simulate_forward};
use super::trot::{synth_trot, TrotParameters};
use crate::dynamics::{detect_stance, PhaseEvents};
use crate::energetics::{
    energy_fractions, EnergySummary, EnergyTerms, JointEnergy, PhaseEnergy, PowerVariant,
};
use crate::error::{Error, Result};
use crate::model::{
    build_chain, to_anatomical, AnatomicalConvention, Coordinate, InertialProperties, JointKind,
};
use crate::pipeline::{reconstruct, AnalysisSettings};

/// Joint coordinate sign table, one line per generalized coordinate:
/// joint, coordinate number, anatomical symbol, sign.
pub const CONVENTION_FIXTURE: &str = "\
elbow    1  z      +
elbow    3  y      +
elbow    2  x      +
elbow    4  beta   -
elbow    5  alpha  +
elbow    6  gamma  -
carpus   7  z      -
carpus   8  y      -
carpus   9  x      -
carpus  10  beta   -
carpus  11  alpha  +
carpus  12  gamma  -
fetlock 13  z      -
fetlock 14  y      -
fetlock 15  x      -
fetlock 16  beta   -
fetlock 17  alpha  +
fetlock 18  gamma  -
pastern 19  z      -
pastern 20  y      -
pastern 21  x      -
pastern 22  beta   -
pastern 23  alpha  +
pastern 24  gamma  -
coffin  25  z      -
coffin  26  y      -
coffin  27  x      -
coffin  28  beta   -
coffin  29  alpha  +
coffin  30  gamma  -
";

pub const CHECK_NAMES: [&str; 10] = [
    "convention-table",
    "static-rod",
    "massless-chain",
    "pendulum-period",
    "energy-conservation",
    "roundtrip",
    "static-chain",
    "work-energy",
    "trot-shape",
    "table-fractions",
];

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    /// Runs only checks whose name contains this text.
    pub filter: Option<String>,
    /// Convention checked against [`CONVENTION_FIXTURE`].
    pub convention: AnatomicalConvention,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            filter: None,
            convention: AnatomicalConvention::full_limb(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Runs the selected checks in a fixed order. A filter that matches nothing
/// gives an empty list.
pub fn run_verification(options: &VerifyOptions) -> Vec<CheckResult> {
    CHECK_NAMES
        .iter()
        .filter(|n| options.filter.as_deref().is_none_or(|f| n.contains(f)))
        .map(|&name| {
            let outcome = match name {
                "convention-table" => convention_table(&options.convention),
                "static-rod" => static_rod(),
                "massless-chain" => massless_chain(),
                "pendulum-period" => pendulum_period(),
                "energy-conservation" => energy_conservation(),
                "roundtrip" => roundtrip(),
                "static-chain" => static_chain(),
                "work-energy" => work_energy(),
                "trot-shape" => trot_shape(),
                "table-fractions" => table_fractions(),
                _ => unreachable!(),
            };
            let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
            CheckResult {
                name: name.to_string(),
                passed,
                detail,
            }
        })
        .collect()
}

type Outcome = Result<(bool, String)>;

/// No filtering and a contact threshold just above zero, so noise-free
/// synthetic data pass through untouched.
pub(crate) fn exact_settings() -> AnalysisSettings {
    AnalysisSettings {
        cutoff_kin: None,
        cutoff_grf: None,
        contact_threshold: Some(1e-6),
        grid_points: 101,
    }
}

fn convention_table(convention: &AnatomicalConvention) -> Outcome {
    let mut bad = Vec::new();
    let mut rows = 0;
    for line in CONVENTION_FIXTURE.lines().filter(|l| !l.trim().is_empty()) {
        rows += 1;
        let f: Vec<&str> = line.split_whitespace().collect();
        let joint: JointKind = f[0].parse()?;
        let q: usize = f[1]
            .parse()
            .map_err(|_| Error::Config(format!("bad index in '{line}'")))?;
        let coordinate = match f[2] {
            "x" => Coordinate::X,
            "y" => Coordinate::Y,
            "z" => Coordinate::Z,
            "alpha" => Coordinate::Alpha,
            "beta" => Coordinate::Beta,
            _ => Coordinate::Gamma,
        };
        let sign = if f[3] == "+" { 1.0 } else { -1.0 };
        let mut unit = vec![0.0; convention.len()];
        let Some(slot) = unit.get_mut(q - 1) else {
            bad.push(format!("q{q} missing"));
            continue;
        };
        *slot = 1.0;
        let mapped = to_anatomical(&unit, convention)?[q - 1];
        if convention.label(q - 1) != Some((joint, coordinate)) || mapped != sign {
            bad.push(format!("q{q} ({joint} {coordinate})"));
        }
    }
    let passed = bad.is_empty() && rows == convention.len();
    let detail = if passed {
        format!("{rows} rows match")
    } else {
        format!("{} of {rows} rows differ: {}", bad.len(), bad.join(", "))
    };
    Ok((passed, detail))
}

fn static_rod() -> Outcome {
    let sim = simulate_forward(&super::horizontal_rod())?;
    let r = reconstruct(&sim.chain, &sim.bundle, &exact_settings())?;
    let elbow = &r.loads.joints[0];
    let mut worst: f64 = 0.0;
    for k in 0..elbow.force_lab.len() {
        worst = worst
            .max((elbow.force_lab[k] - Vector3::new(0.0, 0.0, 19.62)).norm())
            .max((elbow.moment_lab[k].norm() - 9.81).abs())
            .max(elbow.moment_lab[k].x.abs().max(elbow.moment_lab[k].z.abs()));
    }
    Ok((
        worst < 1e-9,
        format!("max deviation {worst:.2e} (force 19.62 N, moment 9.81 N·m)"),
    ))
}

fn massless_chain() -> Outcome {
    let scenario = super::massless_chain();
    let massive = build_chain(scenario.chain.as_ref().expect("built-in chain"))?;
    let chain = massive.with_inertia(&vec![
        InertialProperties::massless();
        massive.segments().len()
    ])?;
    let sim = simulate(&scenario, &chain)?;
    let r = reconstruct(&sim.chain, &sim.bundle, &exact_settings())?;
    let mut worst: f64 = 0.0;
    for k in 0..r.loads.times.len() {
        let (f, cop) = (sim.bundle.grf.force[0], sim.bundle.grf.cop[0]);
        let f_scale = f.norm();
        for j in &r.loads.joints {
            let moment = -(cop - j.center[k]).cross(&f);
            worst = worst
                .max((j.force_lab[k] + f).norm() / f_scale)
                .max((j.moment_lab[k] - moment).norm() / (f_scale * (cop - j.center[k]).norm()));
        }
    }
    Ok((worst < 1e-9, format!("max relative deviation {worst:.2e}")))
}

/// Linear-interpolated upward zero crossings of `x`.
fn upward_crossings(t: &[f64], x: &[f64]) -> Vec<f64> {
    (1..x.len())
        .filter(|&k| x[k - 1] < 0.0 && x[k] >= 0.0)
        .map(|k| t[k - 1] + (t[k] - t[k - 1]) * (-x[k - 1]) / (x[k] - x[k - 1]))
        .collect()
}

fn pendulum_period() -> Outcome {
    let scenario = super::single_pendulum();
    let sim = simulate_forward(&scenario)?;
    let seg = &sim.chain.segments()[0];
    let l = -seg.com_offset.z;
    let pivot_inertia = seg.inertia[(1, 1)] + seg.mass * l * l;
    let expected =
        std::f64::consts::TAU * (pivot_inertia / (seg.mass * scenario.gravity * l)).sqrt();
    let up = upward_crossings(&sim.truth.times, &sim.truth.angles[0]);
    if up.len() < 2 {
        return Ok((false, "fewer than two oscillations".into()));
    }
    let period = (up[up.len() - 1] - up[0]) / (up.len() - 1) as f64;
    let rel = (period - expected).abs() / expected;
    Ok((
        rel < 0.01,
        format!(
            "period {period:.4} s vs small-angle {expected:.4} s ({:.2}%)",
            100.0 * rel
        ),
    ))
}

fn energy_conservation() -> Outcome {
    let sim = simulate_forward(&super::conservative_double_pendulum())?;
    let e = sim.truth.energy();
    let scale = sim.truth.kinetic.iter().copied().fold(0.0, f64::max);
    let drift = e.iter().map(|v| (v - e[0]).abs()).fold(0.0, f64::max) / scale;
    Ok((
        drift < 1e-6,
        format!("energy drift {drift:.2e} of peak kinetic energy"),
    ))
}

fn roundtrip() -> Outcome {
    let sim = simulate_forward(&super::driven_double_pendulum())?;
    let r = roundtrip_check(&sim, &exact_settings())?;
    Ok((
        r.worst() < 1e-3,
        format!(
            "moment {:.2e}, force {:.2e}, power {:.2e}",
            r.max_moment_error(),
            r.max_force_error(),
            r.max_power_error()
        ),
    ))
}

fn static_chain() -> Outcome {
    let sim = simulate_forward(&super::static_chain())?;
    let r = roundtrip_check(&sim, &exact_settings())?;
    let worst = r.max_force_error().max(r.max_moment_error());
    Ok((
        worst < 1e-9,
        format!(
            "force {:.2e}, moment {:.2e}",
            r.max_force_error(),
            r.max_moment_error()
        ),
    ))
}

fn work_energy() -> Outcome {
    let runs = [
        simulate_forward(&super::driven_double_pendulum())?,
        simulate_forward(&super::conservative_double_pendulum())?,
        simulate_forward(&super::static_chain())?,
        synth_trot(&TrotParameters::default())?,
    ];
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for sim in &runs {
        let r = roundtrip_check(sim, &exact_settings())?;
        let res = r.work_energy.residual().max(r.truth_work_energy.residual());
        worst = worst.max(res);
        parts.push(format!("{} {res:.1e}", r.scenario));
    }
    Ok((worst < 1e-3, parts.join(", ")))
}

/// Stance and swing contact-force peaks per joint from a reconstruction.
pub(crate) fn contact_peaks(
    times: &[f64],
    force: &[Vec<Vector3<f64>>],
    phases: &PhaseEvents,
) -> Vec<(f64, f64)> {
    force
        .iter()
        .map(|f| {
            let (mut stance, mut swing): (f64, f64) = (0.0, 0.0);
            for (t, v) in times.iter().zip(f) {
                if *t >= phases.stance_start && *t <= phases.stance_end {
                    stance = stance.max(v.norm());
                } else {
                    swing = swing.max(v.norm());
                }
            }
            (stance, swing)
        })
        .collect()
}

fn trot_shape() -> Outcome {
    let params = TrotParameters::default();
    let sim = synth_trot(&params)?;
    let settings = AnalysisSettings::default();
    let threshold = settings.threshold(&sim.chain);
    let phases = detect_stance(&sim.bundle.grf, threshold)?;
    let stance_pct = 100.0 * phases.stance_fraction();
    let r = reconstruct(&sim.chain, &sim.bundle, &settings)?;
    let peak = r.grf.force.iter().map(|f| f.z).fold(f64::MIN, f64::max) / sim.chain.body_mass();
    let peak_err = (peak - params.peak_grf).abs() / params.peak_grf;
    let forces: Vec<Vec<Vector3<f64>>> = r.loads.joints.iter().map(|j| j.force.clone()).collect();
    let ratios: Vec<f64> = contact_peaks(&r.loads.times, &forces, &phases)
        .iter()
        .map(|(s, w)| s / w)
        .collect();
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let passed = (stance_pct - 43.5).abs() <= 1.5 && peak_err < 0.01 && min_ratio >= 5.0;
    Ok((
        passed,
        format!(
            "stance {stance_pct:.2}%, GRF peak {peak:.3} N/kg, min stance/swing contact ratio {min_ratio:.1}"
        ),
    ))
}

/// Per-joint stride energies of a reference trot data set (J/kg):
/// stance generated, swing generated, stance absorbed, swing absorbed.
pub(crate) const REFERENCE_ENERGY: [(JointKind, f64, f64, f64, f64); 5] = [
    (JointKind::Elbow, 1.3325, 0.1234, 0.4154, 0.5207),
    (JointKind::Carpus, 0.0698, 0.0974, 0.0351, 0.0071),
    (JointKind::Fetlock, 0.2266, 0.0171, 0.1664, 0.0021),
    (JointKind::Pastern, 0.0214, 0.0008, 0.0207, 0.0005),
    (JointKind::Coffin, 0.0414, 0.0010, 0.0425, 0.0007),
];

pub(crate) fn reference_summary() -> EnergySummary {
    EnergySummary {
        phases: PhaseEvents {
            stride_start: 0.0,
            stance_start: 0.0,
            stance_end: 0.43,
            stride_end: 1.0,
        },
        joints: REFERENCE_ENERGY
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
    }
}

fn table_fractions() -> Outcome {
    let summary = reference_summary();
    let tables = energy_fractions(&summary);
    let f = tables
        .iter()
        .find(|t| t.variant == PowerVariant::Combined)
        .ok_or_else(|| Error::Precondition("no combined fractions".into()))?;
    let elbow = f.joints[0].stance_generated.unwrap_or(f64::NAN);
    let gen = f.stance_of_generated.unwrap_or(f64::NAN);
    let abs = f.stance_of_absorbed.unwrap_or(f64::NAN);
    let net = summary.joints[0].combined.stance.net();
    let passed = (elbow - 79.0).abs() <= 1.0
        && (gen - 88.0).abs() <= 1.0
        && (abs - 56.0).abs() <= 1.0
        && (net - 0.9171).abs() <= 1e-4;
    Ok((
        passed,
        format!("elbow stance generated {elbow:.1}%, stance of generated {gen:.1}%, stance of absorbed {abs:.1}%, elbow stance net {net:.4} J/kg"),
    ))
}
