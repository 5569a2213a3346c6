use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::planar::{pitch_matrix, Base, BodyState, PlanarChain, PointLoad};
use super::scenario::{Drive, GrfScript, SyntheticScenario};
use crate::dynamics::GrfSeries;
use crate::error::{Error, Result};
use crate::io::{TrialBundle, TrialMetadata};
use crate::kinematics::{MarkerFrameSeries, MarkerTrack};
use crate::model::{JointKind, LimbChain, MarkerPoint};

const DIVERGENCE_ANGLE: f64 = 1e4;
const DIVERGENCE_RATE: f64 = 1e6;

/// True loads of one joint, lab frame.
#[derive(Clone, Debug, PartialEq)]
pub struct TruthJoint {
    pub kind: JointKind,
    pub center: Vec<Vector3<f64>>,
    /// Force (N) and moment about the center (N·m) exerted by the proximal
    /// segment on the distal one.
    pub force_lab: Vec<Vector3<f64>>,
    pub moment_lab: Vec<Vector3<f64>>,
    /// Per-axis joint power in distal-frame order (W). Hinges do no
    /// translational work.
    pub rotational_power: Vec<Vector3<f64>>,
    pub translational_power: Vec<Vector3<f64>>,
}

/// Ground truth at the marker sample times.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub times: Vec<f64>,
    /// Hinge angle, rate and acceleration, indexed `[joint][frame]`.
    pub angles: Vec<Vec<f64>>,
    pub rates: Vec<Vec<f64>>,
    pub accels: Vec<Vec<f64>>,
    pub joints: Vec<TruthJoint>,
    pub kinetic: Vec<f64>,
    pub potential: Vec<f64>,
    /// Power of the ground reaction on the distal segment (W).
    pub ground_power: Vec<f64>,
    /// Power the reference segment delivers through the first joint (W).
    pub reference_power: Vec<f64>,
    pub body_mass: f64,
}

impl GroundTruth {
    pub fn energy(&self) -> Vec<f64> {
        self.kinetic
            .iter()
            .zip(&self.potential)
            .map(|(k, p)| k + p)
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct Simulation {
    pub chain: LimbChain,
    pub bundle: TrialBundle,
    pub truth: GroundTruth,
}

/// Samples `0, 1/rate, …` up to `end` inclusive (with a small tolerance).
fn sample_times(end: f64, rate: f64) -> Vec<f64> {
    let n = (end * rate + 1e-9).floor() as usize + 1;
    (0..n).map(|k| k as f64 / rate).collect()
}

struct Motion {
    q: Vec<Vec<f64>>,
    qd: Vec<Vec<f64>>,
    qdd: Vec<Vec<f64>>,
}

fn external(script: Option<&GrfScript>, t: f64) -> Option<PointLoad> {
    script
        .and_then(|g| g.sample(t))
        .map(|(force, point)| PointLoad { force, point })
}

fn prescribed(profiles: &[super::Profile], times: &[f64]) -> Motion {
    let mut m = Motion {
        q: Vec::new(),
        qd: Vec::new(),
        qdd: Vec::new(),
    };
    for &t in times {
        let e: Vec<(f64, f64, f64)> = profiles.iter().map(|p| p.eval(t)).collect();
        m.q.push(e.iter().map(|v| v.0).collect());
        m.qd.push(e.iter().map(|v| v.1).collect());
        m.qdd.push(e.iter().map(|v| v.2).collect());
    }
    m
}

/// Quintic Hermite interpolation of position and velocity on `[0, h]`.
fn hermite(s: f64, h: f64, p: [f64; 2], v: [f64; 2], a: [f64; 2]) -> (f64, f64) {
    let (s2, s3, s4, s5) = (s * s, s * s * s, s.powi(4), s.powi(5));
    let b = [
        1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5,
        s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5,
        0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5,
        0.5 * s3 - s4 + 0.5 * s5,
        -4.0 * s3 + 7.0 * s4 - 3.0 * s5,
        10.0 * s3 - 15.0 * s4 + 6.0 * s5,
    ];
    let d = [
        -30.0 * s2 + 60.0 * s3 - 30.0 * s4,
        1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4,
        s - 4.5 * s2 + 6.0 * s3 - 2.5 * s4,
        1.5 * s2 - 4.0 * s3 + 2.5 * s4,
        -12.0 * s2 + 28.0 * s3 - 15.0 * s4,
        30.0 * s2 - 60.0 * s3 + 30.0 * s4,
    ];
    let terms = [p[0], h * v[0], h * h * a[0], h * h * a[1], h * v[1], p[1]];
    let pos = b.iter().zip(&terms).map(|(x, y)| x * y).sum();
    let vel = d.iter().zip(&terms).map(|(x, y)| x * y).sum::<f64>() / h;
    (pos, vel)
}

#[allow(clippy::too_many_arguments)]
fn integrate(
    planar: &PlanarChain,
    base: &Base,
    scenario: &SyntheticScenario,
    drives: &[super::TorqueDrive],
    initial: &[super::InitialState],
    times: &[f64],
) -> Result<Motion> {
    let n = planar.len();
    let g = scenario.gravity;
    let script = scenario.grf.as_ref();
    let accel = |t: f64, q: &[f64], qd: &[f64]| -> Result<Vec<f64>> {
        let tau: Vec<f64> = drives
            .iter()
            .enumerate()
            .map(|(i, d)| d.profile.eval(t).0 - d.stiffness * q[i] - d.damping * qd[i])
            .collect();
        planar.forward(base, t, q, qd, &tau, g, external(script, t).as_ref())
    };

    let t_end = *times.last().unwrap();
    let steps = ((t_end / scenario.dt) - 1e-9).ceil().max(1.0) as usize;
    let h = t_end / steps as f64;
    let mut q: Vec<f64> = initial.iter().map(|s| s.angle).collect();
    let mut qd: Vec<f64> = initial.iter().map(|s| s.rate).collect();
    let mut qdd = accel(0.0, &q, &qd)?;
    let mut hist_q = vec![q.clone()];
    let mut hist_qd = vec![qd.clone()];
    let mut hist_qdd = vec![qdd.clone()];
    let add = |x: &[f64], k: &[f64], c: f64| -> Vec<f64> {
        x.iter().zip(k).map(|(a, b)| a + c * b).collect()
    };
    for step in 0..steps {
        let t = step as f64 * h;
        let (k1q, k1v) = (qd.clone(), qdd.clone());
        let (q2, v2) = (add(&q, &k1q, h / 2.0), add(&qd, &k1v, h / 2.0));
        let k2v = accel(t + h / 2.0, &q2, &v2)?;
        let (q3, v3) = (add(&q, &v2, h / 2.0), add(&qd, &k2v, h / 2.0));
        let k3v = accel(t + h / 2.0, &q3, &v3)?;
        let (q4, v4) = (add(&q, &v3, h), add(&qd, &k3v, h));
        let k4v = accel(t + h, &q4, &v4)?;
        for i in 0..n {
            q[i] += h / 6.0 * (k1q[i] + 2.0 * v2[i] + 2.0 * v3[i] + v4[i]);
            qd[i] += h / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
        }
        let t_next = (step + 1) as f64 * h;
        let bad = q
            .iter()
            .any(|v| !v.is_finite() || v.abs() > DIVERGENCE_ANGLE)
            || qd
                .iter()
                .any(|v| !v.is_finite() || v.abs() > DIVERGENCE_RATE);
        if bad {
            return Err(Error::Divergence { time: t_next });
        }
        qdd = accel(t_next, &q, &qd)?;
        hist_q.push(q.clone());
        hist_qd.push(qd.clone());
        hist_qdd.push(qdd.clone());
    }

    let mut m = Motion {
        q: Vec::new(),
        qd: Vec::new(),
        qdd: Vec::new(),
    };
    for &t in times {
        let k = ((t / h).floor() as usize).min(steps - 1);
        let s = ((t - k as f64 * h) / h).clamp(0.0, 1.0);
        let mut fq = Vec::with_capacity(n);
        let mut fv = Vec::with_capacity(n);
        for i in 0..n {
            let (p, v) = hermite(
                s,
                h,
                [hist_q[k][i], hist_q[k + 1][i]],
                [hist_qd[k][i], hist_qd[k + 1][i]],
                [hist_qdd[k][i], hist_qdd[k + 1][i]],
            );
            fq.push(p);
            fv.push(v);
        }
        m.qdd.push(accel(t, &fq, &fv)?);
        m.q.push(fq);
        m.qd.push(fv);
    }
    Ok(m)
}

struct MarkerWriter<'a> {
    templates: Vec<(&'a str, &'a MarkerPoint)>,
    rng: ChaCha8Rng,
    noise: Option<Normal<f64>>,
}

impl MarkerWriter<'_> {
    fn frame(
        &mut self,
        poses: &[(nalgebra::Matrix3<f64>, Vector3<f64>)],
        owner: &[usize],
    ) -> Vec<Vector3<f64>> {
        self.templates
            .iter()
            .zip(owner)
            .map(|((_, m), &o)| {
                let (r, p) = &poses[o];
                let mut x = r * m.position + p;
                if let Some(n) = &self.noise {
                    for c in 0..3 {
                        x[c] += n.sample(&mut self.rng);
                    }
                }
                x
            })
            .collect()
    }
}

fn segment_poses(
    base: &Base,
    t: f64,
    states: &[BodyState],
) -> Vec<(nalgebra::Matrix3<f64>, Vector3<f64>)> {
    std::iter::once((pitch_matrix(base.pitch), base.origin_at(t)))
        .chain(states.iter().map(|s| (s.rotation, s.origin())))
        .collect()
}

/// Runs a scenario on an explicit chain (which may hold massless segments
/// when the angles are prescribed).
pub fn simulate(scenario: &SyntheticScenario, chain: &LimbChain) -> Result<Simulation> {
    let planar = PlanarChain::from_chain(chain)?;
    let (drive, initial) = scenario.resolve(chain)?;
    let base = Base {
        origin: Vector3::from(scenario.base.origin),
        velocity: Vector3::from(scenario.base.velocity),
        pitch: scenario.base.pitch,
    };
    let times = sample_times(scenario.duration, scenario.marker_rate);
    if times.len() < 3 {
        return Err(Error::Config(format!(
            "duration {} s gives {} marker frames; at least 3 are needed",
            scenario.duration,
            times.len()
        )));
    }
    let motion = match &drive {
        Drive::Angles(p) => prescribed(p, &times),
        Drive::Torques(d) => integrate(&planar, &base, scenario, d, &initial, &times)?,
    };

    let n = planar.len();
    let script = scenario.grf.as_ref();
    let mut truth = GroundTruth {
        times: times.clone(),
        angles: vec![Vec::new(); n],
        rates: vec![Vec::new(); n],
        accels: vec![Vec::new(); n],
        joints: chain
            .joints()
            .iter()
            .map(|j| TruthJoint {
                kind: j.kind,
                center: Vec::new(),
                force_lab: Vec::new(),
                moment_lab: Vec::new(),
                rotational_power: Vec::new(),
                translational_power: Vec::new(),
            })
            .collect(),
        kinetic: Vec::new(),
        potential: Vec::new(),
        ground_power: Vec::new(),
        reference_power: Vec::new(),
        body_mass: chain.body_mass(),
    };

    let mut templates = Vec::new();
    let mut owner = Vec::new();
    for m in &chain.reference().markers {
        templates.push((chain.reference().name.as_str(), m));
        owner.push(0);
    }
    for (i, s) in chain.segments().iter().enumerate() {
        for m in &s.markers {
            templates.push((s.name.as_str(), m));
            owner.push(i + 1);
        }
    }
    let noise = if scenario.noise.sd > 0.0 {
        Some(Normal::new(0.0, scenario.noise.sd).map_err(|e| Error::Config(e.to_string()))?)
    } else {
        None
    };
    let mut writer = MarkerWriter {
        templates,
        rng: ChaCha8Rng::seed_from_u64(scenario.noise.seed),
        noise,
    };
    let mut frames = Vec::with_capacity(times.len());

    for (k, &t) in times.iter().enumerate() {
        let states = planar.kinematics(&base, t, &motion.q[k], &motion.qd[k], &motion.qdd[k]);
        let ext = external(script, t);
        let loads = planar.joint_loads(&states, scenario.gravity, ext.as_ref());
        for i in 0..n {
            truth.angles[i].push(motion.q[k][i]);
            truth.rates[i].push(motion.qd[k][i]);
            truth.accels[i].push(motion.qdd[k][i]);
            let tj = &mut truth.joints[i];
            let (f, tau) = loads[i];
            tj.center.push(states[i].joint);
            tj.force_lab.push(f);
            tj.moment_lab.push(Vector3::new(0.0, tau, 0.0));
            tj.rotational_power
                .push(Vector3::new(0.0, tau * motion.qd[k][i], 0.0));
            tj.translational_power.push(Vector3::zeros());
        }
        let (ke, pe) = planar.energy(&states, scenario.gravity);
        truth.kinetic.push(ke);
        truth.potential.push(pe);
        truth.ground_power.push(ext.map_or(0.0, |e| {
            e.force.dot(&states[n - 1].point_velocity_lab(&e.point))
        }));
        truth.reference_power.push(loads[0].0.dot(&base.velocity));
        frames.push(writer.frame(&segment_poses(&base, t, &states), &owner));
    }
    let tracks = |frames: &[Vec<Vector3<f64>>], templates: &[(&str, &MarkerPoint)]| {
        templates
            .iter()
            .enumerate()
            .map(|(m, (seg, p))| MarkerTrack {
                segment: seg.to_string(),
                label: p.label.clone(),
                positions: frames.iter().map(|f| Some(f[m])).collect(),
            })
            .collect::<Vec<_>>()
    };
    let markers = MarkerFrameSeries::new(times.clone(), tracks(&frames, &writer.templates))?;

    let still = Base {
        velocity: Vector3::zeros(),
        ..base
    };
    let zeros = vec![0.0; n];
    let rest = planar.kinematics(&still, 0.0, &zeros, &zeros, &zeros);
    let static_times: Vec<f64> = (0..scenario.static_frames.max(1))
        .map(|k| k as f64 / scenario.marker_rate)
        .collect();
    let static_frames: Vec<Vec<Vector3<f64>>> = static_times
        .iter()
        .map(|_| writer.frame(&segment_poses(&still, 0.0, &rest), &owner))
        .collect();
    let calibration =
        MarkerFrameSeries::new(static_times, tracks(&static_frames, &writer.templates))?;

    let t_end = times[times.len() - 1];
    let n_grf = ((t_end * scenario.grf_rate) - 1e-9).ceil().max(1.0) as usize + 1;
    let grf_times: Vec<f64> = (0..n_grf).map(|k| k as f64 / scenario.grf_rate).collect();
    let mut force = Vec::with_capacity(n_grf);
    let mut cop = Vec::with_capacity(n_grf);
    let mut cop_valid = Vec::with_capacity(n_grf);
    for &t in &grf_times {
        match script.and_then(|g| g.sample(t)) {
            Some((f, p)) => {
                force.push(f);
                cop.push(p);
                cop_valid.push(f.z > 0.0);
            }
            None => {
                force.push(Vector3::zeros());
                cop.push(Vector3::zeros());
                cop_valid.push(false);
            }
        }
    }
    let grf = GrfSeries::new(grf_times, force, cop, cop_valid, None)?;

    let bundle = TrialBundle {
        id: scenario.name.clone(),
        markers,
        grf,
        calibration: Some(calibration),
        chain: if scenario.chain.is_some() {
            "inline".into()
        } else {
            "forelimb".into()
        },
        metadata: TrialMetadata {
            subject: "synthetic".into(),
            speed: Some(scenario.base.velocity[0]),
            notes: format!(
                "noise sd {} m, seed {}",
                scenario.noise.sd, scenario.noise.seed
            ),
        },
    };
    Ok(Simulation {
        chain: chain.clone(),
        bundle,
        truth,
    })
}

/// Builds the scenario's chain and runs it.
pub fn simulate_forward(scenario: &SyntheticScenario) -> Result<Simulation> {
    let chain = scenario.build_chain()?;
    simulate(scenario, &chain)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_reproduces_quintic() {
        let f =
            |t: f64| 1.0 + 2.0 * t - t * t + 0.5 * t.powi(3) - 0.2 * t.powi(4) + 0.1 * t.powi(5);
        let df = |t: f64| 2.0 - 2.0 * t + 1.5 * t * t - 0.8 * t.powi(3) + 0.5 * t.powi(4);
        let ddf = |t: f64| -2.0 + 3.0 * t - 2.4 * t * t + 2.0 * t.powi(3);
        let (a, b) = (0.3, 0.8);
        let h = b - a;
        for k in 0..=10 {
            let s = k as f64 / 10.0;
            let (p, v) = hermite(s, h, [f(a), f(b)], [df(a), df(b)], [ddf(a), ddf(b)]);
            assert!((p - f(a + s * h)).abs() < 1e-13);
            assert!((v - df(a + s * h)).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_times_include_end() {
        let t = sample_times(0.5, 120.0);
        assert_eq!(t.len(), 61);
        assert!((t[60] - 0.5).abs() < 1e-15);
    }
}
