//! Scores the inverse pipeline against simulated ground truth.

use std::ops::Range;

use nalgebra::Vector3;

use super::simulate::Simulation;
use crate::dynamics::SegmentSpatialState;
use crate::error::{Error, Result};
use crate::model::{JointKind, LimbChain};
use crate::pipeline::{reconstruct, AnalysisSettings, Reconstruction};

/// Scales below this are treated as zero and errors reported absolutely.
const TINY: f64 = 1e-12;

/// `max‖r − t‖ / max‖t‖`, or `max‖r − t‖` when the truth is identically zero.
pub fn relative_error(recovered: &[Vector3<f64>], truth: &[Vector3<f64>]) -> f64 {
    let diff = recovered
        .iter()
        .zip(truth)
        .map(|(r, t)| (r - t).norm())
        .fold(0.0, f64::max);
    let scale = truth.iter().map(|t| t.norm()).fold(0.0, f64::max);
    if scale > TINY {
        diff / scale
    } else {
        diff
    }
}

/// Maximum relative errors for one joint.
#[derive(Clone, Debug, PartialEq)]
pub struct JointErrors {
    pub kind: JointKind,
    pub moment: f64,
    pub force: f64,
    /// Worst per-axis rotational or translational power error, relative to
    /// the joint's peak total power.
    pub power: f64,
}

/// Integrated power against the change in mechanical energy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WorkEnergyBalance {
    /// Net work of the joints plus the external loads (J).
    pub work: f64,
    /// Kinetic plus potential energy at the end minus at the start (J).
    pub delta_energy: f64,
    /// Larger of `|ΔE|`, the gross work and the peak kinetic energy.
    pub scale: f64,
}

impl WorkEnergyBalance {
    pub fn residual(&self) -> f64 {
        let gap = (self.work - self.delta_energy).abs();
        if self.scale > TINY {
            gap / self.scale
        } else {
            gap
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundtripReport {
    pub scenario: String,
    pub joints: Vec<JointErrors>,
    /// Balance computed from the recovered loads and segment kinematics.
    pub work_energy: WorkEnergyBalance,
    /// Balance of the simulator's own truth, a check on the integration.
    pub truth_work_energy: WorkEnergyBalance,
}

impl RoundtripReport {
    pub fn max_moment_error(&self) -> f64 {
        self.joints.iter().map(|j| j.moment).fold(0.0, f64::max)
    }

    pub fn max_force_error(&self) -> f64 {
        self.joints.iter().map(|j| j.force).fold(0.0, f64::max)
    }

    pub fn max_power_error(&self) -> f64 {
        self.joints.iter().map(|j| j.power).fold(0.0, f64::max)
    }

    /// Largest of every load and power error.
    pub fn worst(&self) -> f64 {
        self.max_moment_error()
            .max(self.max_force_error())
            .max(self.max_power_error())
    }
}

/// Integral of uniformly sampled `values`: composite Simpson, closing an odd
/// interval count with the 3/8 rule.
fn integrate(times: &[f64], values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let h = (times[n - 1] - times[0]) / (n - 1) as f64;
    if n == 2 {
        return 0.5 * h * (values[0] + values[1]);
    }
    let intervals = n - 1;
    let simpson_end = if intervals.is_multiple_of(2) {
        n - 1
    } else {
        n - 4
    };
    let mut sum = 0.0;
    let mut i = 0;
    while i + 2 <= simpson_end {
        sum += h / 3.0 * (values[i] + 4.0 * values[i + 1] + values[i + 2]);
        i += 2;
    }
    if intervals % 2 == 1 {
        let v = &values[n - 4..];
        sum += 3.0 * h / 8.0 * (v[0] + 3.0 * v[1] + 3.0 * v[2] + v[3]);
    }
    sum
}

fn balance(
    times: &[f64],
    power: &[Vec<f64>],
    kinetic: &[f64],
    potential: &[f64],
) -> WorkEnergyBalance {
    let n = times.len();
    let net: Vec<f64> = (0..n).map(|k| power.iter().map(|p| p[k]).sum()).collect();
    let work = integrate(times, &net);
    let gross: f64 = power
        .iter()
        .map(|p| integrate(times, &p.iter().map(|v| v.abs()).collect::<Vec<_>>()))
        .sum();
    let delta_energy = kinetic[n - 1] + potential[n - 1] - kinetic[0] - potential[0];
    let peak_kinetic = kinetic.iter().copied().fold(0.0, f64::max);
    WorkEnergyBalance {
        work,
        delta_energy,
        scale: delta_energy.abs().max(gross).max(peak_kinetic),
    }
}

/// Kinetic and potential energy of the chain from recovered segment motion.
fn chain_energy(
    chain: &LimbChain,
    spatial: &SegmentSpatialState,
    gravity: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = spatial.len();
    let mut kinetic = vec![0.0; n];
    let mut potential = vec![0.0; n];
    for (spec, seg) in chain.segments().iter().zip(&spatial.segments) {
        for k in 0..n {
            let r = seg.rotation[k].matrix();
            let w = seg.angular_velocity[k];
            let inertia = r * spec.inertia * r.transpose();
            kinetic[k] +=
                0.5 * spec.mass * seg.com_velocity[k].norm_squared() + 0.5 * w.dot(&(inertia * w));
            potential[k] += spec.mass * gravity * seg.com[k].z;
        }
    }
    (kinetic, potential)
}

fn power_error(
    recovered: &Reconstruction,
    sim: &Simulation,
    j: usize,
    frames: Range<usize>,
) -> f64 {
    let mass = recovered.loads.body_mass;
    let rec = &recovered.power.joints[j];
    let truth = &sim.truth.joints[j];
    let mut diff: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for k in frames {
        let rot = rec.rotational[k] * mass;
        let trans = rec.translational[k] * mass;
        diff = diff
            .max((rot - truth.rotational_power[k]).amax())
            .max((trans - truth.translational_power[k]).amax());
        scale =
            scale.max((truth.rotational_power[k].sum() + truth.translational_power[k].sum()).abs());
    }
    if scale > TINY {
        diff / scale
    } else {
        diff
    }
}

/// Frames scored: all of them without filtering, otherwise those at least
/// one cutoff period away from either end of the record.
pub fn scored_frames(times: &[f64], settings: &AnalysisSettings) -> Range<usize> {
    let n = times.len();
    let margin = match settings.cutoff_kin {
        Some(fc) if fc > 0.0 => 1.0 / fc,
        _ => return 0..n,
    };
    let (t0, t1) = (times[0] + margin, times[n - 1] - margin);
    let lo = times.iter().position(|&t| t >= t0).unwrap_or(n);
    let hi = times.iter().rposition(|&t| t <= t1).map_or(0, |i| i + 1);
    lo..hi.max(lo)
}

/// Runs the inverse pipeline on the simulated bundle and compares loads,
/// powers and the energy balance with the simulator's truth over
/// [`scored_frames`].
pub fn roundtrip_check(sim: &Simulation, settings: &AnalysisSettings) -> Result<RoundtripReport> {
    let r = reconstruct(&sim.chain, &sim.bundle, settings)?;
    let w = scored_frames(&r.loads.times, settings);
    if w.len() < 2 {
        return Err(Error::Precondition(
            "record too short to score after trimming filter edges".into(),
        ));
    }
    let joints = sim
        .truth
        .joints
        .iter()
        .enumerate()
        .map(|(j, truth)| {
            let rec = &r.loads.joints[j];
            JointErrors {
                kind: truth.kind,
                moment: relative_error(&rec.moment_lab[w.clone()], &truth.moment_lab[w.clone()]),
                force: relative_error(&rec.force_lab[w.clone()], &truth.force_lab[w.clone()]),
                power: power_error(&r, sim, j, w.clone()),
            }
        })
        .collect();

    let mass = r.loads.body_mass;
    let mut channels: Vec<Vec<f64>> = r
        .power
        .joints
        .iter()
        .map(|p| p.total()[w.clone()].iter().map(|v| v * mass).collect())
        .collect();
    channels.push(r.external.ground[w.clone()].to_vec());
    channels.push(r.external.reference[w.clone()].to_vec());
    let (kinetic, potential) = chain_energy(&sim.chain, &r.spatial, crate::GRAVITY);
    let work_energy = balance(
        &r.loads.times[w.clone()],
        &channels,
        &kinetic[w.clone()],
        &potential[w.clone()],
    );

    let t = &sim.truth;
    let mut truth_channels: Vec<Vec<f64>> = t
        .joints
        .iter()
        .map(|j| {
            j.rotational_power
                .iter()
                .zip(&j.translational_power)
                .map(|(a, b)| a.sum() + b.sum())
                .collect()
        })
        .collect();
    truth_channels.push(t.ground_power.clone());
    truth_channels.push(t.reference_power.clone());
    let truth_work_energy = balance(&t.times, &truth_channels, &t.kinetic, &t.potential);

    Ok(RoundtripReport {
        scenario: sim.bundle.id.clone(),
        joints,
        work_energy,
        truth_work_energy,
    })
}
