use std::fmt;

use super::power::JointPowerSeries;
use crate::dynamics::PhaseEvents;
use crate::error::{Error, Result};
use crate::model::JointKind;

/// Positive and negative work (J/kg). Both are stored as non-negative
/// magnitudes.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyTerms {
    pub generated: f64,
    pub absorbed: f64,
}

impl EnergyTerms {
    pub fn net(&self) -> f64 {
        self.generated - self.absorbed
    }

    fn add(self, o: EnergyTerms) -> EnergyTerms {
        EnergyTerms {
            generated: self.generated + o.generated,
            absorbed: self.absorbed + o.absorbed,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhaseEnergy {
    pub stance: EnergyTerms,
    pub swing: EnergyTerms,
}

impl PhaseEnergy {
    pub fn stride(&self) -> EnergyTerms {
        self.stance.add(self.swing)
    }

    fn add(self, o: PhaseEnergy) -> PhaseEnergy {
        PhaseEnergy {
            stance: self.stance.add(o.stance),
            swing: self.swing.add(o.swing),
        }
    }
}

/// Which power components enter a partition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PowerVariant {
    Rotations,
    Translations,
    Combined,
}

impl PowerVariant {
    pub const ALL: [PowerVariant; 3] = [
        PowerVariant::Rotations,
        PowerVariant::Translations,
        PowerVariant::Combined,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PowerVariant::Rotations => "rotations",
            PowerVariant::Translations => "translations",
            PowerVariant::Combined => "combined",
        }
    }
}

impl fmt::Display for PowerVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Phase-partitioned energy of one joint.
///
/// The summed variants integrate the positive and negative parts of the
/// summed power, so they are not the sums of the per-axis partitions.
#[derive(Clone, Debug, PartialEq)]
pub struct JointEnergy {
    pub kind: JointKind,
    pub rotation_axes: [PhaseEnergy; 3],
    pub translation_axes: [PhaseEnergy; 3],
    pub rotations: PhaseEnergy,
    pub translations: PhaseEnergy,
    pub combined: PhaseEnergy,
}

impl JointEnergy {
    pub fn variant(&self, v: PowerVariant) -> &PhaseEnergy {
        match v {
            PowerVariant::Rotations => &self.rotations,
            PowerVariant::Translations => &self.translations,
            PowerVariant::Combined => &self.combined,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergySummary {
    pub phases: PhaseEvents,
    pub joints: Vec<JointEnergy>,
}

impl EnergySummary {
    pub fn joint(&self, kind: JointKind) -> Option<&JointEnergy> {
        self.joints.iter().find(|j| j.kind == kind)
    }

    /// Sum over joints of one variant.
    pub fn total(&self, v: PowerVariant) -> PhaseEnergy {
        self.joints
            .iter()
            .fold(PhaseEnergy::default(), |acc, j| acc.add(*j.variant(v)))
    }
}

/// Exact integrals of the positive and negative parts of the piecewise-linear
/// interpolant of `(times, values)` over `[a, b]`.
pub fn signed_work(times: &[f64], values: &[f64], a: f64, b: f64) -> EnergyTerms {
    let mut out = EnergyTerms::default();
    if b <= a {
        return out;
    }
    let mut add = |v0: f64, v1: f64, h: f64| {
        if v0 >= 0.0 && v1 >= 0.0 {
            out.generated += 0.5 * (v0 + v1) * h;
        } else if v0 <= 0.0 && v1 <= 0.0 {
            out.absorbed -= 0.5 * (v0 + v1) * h;
        } else {
            // Split at the zero crossing.
            let hz = h * v0 / (v0 - v1);
            let (p, q) = (0.5 * v0 * hz, 0.5 * v1 * (h - hz));
            for part in [p, q] {
                if part >= 0.0 {
                    out.generated += part;
                } else {
                    out.absorbed -= part;
                }
            }
        }
    };
    for k in 0..times.len().saturating_sub(1) {
        let (t0, t1) = (times[k], times[k + 1]);
        let lo = t0.max(a);
        let hi = t1.min(b);
        if hi <= lo {
            continue;
        }
        let at = |t: f64| values[k] + (values[k + 1] - values[k]) * (t - t0) / (t1 - t0);
        add(at(lo), at(hi), hi - lo);
    }
    out
}

fn partition(times: &[f64], values: &[f64], phases: &PhaseEvents) -> PhaseEnergy {
    let before = signed_work(times, values, phases.stride_start, phases.stance_start);
    let after = signed_work(times, values, phases.stance_end, phases.stride_end);
    PhaseEnergy {
        stance: signed_work(times, values, phases.stance_start, phases.stance_end),
        swing: before.add(after),
    }
}

/// Generated and absorbed energy per joint, per axis and per phase (J/kg).
pub fn integrate_energy(power: &JointPowerSeries, phases: &PhaseEvents) -> Result<EnergySummary> {
    let t = &power.times;
    let (Some(&first), Some(&last)) = (t.first(), t.last()) else {
        return Err(Error::Precondition("empty power series".into()));
    };
    let tol = 1e-9;
    let ordered = phases.stride_start <= phases.stance_start
        && phases.stance_start <= phases.stance_end
        && phases.stance_end <= phases.stride_end;
    if !ordered || phases.stride_start < first - tol || phases.stride_end > last + tol {
        return Err(Error::Precondition(format!(
            "phase events [{}, {}] s are out of order or outside the power series [{first}, {last}] s",
            phases.stride_start, phases.stride_end
        )));
    }
    let joints = power
        .joints
        .iter()
        .map(|j| {
            let axis = |series: &[nalgebra::Vector3<f64>], c: usize| {
                let v: Vec<f64> = series.iter().map(|p| p[c]).collect();
                partition(t, &v, phases)
            };
            JointEnergy {
                kind: j.kind,
                rotation_axes: [0, 1, 2].map(|c| axis(&j.rotational, c)),
                translation_axes: [0, 1, 2].map(|c| axis(&j.translational, c)),
                rotations: partition(t, &j.rotational_total(), phases),
                translations: partition(t, &j.translational_total(), phases),
                combined: partition(t, &j.total(), phases),
            }
        })
        .collect();
    Ok(EnergySummary {
        phases: *phases,
        joints,
    })
}

/// A percentage share that is undefined when its total is zero.
pub type Share = Option<f64>;

fn share(part: f64, total: f64) -> Share {
    (total != 0.0).then(|| 100.0 * part / total)
}

/// One joint's share of the all-joint total in each phase (%).
#[derive(Clone, Debug, PartialEq)]
pub struct JointShares {
    pub kind: JointKind,
    pub stance_generated: Share,
    pub stance_absorbed: Share,
    pub swing_generated: Share,
    pub swing_absorbed: Share,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FractionTable {
    pub variant: PowerVariant,
    pub joints: Vec<JointShares>,
    /// Share of the stride's generated energy that falls in stance (%).
    pub stance_of_generated: Share,
    pub swing_of_generated: Share,
    pub stance_of_absorbed: Share,
    pub swing_of_absorbed: Share,
}

/// Percentage partitions for the rotation, translation and combined
/// variants.
pub fn energy_fractions(summary: &EnergySummary) -> Vec<FractionTable> {
    PowerVariant::ALL
        .iter()
        .map(|&v| {
            let total = summary.total(v);
            let joints = summary
                .joints
                .iter()
                .map(|j| {
                    let e = j.variant(v);
                    JointShares {
                        kind: j.kind,
                        stance_generated: share(e.stance.generated, total.stance.generated),
                        stance_absorbed: share(e.stance.absorbed, total.stance.absorbed),
                        swing_generated: share(e.swing.generated, total.swing.generated),
                        swing_absorbed: share(e.swing.absorbed, total.swing.absorbed),
                    }
                })
                .collect();
            let stride = total.stride();
            FractionTable {
                variant: v,
                joints,
                stance_of_generated: share(total.stance.generated, stride.generated),
                swing_of_generated: share(total.swing.generated, stride.generated),
                stance_of_absorbed: share(total.stance.absorbed, stride.absorbed),
                swing_of_absorbed: share(total.swing.absorbed, stride.absorbed),
            }
        })
        .collect()
}
