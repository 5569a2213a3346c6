//! End-to-end analysis: markers and force plate in, per-trial results and a
//! group report out.

use std::f64::consts::PI;

use nalgebra::Vector3;

use crate::dynamics::{
    detect_stance, external_power, inverse_dynamics, resample_grf, segment_spatial_states,
    ExternalPower, GrfSeries, InverseDynamicsOptions, NetJointLoadSeries, PhaseEvents,
    SegmentSpatialState,
};
use crate::energetics::{
    aggregate, energy_fractions, integrate_energy, joint_power, mean_sd, time_normalize_window,
    AggregateSeries, EnergySummary, EnergyTerms, ExtremaReport, ExtremaRow, FractionTable,
    JointEnergy, JointPowerSeries, NormalizedSeries, PhaseEnergy, PowerVariant,
};
use crate::error::{Error, Result};
use crate::io::TrialBundle;
use crate::kinematics::{
    calibrate, estimate_poses, joint_states, CalibrationPoses, JointStateSeries,
};
use crate::model::{JointKind, LimbChain};

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisSettings {
    /// Low-pass cutoff for marker-derived signals (Hz); `None` disables it.
    pub cutoff_kin: Option<f64>,
    /// Low-pass cutoff for force-plate signals before resampling (Hz).
    pub cutoff_grf: Option<f64>,
    /// Vertical force marking contact (N); defaults to 2 % of body weight.
    pub contact_threshold: Option<f64>,
    pub grid_points: usize,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        AnalysisSettings {
            cutoff_kin: Some(10.0),
            cutoff_grf: Some(50.0),
            contact_threshold: None,
            grid_points: 101,
        }
    }
}

impl AnalysisSettings {
    pub fn threshold(&self, chain: &LimbChain) -> f64 {
        self.contact_threshold
            .unwrap_or_else(|| GrfSeries::default_threshold(chain.body_mass()))
    }
}

/// Reported curve families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quantity {
    Angle,
    Moment,
    Force,
    RotationalPower,
    TranslationalPower,
    Grf,
}

impl Quantity {
    pub const JOINT: [Quantity; 5] = [
        Quantity::Angle,
        Quantity::Moment,
        Quantity::Force,
        Quantity::RotationalPower,
        Quantity::TranslationalPower,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::Angle => "angle",
            Quantity::Moment => "moment",
            Quantity::Force => "force",
            Quantity::RotationalPower => "rotational_power",
            Quantity::TranslationalPower => "translational_power",
            Quantity::Grf => "grf",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Quantity::Angle => "deg",
            Quantity::Moment => "N*m/kg",
            Quantity::Force | Quantity::Grf => "N/kg",
            Quantity::RotationalPower | Quantity::TranslationalPower => "W/kg",
        }
    }

    /// Labels of the x, y and z components.
    pub fn axis_labels(self) -> [&'static str; 3] {
        match self {
            Quantity::Angle | Quantity::Moment | Quantity::RotationalPower => {
                ["add_abd", "flex_ext", "int_ext"]
            }
            Quantity::Force | Quantity::TranslationalPower => ["cran_caud", "med_lat", "prox_dist"],
            Quantity::Grf => ["forward", "transverse", "vertical"],
        }
    }
}

/// One scalar curve: a component of a quantity at a joint (or of the
/// ground reaction when `joint` is `None`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Channel {
    pub joint: Option<JointKind>,
    pub quantity: Quantity,
    pub axis: usize,
}

impl Channel {
    pub fn axis_label(&self) -> &'static str {
        self.quantity.axis_labels()[self.axis]
    }

    /// Column stem, e.g. `moment_flex_ext`.
    pub fn label(&self) -> String {
        format!("{}_{}", self.quantity.name(), self.axis_label())
    }
}

/// A channel normalized over stride, stance and swing.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialCurve {
    pub channel: Channel,
    pub stride: NormalizedSeries,
    pub stance: NormalizedSeries,
    pub swing: Option<NormalizedSeries>,
}

/// Everything computed for one trial.
#[derive(Clone, Debug)]
pub struct TrialAnalysis {
    pub id: String,
    pub phases: PhaseEvents,
    pub states: JointStateSeries,
    pub spatial: SegmentSpatialState,
    pub grf: GrfSeries,
    pub loads: NetJointLoadSeries,
    pub power: JointPowerSeries,
    pub external: ExternalPower,
    pub energy: EnergySummary,
    pub curves: Vec<TrialCurve>,
}

/// Swing interval used for swing-normalized curves: the longer of the two
/// pieces of the stride outside stance.
pub fn swing_window(p: &PhaseEvents) -> Option<(f64, f64)> {
    let after = p.stride_end - p.stance_end;
    let before = p.stance_start - p.stride_start;
    if after <= 0.0 && before <= 0.0 {
        None
    } else if after >= before {
        Some((p.stance_end, p.stride_end))
    } else {
        Some((p.stride_start, p.stance_start))
    }
}

fn channel_values(analysis: &TrialAnalysis, j: usize, quantity: Quantity) -> Vec<Vector3<f64>> {
    match quantity {
        Quantity::Angle => analysis.states.joints[j]
            .angles
            .iter()
            .map(|a| a * (180.0 / PI))
            .collect(),
        Quantity::Moment => analysis.loads.moment_per_kg(j),
        Quantity::Force => analysis.loads.force_per_kg(j),
        Quantity::RotationalPower => analysis.power.joints[j].rotational.clone(),
        Quantity::TranslationalPower => analysis.power.joints[j].translational.clone(),
        Quantity::Grf => analysis
            .grf
            .force
            .iter()
            .map(|f| f / analysis.loads.body_mass)
            .collect(),
    }
}

fn normalize_curves(analysis: &TrialAnalysis, grid_points: usize) -> Result<Vec<TrialCurve>> {
    let p = analysis.phases;
    let times = &analysis.loads.times;
    let swing = swing_window(&p);
    let boundary = 100.0 * (p.stance_end - p.stride_start) / p.stride_duration();
    let mut sources: Vec<(Option<JointKind>, usize, Quantity)> = Vec::new();
    for (j, joint) in analysis.loads.joints.iter().enumerate() {
        for q in Quantity::JOINT {
            sources.push((Some(joint.kind), j, q));
        }
    }
    sources.push((None, 0, Quantity::Grf));

    let mut curves = Vec::new();
    for (joint, j, quantity) in sources {
        let values = channel_values(analysis, j, quantity);
        for axis in 0..3 {
            let v: Vec<f64> = values.iter().map(|x| x[axis]).collect();
            let mut stride =
                time_normalize_window(times, &v, p.stride_start, p.stride_end, grid_points)?;
            stride.boundary_percent = Some(boundary);
            let stance =
                time_normalize_window(times, &v, p.stance_start, p.stance_end, grid_points)?;
            let swing = swing
                .map(|(a, b)| time_normalize_window(times, &v, a, b, grid_points))
                .transpose()?;
            curves.push(TrialCurve {
                channel: Channel {
                    joint,
                    quantity,
                    axis,
                },
                stride,
                stance,
                swing,
            });
        }
    }
    Ok(curves)
}

/// Inverse-dynamics results for one trial before phase partitioning.
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub states: JointStateSeries,
    pub spatial: SegmentSpatialState,
    /// Force plate resampled onto the marker times.
    pub grf: GrfSeries,
    pub loads: NetJointLoadSeries,
    pub power: JointPowerSeries,
    pub external: ExternalPower,
}

/// Markers → poses → joint states and segment kinematics → loads → power.
pub fn reconstruct(
    chain: &LimbChain,
    bundle: &TrialBundle,
    settings: &AnalysisSettings,
) -> Result<Reconstruction> {
    let threshold = settings.threshold(chain);
    let poses = estimate_poses(chain, &bundle.markers)?;
    let calibration = match &bundle.calibration {
        Some(s) => calibrate(chain, s)?,
        None => CalibrationPoses::first_frame(&poses),
    };
    let states = joint_states(chain, &poses, &calibration, settings.cutoff_kin)?;
    let spatial = segment_spatial_states(chain, &poses, settings.cutoff_kin)?;
    let grf = resample_grf(&bundle.grf, &poses.times, settings.cutoff_grf, threshold)?;
    let options = InverseDynamicsOptions {
        contact_threshold: threshold,
        ..InverseDynamicsOptions::for_chain(chain)
    };
    let loads = inverse_dynamics(chain, &spatial, &grf, &options)?;
    let power = joint_power(&loads, &states)?;
    let external = external_power(&loads, &spatial, &grf)?;
    Ok(Reconstruction {
        states,
        spatial,
        grf,
        loads,
        power,
        external,
    })
}

/// Runs the full pipeline for one trial and normalizes every reported
/// channel over stride, stance and swing.
pub fn analyze_trial(
    chain: &LimbChain,
    bundle: &TrialBundle,
    settings: &AnalysisSettings,
) -> Result<TrialAnalysis> {
    let threshold = settings.threshold(chain);
    bundle.validate(threshold)?;
    let r = reconstruct(chain, bundle, settings)?;
    let times = &r.loads.times;
    let phases =
        detect_stance(&bundle.grf, threshold)?.clamped_to(times[0], times[times.len() - 1])?;
    let energy = integrate_energy(&r.power, &phases)?;
    let mut analysis = TrialAnalysis {
        id: bundle.id.clone(),
        phases,
        states: r.states,
        spatial: r.spatial,
        grf: r.grf,
        loads: r.loads,
        power: r.power,
        external: r.external,
        energy,
        curves: Vec::new(),
    };
    analysis.curves = normalize_curves(&analysis, settings.grid_points)?;
    Ok(analysis)
}

/// Mean and s.d. of one energy cell across trials (J/kg). `absorbed` is
/// reported with a negative sign.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyCell {
    pub generated: (f64, f64),
    pub absorbed: (f64, f64),
    pub net: (f64, f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Stance,
    Swing,
    Stride,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::Stance, Phase::Swing, Phase::Stride];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Stance => "stance",
            Phase::Swing => "swing",
            Phase::Stride => "stride",
        }
    }

    fn pick(self, e: &PhaseEnergy) -> EnergyTerms {
        match self {
            Phase::Stance => e.stance,
            Phase::Swing => e.swing,
            Phase::Stride => e.stride(),
        }
    }
}

/// One row of the energy table; `joint` is `None` for the all-joint total.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyRow {
    pub variant: PowerVariant,
    pub phase: Phase,
    pub joint: Option<JointKind>,
    pub cell: EnergyCell,
}

impl EnergyRow {
    /// Rows for every variant, phase and joint plus totals, averaged over
    /// trials.
    pub fn from_summaries(summaries: &[EnergySummary]) -> Result<Vec<EnergyRow>> {
        let first = summaries
            .first()
            .ok_or_else(|| Error::Precondition("no energy summaries".into()))?;
        let kinds: Vec<JointKind> = first.joints.iter().map(|j| j.kind).collect();
        for s in summaries {
            if s.joints.iter().map(|j| j.kind).ne(kinds.iter().copied()) {
                return Err(Error::Misaligned("trials cover different joints".into()));
            }
        }
        let cell = |terms: Vec<EnergyTerms>| {
            let g: Vec<f64> = terms.iter().map(|t| t.generated).collect();
            let a: Vec<f64> = terms.iter().map(|t| -t.absorbed).collect();
            let n: Vec<f64> = terms.iter().map(|t| t.net()).collect();
            EnergyCell {
                generated: mean_sd(&g),
                absorbed: mean_sd(&a),
                net: mean_sd(&n),
            }
        };
        let mut rows = Vec::new();
        for v in PowerVariant::ALL {
            for phase in Phase::ALL {
                for (j, &kind) in kinds.iter().enumerate() {
                    let terms = summaries
                        .iter()
                        .map(|s| phase.pick(s.joints[j].variant(v)))
                        .collect();
                    rows.push(EnergyRow {
                        variant: v,
                        phase,
                        joint: Some(kind),
                        cell: cell(terms),
                    });
                }
                let totals = summaries.iter().map(|s| phase.pick(&s.total(v))).collect();
                rows.push(EnergyRow {
                    variant: v,
                    phase,
                    joint: None,
                    cell: cell(totals),
                });
            }
        }
        Ok(rows)
    }
}

/// Per-axis energies averaged across trials.
fn mean_summary(summaries: &[EnergySummary]) -> EnergySummary {
    let n = summaries.len() as f64;
    let avg_terms = |f: &dyn Fn(&EnergySummary) -> EnergyTerms| {
        let mut acc = EnergyTerms::default();
        for s in summaries {
            let t = f(s);
            acc.generated += t.generated / n;
            acc.absorbed += t.absorbed / n;
        }
        acc
    };
    let avg_phase = |f: &dyn Fn(&EnergySummary) -> PhaseEnergy| PhaseEnergy {
        stance: avg_terms(&|s| f(s).stance),
        swing: avg_terms(&|s| f(s).swing),
    };
    let joints = summaries[0]
        .joints
        .iter()
        .enumerate()
        .map(|(j, first)| JointEnergy {
            kind: first.kind,
            rotation_axes: std::array::from_fn(|a| avg_phase(&|s| s.joints[j].rotation_axes[a])),
            translation_axes: std::array::from_fn(|a| {
                avg_phase(&|s| s.joints[j].translation_axes[a])
            }),
            rotations: avg_phase(&|s| s.joints[j].rotations),
            translations: avg_phase(&|s| s.joints[j].translations),
            combined: avg_phase(&|s| s.joints[j].combined),
        })
        .collect();
    EnergySummary {
        phases: summaries[0].phases,
        joints,
    }
}

/// A channel averaged across trials.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateCurve {
    pub channel: Channel,
    pub stride: AggregateSeries,
    pub stance: AggregateSeries,
    pub swing: Option<AggregateSeries>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialPhases {
    pub id: String,
    pub phases: PhaseEvents,
}

/// Group-level results across trials.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupReport {
    pub joints: Vec<JointKind>,
    pub trials: Vec<TrialPhases>,
    /// Mean percent of stride at which stance ends.
    pub stance_end_percent: f64,
    pub curves: Vec<AggregateCurve>,
    pub extrema_stance: ExtremaReport,
    pub extrema_swing: ExtremaReport,
    pub energy: Vec<EnergyRow>,
    /// Shares computed from the trial-mean energies.
    pub fractions: Vec<FractionTable>,
}

/// Aggregates analysed trials into curves, extrema and energy tables.
pub fn group_report(trials: &[TrialAnalysis]) -> Result<GroupReport> {
    let first = trials
        .first()
        .ok_or_else(|| Error::Precondition("no trials to report".into()))?;
    let joints: Vec<JointKind> = first.loads.joints.iter().map(|j| j.kind).collect();
    for t in trials {
        if t.curves.len() != first.curves.len()
            || t.curves
                .iter()
                .zip(&first.curves)
                .any(|(a, b)| a.channel != b.channel)
        {
            return Err(Error::Misaligned(format!(
                "trial {} reports different channels from trial {}",
                t.id, first.id
            )));
        }
    }
    let mut curves = Vec::with_capacity(first.curves.len());
    let mut stance_rows = Vec::new();
    let mut swing_rows = Vec::new();
    for (c, curve) in first.curves.iter().enumerate() {
        let ch = curve.channel;
        let collect = |f: fn(&TrialCurve) -> Option<&NormalizedSeries>| -> Vec<NormalizedSeries> {
            trials
                .iter()
                .filter_map(|t| f(&t.curves[c]).cloned())
                .collect()
        };
        let stride = collect(|t| Some(&t.stride));
        let stance = collect(|t| Some(&t.stance));
        let swing = collect(|t| t.swing.as_ref());
        let name = ch.quantity.name();
        stance_rows.push(ExtremaRow::from_trials(
            name,
            ch.joint,
            ch.axis_label(),
            &stance,
        )?);
        if !swing.is_empty() {
            swing_rows.push(ExtremaRow::from_trials(
                name,
                ch.joint,
                ch.axis_label(),
                &swing,
            )?);
        }
        curves.push(AggregateCurve {
            channel: ch,
            stride: aggregate(&stride)?,
            stance: aggregate(&stance)?,
            swing: if swing.is_empty() {
                None
            } else {
                Some(aggregate(&swing)?)
            },
        });
    }
    let summaries: Vec<EnergySummary> = trials.iter().map(|t| t.energy.clone()).collect();
    let boundaries: Vec<f64> = trials
        .iter()
        .map(|t| 100.0 * (t.phases.stance_end - t.phases.stride_start) / t.phases.stride_duration())
        .collect();
    Ok(GroupReport {
        joints,
        trials: trials
            .iter()
            .map(|t| TrialPhases {
                id: t.id.clone(),
                phases: t.phases,
            })
            .collect(),
        stance_end_percent: mean_sd(&boundaries).0,
        curves,
        extrema_stance: ExtremaReport {
            window: "stance".into(),
            rows: stance_rows,
        },
        extrema_swing: ExtremaReport {
            window: "swing".into(),
            rows: swing_rows,
        },
        energy: EnergyRow::from_summaries(&summaries)?,
        fractions: energy_fractions(&mean_summary(&summaries)),
    })
}

/// Analyses every bundle and builds the group report. Fails on the first
/// trial that fails.
pub fn analyze(
    chain: &LimbChain,
    bundles: &[TrialBundle],
    settings: &AnalysisSettings,
) -> Result<(Vec<TrialAnalysis>, GroupReport)> {
    let trials = bundles
        .iter()
        .map(|b| analyze_trial(chain, b, settings))
        .collect::<Result<Vec<_>>>()?;
    let report = group_report(&trials)?;
    Ok((trials, report))
}
