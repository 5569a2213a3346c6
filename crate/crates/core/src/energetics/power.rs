use nalgebra::Vector3;

use crate::dynamics::NetJointLoadSeries;
use crate::error::{Error, Result};
use crate::kinematics::JointStateSeries;
use crate::model::JointKind;

/// Per-axis joint power of one joint (W/kg).
#[derive(Clone, Debug, PartialEq)]
pub struct JointPower {
    pub kind: JointKind,
    /// Moment times relative angular velocity, per axis.
    pub rotational: Vec<Vector3<f64>>,
    /// Joint force times relative joint-center velocity, per axis. Zero
    /// where translations are disabled.
    pub translational: Vec<Vector3<f64>>,
}

impl JointPower {
    pub fn rotational_total(&self) -> Vec<f64> {
        self.rotational.iter().map(|p| p.sum()).collect()
    }

    pub fn translational_total(&self) -> Vec<f64> {
        self.translational.iter().map(|p| p.sum()).collect()
    }

    pub fn total(&self) -> Vec<f64> {
        self.rotational
            .iter()
            .zip(&self.translational)
            .map(|(r, t)| r.sum() + t.sum())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointPowerSeries {
    pub times: Vec<f64>,
    pub joints: Vec<JointPower>,
}

impl JointPowerSeries {
    pub fn joint(&self, kind: JointKind) -> Option<&JointPower> {
        self.joints.iter().find(|j| j.kind == kind)
    }

    /// Same series with every power multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        JointPowerSeries {
            times: self.times.clone(),
            joints: self
                .joints
                .iter()
                .map(|j| JointPower {
                    kind: j.kind,
                    rotational: j.rotational.iter().map(|p| p * k).collect(),
                    translational: j.translational.iter().map(|p| p * k).collect(),
                })
                .collect(),
        }
    }
}

/// Mass-normalized joint power from anatomical loads and joint velocities.
///
/// Both inputs are in distal-frame components with the same sign
/// convention, so each product is invariant to the sign mapping.
pub fn joint_power(
    loads: &NetJointLoadSeries,
    states: &JointStateSeries,
) -> Result<JointPowerSeries> {
    if loads.times.len() != states.times.len() {
        return Err(Error::Misaligned(format!(
            "{} load samples vs {} kinematic samples",
            loads.times.len(),
            states.times.len()
        )));
    }
    if loads.joints.len() != states.joints.len() {
        return Err(Error::Misaligned(
            "loads and kinematics cover different joints".into(),
        ));
    }
    let per_kg = 1.0 / loads.body_mass;
    let mut joints = Vec::with_capacity(loads.joints.len());
    for (l, s) in loads.joints.iter().zip(&states.joints) {
        if l.kind != s.kind {
            return Err(Error::Misaligned(format!(
                "joint order differs: {} vs {}",
                l.kind, s.kind
            )));
        }
        let rotational = l
            .moment
            .iter()
            .zip(&s.angular_velocity)
            .map(|(m, w)| m.component_mul(w) * per_kg)
            .collect();
        let translational = if s.translations_enabled {
            l.force
                .iter()
                .zip(&s.linear_velocity)
                .map(|(f, v)| f.component_mul(v) * per_kg)
                .collect()
        } else {
            vec![Vector3::zeros(); l.force.len()]
        };
        joints.push(JointPower {
            kind: l.kind,
            rotational,
            translational,
        });
    }
    Ok(JointPowerSeries {
        times: loads.times.clone(),
        joints,
    })
}
