//! Sign mapping between the link model's generalized coordinates and the
//! anatomical description of each joint.
//!
//! The link model numbers six coordinates per joint, `q1..q30` for the full
//! five-joint limb. Each coordinate corresponds to one anatomical symbol
//! (`x, y, z` translations or `α, β, γ` rotations) with a sign of ±1. Because
//! the mapping keeps slot order and only multiplies by ±1, it is its own
//! inverse.

use std::fmt;

use nalgebra::Vector3;

use super::JointKind;
use crate::error::{Error, Result};

/// Anatomical coordinate symbols.
///
/// Translations are along the segment axes: x cranial/caudal, y medial/lateral,
/// z proximal/distal. Rotations are about the same axes: α adduction/abduction
/// (x), β flexion/extension (y), γ internal/external rotation (z).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Coordinate {
    X,
    Y,
    Z,
    Alpha,
    Beta,
    Gamma,
}

impl Coordinate {
    pub fn is_rotation(self) -> bool {
        matches!(
            self,
            Coordinate::Alpha | Coordinate::Beta | Coordinate::Gamma
        )
    }

    /// Segment axis index (0 = x, 1 = y, 2 = z).
    pub fn axis(self) -> usize {
        match self {
            Coordinate::X | Coordinate::Alpha => 0,
            Coordinate::Y | Coordinate::Beta => 1,
            Coordinate::Z | Coordinate::Gamma => 2,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Coordinate::X => "x",
            Coordinate::Y => "y",
            Coordinate::Z => "z",
            Coordinate::Alpha => "alpha",
            Coordinate::Beta => "beta",
            Coordinate::Gamma => "gamma",
        }
    }
}

impl fmt::Display for Coordinate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// One row of the joint convention table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConventionRow {
    pub joint: JointKind,
    pub motion: &'static str,
    pub coordinate: Coordinate,
    /// 1-based index in the five-joint numbering (`q1..q30`).
    pub q_index: usize,
    pub coordinate_sign: f64,
    pub torque_sign: f64,
    /// Listed for completeness. Power is a product of a load and a rate that
    /// both carry the coordinate sign, so it is never flipped.
    pub power_sign: f64,
}

macro_rules! row {
    ($joint:ident, $motion:literal, $coord:ident, $q:literal, $s:literal, $t:literal, $p:literal) => {
        ConventionRow {
            joint: JointKind::$joint,
            motion: $motion,
            coordinate: Coordinate::$coord,
            q_index: $q,
            coordinate_sign: $s,
            torque_sign: $t,
            power_sign: $p,
        }
    };
}

/// The full joint convention table, one row per generalized coordinate.
#[rustfmt::skip]
pub const CONVENTION_TABLE: [ConventionRow; 30] = [
    row!(Elbow,   "proximal/distal",     Z,      1,  1.0,  1.0,  1.0),
    row!(Elbow,   "medial/lateral",      Y,      3,  1.0,  1.0,  1.0),
    row!(Elbow,   "cranial/caudal",      X,      2,  1.0,  1.0,  1.0),
    row!(Elbow,   "flexion/extension",   Beta,   4, -1.0, -1.0, -1.0),
    row!(Elbow,   "adduction/abduction", Alpha,  5,  1.0,  1.0,  1.0),
    row!(Elbow,   "internal/external",   Gamma,  6, -1.0, -1.0, -1.0),
    row!(Carpus,  "proximal/distal",     Z,      7, -1.0, -1.0, -1.0),
    row!(Carpus,  "medial/lateral",      Y,      8, -1.0, -1.0, -1.0),
    row!(Carpus,  "cranial/caudal",      X,      9, -1.0, -1.0, -1.0),
    row!(Carpus,  "flexion/extension",   Beta,  10, -1.0, -1.0, -1.0),
    row!(Carpus,  "adduction/abduction", Alpha, 11,  1.0,  1.0,  1.0),
    row!(Carpus,  "internal/external",   Gamma, 12, -1.0, -1.0, -1.0),
    row!(Fetlock, "proximal/distal",     Z,     13, -1.0, -1.0, -1.0),
    row!(Fetlock, "medial/lateral",      Y,     14, -1.0, -1.0, -1.0),
    row!(Fetlock, "cranial/caudal",      X,     15, -1.0, -1.0, -1.0),
    row!(Fetlock, "flexion/extension",   Beta,  16, -1.0, -1.0, -1.0),
    row!(Fetlock, "adduction/abduction", Alpha, 17,  1.0,  1.0,  1.0),
    row!(Fetlock, "internal/external",   Gamma, 18, -1.0, -1.0, -1.0),
    row!(Pastern, "proximal/distal",     Z,     19, -1.0, -1.0, -1.0),
    row!(Pastern, "medial/lateral",      Y,     20, -1.0, -1.0, -1.0),
    row!(Pastern, "cranial/caudal",      X,     21, -1.0, -1.0, -1.0),
    row!(Pastern, "flexion/extension",   Beta,  22, -1.0, -1.0, -1.0),
    row!(Pastern, "adduction/abduction", Alpha, 23,  1.0,  1.0,  1.0),
    row!(Pastern, "internal/external",   Gamma, 24, -1.0, -1.0, -1.0),
    row!(Coffin,  "proximal/distal",     Z,     25, -1.0, -1.0, -1.0),
    row!(Coffin,  "medial/lateral",      Y,     26, -1.0, -1.0, -1.0),
    row!(Coffin,  "cranial/caudal",      X,     27, -1.0, -1.0, -1.0),
    row!(Coffin,  "flexion/extension",   Beta,  28, -1.0, -1.0, -1.0),
    row!(Coffin,  "adduction/abduction", Alpha, 29,  1.0,  1.0,  1.0),
    row!(Coffin,  "internal/external",   Gamma, 30, -1.0, -1.0, -1.0),
];

/// The six coordinate slots of one joint, in `q` order.
#[derive(Clone, Debug, PartialEq)]
pub struct JointConvention {
    pub joint: JointKind,
    pub slots: [(Coordinate, f64); 6],
}

impl JointConvention {
    /// Builds a joint's slots from the convention table.
    pub fn standard(joint: JointKind) -> Self {
        let mut rows: Vec<&ConventionRow> = CONVENTION_TABLE
            .iter()
            .filter(|r| r.joint == joint)
            .collect();
        rows.sort_by_key(|r| r.q_index);
        let mut slots = [(Coordinate::X, 1.0); 6];
        for (slot, r) in slots.iter_mut().zip(rows) {
            *slot = (r.coordinate, r.coordinate_sign);
        }
        JointConvention { joint, slots }
    }

    fn sign_of(&self, coordinate: Coordinate) -> f64 {
        self.slots
            .iter()
            .find(|(c, _)| *c == coordinate)
            .map(|(_, s)| *s)
            .unwrap_or(1.0)
    }

    /// Signs applied to rotation components about the segment x, y, z axes.
    pub fn rotation_signs(&self) -> Vector3<f64> {
        Vector3::new(
            self.sign_of(Coordinate::Alpha),
            self.sign_of(Coordinate::Beta),
            self.sign_of(Coordinate::Gamma),
        )
    }

    /// Signs applied to translation components along the segment x, y, z axes.
    pub fn translation_signs(&self) -> Vector3<f64> {
        Vector3::new(
            self.sign_of(Coordinate::X),
            self.sign_of(Coordinate::Y),
            self.sign_of(Coordinate::Z),
        )
    }
}

/// Convention for an ordered list of joints.
#[derive(Clone, Debug, PartialEq)]
pub struct AnatomicalConvention {
    joints: Vec<JointConvention>,
}

impl AnatomicalConvention {
    pub fn for_joints(joints: &[JointKind]) -> Self {
        AnatomicalConvention {
            joints: joints
                .iter()
                .map(|&j| JointConvention::standard(j))
                .collect(),
        }
    }

    /// All five joints in proximal to distal order.
    pub fn full_limb() -> Self {
        Self::for_joints(&JointKind::ALL)
    }

    pub fn joints(&self) -> &[JointConvention] {
        &self.joints
    }

    pub fn joint(&self, kind: JointKind) -> Option<&JointConvention> {
        self.joints.iter().find(|j| j.joint == kind)
    }

    pub fn len(&self) -> usize {
        self.joints.len() * 6
    }

    pub fn is_empty(&self) -> bool {
        self.joints.is_empty()
    }

    /// Joint and anatomical symbol held by slot `i` of a coordinate vector.
    pub fn label(&self, i: usize) -> Option<(JointKind, Coordinate)> {
        let j = self.joints.get(i / 6)?;
        Some((j.joint, j.slots[i % 6].0))
    }

    /// Returns a copy with one slot's sign flipped.
    pub fn with_flipped_sign(&self, joint: JointKind, coordinate: Coordinate) -> Self {
        let mut out = self.clone();
        if let Some(j) = out.joints.iter_mut().find(|j| j.joint == joint) {
            for slot in j.slots.iter_mut().filter(|(c, _)| *c == coordinate) {
                slot.1 = -slot.1;
            }
        }
        out
    }

    /// Lists the convention in the same shape as [`CONVENTION_TABLE`].
    ///
    /// `q_index` follows the five-joint numbering: a four-joint chain reports
    /// the coffin joint as `q25..q30`.
    pub fn rows(&self) -> Vec<ConventionRow> {
        let mut out = Vec::with_capacity(self.len());
        for j in &self.joints {
            let base = JointKind::ALL
                .iter()
                .position(|&k| k == j.joint)
                .unwrap_or(0)
                * 6;
            for (slot, &(coordinate, sign)) in j.slots.iter().enumerate() {
                let motion = CONVENTION_TABLE
                    .iter()
                    .find(|r| r.joint == j.joint && r.coordinate == coordinate)
                    .map(|r| r.motion)
                    .unwrap_or("");
                out.push(ConventionRow {
                    joint: j.joint,
                    motion,
                    coordinate,
                    q_index: base + slot + 1,
                    coordinate_sign: sign,
                    torque_sign: sign,
                    power_sign: sign,
                });
            }
        }
        out
    }

    fn apply(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.len() {
            return Err(Error::Misaligned(format!(
                "coordinate vector has {} entries, convention expects {}",
                values.len(),
                self.len()
            )));
        }
        Ok(values
            .iter()
            .enumerate()
            .map(|(i, v)| v * self.joints[i / 6].slots[i % 6].1)
            .collect())
    }
}

/// Maps model generalized coordinates to anatomical coordinates (same slot order).
pub fn to_anatomical(q: &[f64], convention: &AnatomicalConvention) -> Result<Vec<f64>> {
    convention.apply(q)
}

/// Inverse of [`to_anatomical`].
pub fn from_anatomical(anatomical: &[f64], convention: &AnatomicalConvention) -> Result<Vec<f64>> {
    convention.apply(anatomical)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn elbow_flexion_flips_sign() {
        let conv = AnatomicalConvention::for_joints(&[JointKind::Elbow]);
        let mut q = vec![0.0; 6];
        q[3] = 0.2;
        let a = to_anatomical(&q, &conv).unwrap();
        assert_eq!(conv.label(3), Some((JointKind::Elbow, Coordinate::Beta)));
        assert_eq!(a[3], -0.2);
    }

    #[test]
    fn zero_is_fixed_point() {
        let conv = AnatomicalConvention::full_limb();
        let a = to_anatomical(&[0.0; 30], &conv).unwrap();
        assert!(a.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn length_mismatch_rejected() {
        let conv = AnatomicalConvention::full_limb();
        assert!(matches!(
            to_anatomical(&[0.0; 24], &conv),
            Err(Error::Misaligned(_))
        ));
    }

    #[test]
    fn elbow_slot_order_follows_q_numbering() {
        let elbow = JointConvention::standard(JointKind::Elbow);
        let coords: Vec<_> = elbow.slots.iter().map(|s| s.0).collect();
        use Coordinate::*;
        assert_eq!(coords, vec![Z, X, Y, Beta, Alpha, Gamma]);
        let carpus = JointConvention::standard(JointKind::Carpus);
        let coords: Vec<_> = carpus.slots.iter().map(|s| s.0).collect();
        assert_eq!(coords, vec![Z, Y, X, Beta, Alpha, Gamma]);
    }

    #[test]
    fn axis_signs() {
        let elbow = JointConvention::standard(JointKind::Elbow);
        assert_eq!(elbow.rotation_signs(), Vector3::new(1.0, -1.0, -1.0));
        assert_eq!(elbow.translation_signs(), Vector3::new(1.0, 1.0, 1.0));
        let coffin = JointConvention::standard(JointKind::Coffin);
        assert_eq!(coffin.translation_signs(), Vector3::new(-1.0, -1.0, -1.0));
    }

    #[test]
    fn flipped_copy_differs_in_one_row() {
        let conv = AnatomicalConvention::full_limb();
        let flipped = conv.with_flipped_sign(JointKind::Fetlock, Coordinate::Alpha);
        let diff = conv
            .rows()
            .iter()
            .zip(flipped.rows())
            .filter(|(a, b)| a.coordinate_sign != b.coordinate_sign)
            .count();
        assert_eq!(diff, 1);
    }

    proptest! {
        #[test]
        fn mapping_is_an_involution(q in proptest::collection::vec(-10.0f64..10.0, 30)) {
            let conv = AnatomicalConvention::full_limb();
            let back = from_anatomical(&to_anatomical(&q, &conv).unwrap(), &conv).unwrap();
            prop_assert_eq!(back, q);
        }
    }
}
