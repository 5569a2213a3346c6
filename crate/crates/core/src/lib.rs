//! Inverse dynamics for multi-segment limb chains.
//!
//! The crate turns motion-capture marker trajectories and force-plate
//! recordings into three-dimensional net joint moments, joint contact
//! forces, joint powers and phase-partitioned mechanical energy. A planar
//! forward-dynamics simulator in [`oracle`] produces ground-truth data sets
//! used to check the inverse pipeline end to end.
//!
//! Units are SI throughout (m, kg, s, N, N·m, W, J). The lab frame has
//! x pointing forward (direction of travel), y to the left and z up.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod energetics;
pub mod error;
pub mod io;
pub mod kinematics;
pub mod model;
pub mod oracle;
pub mod pipeline;

pub use dynamics::{
    detect_stance, inverse_dynamics, resample_grf, segment_spatial_states, GrfSeries,
    InverseDynamicsOptions, NetJointLoadSeries, PhaseEvents, SegmentSpatialState,
};
pub use energetics::{
    aggregate, energy_fractions, extrema, integrate_energy, joint_power, time_normalize,
    EnergySummary, ExtremaReport, JointPowerSeries, NormalizedSeries,
};
pub use error::{Error, ErrorKind, Result};
pub use kinematics::{
    decompose_rotation, differentiate, fit_rigid_transform, joint_states, low_pass_filter,
    relative_pose, JointStateSeries, MarkerFrameSeries, Pose, SegmentPoseSeries,
};
pub use model::{
    build_chain, inertial_from_body_mass, to_anatomical, AnatomicalConvention, ChainConfig,
    JointKind, JointSpec, LimbChain, SegmentSpec,
};

/// Standard gravitational acceleration, m/s².
pub const GRAVITY: f64 = 9.81;
