//! Newton–Euler inverse dynamics from the hoof upward.

mod grf;
mod newton_euler;
mod spatial;

pub use grf::{detect_stance, resample_grf, GrfSeries, PhaseEvents};
pub use newton_euler::{
    external_power, inverse_dynamics, ExternalPower, InverseDynamicsOptions, JointLoads,
    NetJointLoadSeries,
};
pub use spatial::{segment_spatial_states, SegmentKinematics, SegmentSpatialState};
