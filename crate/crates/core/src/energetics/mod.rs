//! Joint power, phase-partitioned energy, time normalization and group
//! statistics.

mod energy;
mod normalize;
mod power;
mod stats;

pub use energy::{
    energy_fractions, integrate_energy, signed_work, EnergySummary, EnergyTerms, FractionTable,
    JointEnergy, JointShares, PhaseEnergy, PowerVariant, Share,
};
pub use normalize::{
    extrema, time_normalize, time_normalize_window, CubicSpline, Extremum, NormalizedSeries,
};
pub use power::{joint_power, JointPower, JointPowerSeries};
pub use stats::{aggregate, mean_sd, AggregateSeries, ExtremaReport, ExtremaRow};
