use super::normalize::{extrema, NormalizedSeries};
use crate::error::{Error, Result};
use crate::model::JointKind;

/// Mean and sample standard deviation across trials on a shared grid.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateSeries {
    pub percent: Vec<f64>,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub trials: usize,
    /// With a single trial the standard deviation is reported as zero.
    pub single_trial: bool,
}

/// Mean and sample (n − 1) standard deviation.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

pub fn aggregate(trials: &[NormalizedSeries]) -> Result<AggregateSeries> {
    let first = trials
        .first()
        .ok_or_else(|| Error::Precondition("no trials to aggregate".into()))?;
    for t in trials {
        if t.percent != first.percent {
            return Err(Error::Misaligned("trials are on different grids".into()));
        }
    }
    let mut mean = Vec::with_capacity(first.len());
    let mut sd = Vec::with_capacity(first.len());
    let mut column = Vec::with_capacity(trials.len());
    for i in 0..first.len() {
        column.clear();
        column.extend(trials.iter().map(|t| t.values[i]));
        let (m, s) = mean_sd(&column);
        mean.push(m);
        sd.push(s);
    }
    Ok(AggregateSeries {
        percent: first.percent.clone(),
        mean,
        sd,
        trials: trials.len(),
        single_trial: trials.len() == 1,
    })
}

/// Extrema of one quantity averaged over trials.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtremaRow {
    pub quantity: String,
    pub joint: Option<JointKind>,
    pub axis: String,
    pub max_mean: f64,
    pub max_sd: f64,
    pub max_at: f64,
    pub min_mean: f64,
    pub min_sd: f64,
    pub min_at: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtremaReport {
    /// Name of the window the series were normalized over ("stance", "swing").
    pub window: String,
    pub rows: Vec<ExtremaRow>,
}

impl ExtremaRow {
    /// Per-trial extrema reduced to mean and s.d.; the location is the mean
    /// location rounded to whole percent.
    pub fn from_trials(
        quantity: &str,
        joint: Option<JointKind>,
        axis: &str,
        trials: &[NormalizedSeries],
    ) -> Result<Self> {
        let per_trial = trials.iter().map(extrema).collect::<Result<Vec<_>>>()?;
        if per_trial.is_empty() {
            return Err(Error::Precondition("no trials for extrema".into()));
        }
        let col = |f: fn(&super::normalize::Extremum) -> f64| -> Vec<f64> {
            per_trial.iter().map(f).collect()
        };
        let (max_mean, max_sd) = mean_sd(&col(|e| e.max));
        let (min_mean, min_sd) = mean_sd(&col(|e| e.min));
        Ok(ExtremaRow {
            quantity: quantity.to_string(),
            joint,
            axis: axis.to_string(),
            max_mean,
            max_sd,
            max_at: mean_sd(&col(|e| e.max_at)).0.round(),
            min_mean,
            min_sd,
            min_at: mean_sd(&col(|e| e.min_at)).0.round(),
        })
    }
}
