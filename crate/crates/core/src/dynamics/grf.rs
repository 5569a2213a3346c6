use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::kinematics::{low_pass_filter, uniform_rate};

/// Ground reaction force samples in the lab frame.
#[derive(Clone, Debug, PartialEq)]
pub struct GrfSeries {
    pub times: Vec<f64>,
    pub sample_rate: f64,
    /// Force applied by the ground to the limb (N).
    pub force: Vec<Vector3<f64>>,
    /// Center of pressure (m); meaningful only where `cop_valid`.
    pub cop: Vec<Vector3<f64>>,
    pub cop_valid: Vec<bool>,
    /// Vertical free moment (N·m), when recorded.
    pub free_moment: Option<Vec<f64>>,
    /// Samples whose negative vertical force was clamped to zero.
    pub clamped: Vec<bool>,
}

impl GrfSeries {
    /// Builds a series, checking lengths and uniform sampling. Negative
    /// vertical forces are clamped to zero and flagged.
    pub fn new(
        times: Vec<f64>,
        mut force: Vec<Vector3<f64>>,
        cop: Vec<Vector3<f64>>,
        cop_valid: Vec<bool>,
        free_moment: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = times.len();
        if force.len() != n || cop.len() != n || cop_valid.len() != n {
            return Err(Error::Misaligned(format!(
                "force plate columns have unequal lengths ({n} time stamps)"
            )));
        }
        if free_moment.as_ref().is_some_and(|m| m.len() != n) {
            return Err(Error::Misaligned(
                "free moment column length differs".into(),
            ));
        }
        let sample_rate = uniform_rate(&times)?;
        let mut clamped = vec![false; n];
        for (f, c) in force.iter_mut().zip(clamped.iter_mut()) {
            if f.z < 0.0 {
                f.z = 0.0;
                *c = true;
            }
        }
        Ok(GrfSeries {
            times,
            sample_rate,
            force,
            cop,
            cop_valid,
            free_moment,
            clamped,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Vertical force above which the hoof counts as loaded: 2 % of body
    /// weight.
    pub fn default_threshold(body_mass: f64) -> f64 {
        0.02 * body_mass * crate::GRAVITY
    }
}

/// Stance and stride timing from the vertical force.
///
/// The stride spans the whole trial window; stance is the single contiguous
/// interval with vertical force above the threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseEvents {
    pub stride_start: f64,
    pub stance_start: f64,
    pub stance_end: f64,
    pub stride_end: f64,
}

impl PhaseEvents {
    pub fn stride_duration(&self) -> f64 {
        self.stride_end - self.stride_start
    }

    pub fn stance_duration(&self) -> f64 {
        self.stance_end - self.stance_start
    }

    /// Stance duration as a fraction of the stride.
    pub fn stance_fraction(&self) -> f64 {
        self.stance_duration() / self.stride_duration()
    }

    /// Same events restricted to `[start, end]`.
    pub fn clamped_to(&self, start: f64, end: f64) -> Result<Self> {
        let c = |t: f64| t.clamp(start, end);
        let out = PhaseEvents {
            stride_start: c(self.stride_start),
            stance_start: c(self.stance_start),
            stance_end: c(self.stance_end),
            stride_end: c(self.stride_end),
        };
        if !(out.stride_end > out.stride_start) {
            return Err(Error::Misaligned(
                "force and marker recordings do not overlap".into(),
            ));
        }
        Ok(out)
    }
}

/// Finds the single stance interval. Crossing times are linearly
/// interpolated between samples.
pub fn detect_stance(grf: &GrfSeries, threshold: f64) -> Result<PhaseEvents> {
    let n = grf.len();
    if n < 2 {
        return Err(Error::Precondition("force series is too short".into()));
    }
    let fz: Vec<f64> = grf.force.iter().map(|f| f.z).collect();
    let above: Vec<bool> = fz.iter().map(|&f| f > threshold).collect();
    let mut runs = Vec::new();
    let mut k = 0;
    while k < n {
        if above[k] {
            let start = k;
            while k < n && above[k] {
                k += 1;
            }
            runs.push((start, k - 1));
        } else {
            k += 1;
        }
    }
    let (first, last) = match runs.as_slice() {
        [] => return Err(Error::NoContact { threshold }),
        [one] => *one,
        _ => return Err(Error::MultipleContacts { count: runs.len() }),
    };
    let t = &grf.times;
    let crossing = |i: usize, j: usize| {
        let s = (threshold - fz[i]) / (fz[j] - fz[i]);
        t[i] + s * (t[j] - t[i])
    };
    let stance_start = if first == 0 {
        t[0]
    } else {
        crossing(first - 1, first)
    };
    let stance_end = if last == n - 1 {
        t[n - 1]
    } else {
        crossing(last, last + 1)
    };
    Ok(PhaseEvents {
        stride_start: t[0],
        stance_start,
        stance_end,
        stride_end: t[n - 1],
    })
}

/// Filters the force components and resamples everything onto `times` by
/// linear interpolation.
///
/// The center of pressure is carried only where the resampled vertical
/// force exceeds `threshold`; it is taken from the bracketing samples that
/// have a valid value, or from the nearest valid sample within a few
/// samples.
pub fn resample_grf(
    grf: &GrfSeries,
    times: &[f64],
    cutoff: Option<f64>,
    threshold: f64,
) -> Result<GrfSeries> {
    let n = grf.len();
    if n < 2 {
        return Err(Error::Precondition("force series is too short".into()));
    }
    let tol = 1e-9;
    if let (Some(&a), Some(&b)) = (times.first(), times.last()) {
        if a < grf.times[0] - tol || b > grf.times[n - 1] + tol {
            return Err(Error::Misaligned(format!(
                "target times [{a}, {b}] s fall outside the force recording [{}, {}] s",
                grf.times[0],
                grf.times[n - 1]
            )));
        }
    }
    let mut comps: [Vec<f64>; 3] = Default::default();
    for (c, out) in comps.iter_mut().enumerate() {
        let raw: Vec<f64> = grf.force.iter().map(|f| f[c]).collect();
        *out = low_pass_filter(&raw, grf.sample_rate, cutoff)?;
    }
    let free = grf
        .free_moment
        .as_ref()
        .map(|m| low_pass_filter(m, grf.sample_rate, cutoff))
        .transpose()?;

    let dt = 1.0 / grf.sample_rate;
    let locate = |t: f64| -> (usize, f64) {
        let x = ((t - grf.times[0]) / dt).max(0.0);
        let i = (x.floor() as usize).min(n - 2);
        (i, (x - i as f64).clamp(0.0, 1.0))
    };
    let lerp = |v: &[f64], i: usize, s: f64| v[i] + s * (v[i + 1] - v[i]);

    let mut force = Vec::with_capacity(times.len());
    let mut cop = Vec::with_capacity(times.len());
    let mut cop_valid = Vec::with_capacity(times.len());
    let mut free_moment = free.as_ref().map(|_| Vec::with_capacity(times.len()));
    let mut clamped = Vec::with_capacity(times.len());
    for &t in times {
        let (i, s) = locate(t);
        let f = Vector3::new(
            lerp(&comps[0], i, s),
            lerp(&comps[1], i, s),
            lerp(&comps[2], i, s).max(0.0),
        );
        force.push(f);
        clamped.push(grf.clamped[i] || grf.clamped[i + 1]);
        if let (Some(out), Some(m)) = (free_moment.as_mut(), free.as_ref()) {
            out.push(lerp(m, i, s));
        }
        let (c, valid) = if f.z > threshold {
            match (grf.cop_valid[i], grf.cop_valid[i + 1]) {
                (true, true) => (grf.cop[i] + (grf.cop[i + 1] - grf.cop[i]) * s, true),
                (true, false) => (grf.cop[i], true),
                (false, true) => (grf.cop[i + 1], true),
                (false, false) => {
                    nearest_valid_cop(grf, i, 5).map_or((Vector3::zeros(), false), |c| (c, true))
                }
            }
        } else {
            (Vector3::zeros(), false)
        };
        cop.push(c);
        cop_valid.push(valid);
    }
    let sample_rate = if times.len() >= 2 {
        uniform_rate(times)?
    } else {
        grf.sample_rate
    };
    Ok(GrfSeries {
        times: times.to_vec(),
        sample_rate,
        force,
        cop,
        cop_valid,
        free_moment,
        clamped,
    })
}

fn nearest_valid_cop(grf: &GrfSeries, i: usize, reach: usize) -> Option<Vector3<f64>> {
    (1..=reach).find_map(|d| {
        let lo = i.checked_sub(d).filter(|&k| grf.cop_valid[k]);
        let hi = Some(i + 1 + d).filter(|&k| k < grf.len() && grf.cop_valid[k]);
        lo.or(hi).map(|k| grf.cop[k])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn half_sine(n: usize, rate: f64, on: f64, off: f64, peak: f64) -> GrfSeries {
        let times: Vec<f64> = (0..n).map(|k| k as f64 / rate).collect();
        let force = times
            .iter()
            .map(|&t| {
                let fz = if t >= on && t < off {
                    peak * (PI * (t - on) / (off - on)).sin()
                } else {
                    0.0
                };
                Vector3::new(0.0, 0.0, fz)
            })
            .collect::<Vec<_>>();
        let valid = force.iter().map(|f| f.z > 0.0).collect();
        GrfSeries::new(times, force, vec![Vector3::zeros(); n], valid, None).unwrap()
    }

    #[test]
    fn stance_fraction_of_half_sine() {
        let grf = half_sine(701, 1000.0, 0.1, 0.4, 4000.0);
        let ev = detect_stance(&grf, 20.0).unwrap();
        assert!((ev.stance_fraction() - 0.43).abs() < 0.01);
        assert!(ev.stance_start > 0.1 && ev.stance_start < 0.101);
        assert_eq!(ev.stride_end, 0.7);
    }

    #[test]
    fn no_contact() {
        let grf = half_sine(100, 1000.0, 0.5, 0.6, 4000.0);
        assert!(matches!(
            detect_stance(&grf, 20.0),
            Err(Error::NoContact { .. })
        ));
    }

    #[test]
    fn two_contacts() {
        let mut grf = half_sine(701, 1000.0, 0.1, 0.4, 4000.0);
        for k in 500..600 {
            grf.force[k].z = 100.0;
        }
        assert!(matches!(
            detect_stance(&grf, 20.0),
            Err(Error::MultipleContacts { count: 2 })
        ));
    }

    #[test]
    fn negative_vertical_force_is_clamped() {
        let grf = GrfSeries::new(
            vec![0.0, 0.001],
            vec![Vector3::new(1.0, 0.0, -5.0), Vector3::new(0.0, 0.0, 3.0)],
            vec![Vector3::zeros(); 2],
            vec![false, true],
            None,
        )
        .unwrap();
        assert_eq!(grf.force[0].z, 0.0);
        assert_eq!(grf.clamped, vec![true, false]);
    }

    #[test]
    fn resampling_is_linear_and_range_checked() {
        let times: Vec<f64> = (0..11).map(|k| k as f64 * 0.001).collect();
        let force = (0..11)
            .map(|k| Vector3::new(k as f64, 0.0, 100.0 + k as f64))
            .collect();
        let cop = (0..11)
            .map(|k| Vector3::new(0.01 * k as f64, 0.0, 0.0))
            .collect();
        let grf = GrfSeries::new(times, force, cop, vec![true; 11], None).unwrap();
        let out = resample_grf(&grf, &[0.0015, 0.0025], None, 10.0).unwrap();
        assert!((out.force[0].x - 1.5).abs() < 1e-12);
        assert!((out.cop[1].x - 0.025).abs() < 1e-12);
        assert!(out.cop_valid.iter().all(|v| *v));
        assert!(resample_grf(&grf, &[0.0, 0.02], None, 10.0).is_err());
    }
}
