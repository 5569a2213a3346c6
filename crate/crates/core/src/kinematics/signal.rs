//! Zero-phase low-pass filtering, differentiation and gap bridging for
//! uniformly sampled series.

use crate::error::{Error, Result};

/// Damping ratios of the two second-order sections of a 4th-order
/// Butterworth prototype.
const SECTION_DAMPING: [f64; 2] = [0.382_683_432_365_089_8, 0.923_879_532_511_286_7];

#[derive(Clone, Copy, Debug, PartialEq)]
struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
}

impl Biquad {
    fn low_pass(k: f64, zeta: f64) -> Self {
        let k2 = k * k;
        let a0 = 1.0 + 2.0 * zeta * k + k2;
        let b0 = k2 / a0;
        Biquad {
            b: [b0, 2.0 * b0, b0],
            a: [2.0 * (k2 - 1.0) / a0, (1.0 - 2.0 * zeta * k + k2) / a0],
        }
    }

    /// Direct form II transposed, started from the steady state for a
    /// constant input equal to the first sample.
    fn run(&self, x: &mut [f64]) {
        let Some(&c) = x.first() else { return };
        let [b0, b1, b2] = self.b;
        let [a1, a2] = self.a;
        // Unit DC gain means the steady output equals the input.
        let mut z1 = c - b0 * c;
        let mut z2 = b2 * c - a2 * c;
        for v in x.iter_mut() {
            let input = *v;
            let y = b0 * input + z1;
            z1 = b1 * input - a1 * y + z2;
            z2 = b2 * input - a2 * y;
            *v = y;
        }
    }
}

/// Fourth-order Butterworth low-pass filter, applied forward and backward.
#[derive(Clone, Debug, PartialEq)]
pub struct Butterworth {
    sections: [Biquad; 2],
    cutoff: f64,
    sample_rate: f64,
}

impl Butterworth {
    pub fn new(cutoff: f64, sample_rate: f64) -> Result<Self> {
        if !(sample_rate > 0.0) || !sample_rate.is_finite() {
            return Err(Error::Precondition(format!(
                "invalid sample rate {sample_rate}"
            )));
        }
        if !(cutoff > 0.0) {
            return Err(Error::Precondition(format!(
                "cutoff must be positive, got {cutoff}"
            )));
        }
        if cutoff >= sample_rate / 2.0 {
            return Err(Error::Precondition(format!(
                "cutoff {cutoff} Hz is not below the Nyquist frequency {} Hz",
                sample_rate / 2.0
            )));
        }
        let k = (std::f64::consts::PI * cutoff / sample_rate).tan();
        Ok(Butterworth {
            sections: SECTION_DAMPING.map(|z| Biquad::low_pass(k, z)),
            cutoff,
            sample_rate,
        })
    }

    fn pad_len(&self, n: usize) -> usize {
        let settle = (9.0 * self.sample_rate / self.cutoff).ceil() as usize;
        settle.max(15).min(n.saturating_sub(1))
    }

    fn cascade(&self, x: &mut [f64]) {
        for s in &self.sections {
            s.run(x);
        }
    }

    /// Zero-phase filtered copy of `series`.
    pub fn apply(&self, series: &[f64]) -> Vec<f64> {
        let n = series.len();
        if n < 2 {
            return series.to_vec();
        }
        let pad = self.pad_len(n);
        // Odd extension about each endpoint.
        let (first, last) = (series[0], series[n - 1]);
        let mut x = Vec::with_capacity(n + 2 * pad);
        x.extend((1..=pad).rev().map(|i| 2.0 * first - series[i]));
        x.extend_from_slice(series);
        x.extend((1..=pad).map(|i| 2.0 * last - series[n - 1 - i]));

        self.cascade(&mut x);
        x.reverse();
        self.cascade(&mut x);
        x.reverse();
        x[pad..pad + n].to_vec()
    }
}

/// Zero-phase 4th-order Butterworth low-pass. `cutoff = None` returns the
/// input unchanged.
pub fn low_pass_filter(series: &[f64], sample_rate: f64, cutoff: Option<f64>) -> Result<Vec<f64>> {
    match cutoff {
        None => Ok(series.to_vec()),
        Some(fc) => Ok(Butterworth::new(fc, sample_rate)?.apply(series)),
    }
}

/// Finite-difference derivative: five-point central stencil in the
/// interior and five-point one-sided stencils at the two samples nearest
/// each end, all fourth-order. Series of 3 or 4 samples fall back to
/// three-point second-order stencils.
pub fn differentiate(series: &[f64], dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) {
        return Err(Error::Precondition(format!(
            "sample interval must be positive, got {dt}"
        )));
    }
    let n = series.len();
    if n < 3 {
        return Err(Error::Precondition(format!(
            "at least 3 samples are needed to differentiate, got {n}"
        )));
    }
    let f = series;
    let mut d = vec![0.0; n];
    if n < 5 {
        d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dt);
        for k in 1..n - 1 {
            d[k] = (f[k + 1] - f[k - 1]) / (2.0 * dt);
        }
        d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * dt);
        return Ok(d);
    }
    let h12 = 12.0 * dt;
    d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / h12;
    d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / h12;
    for k in 2..n - 2 {
        d[k] = (f[k - 2] - 8.0 * f[k - 1] + 8.0 * f[k + 1] - f[k + 2]) / h12;
    }
    let m = n - 1;
    d[m] =
        (25.0 * f[m] - 48.0 * f[m - 1] + 36.0 * f[m - 2] - 16.0 * f[m - 3] + 3.0 * f[m - 4]) / h12;
    d[m - 1] = (3.0 * f[m] + 10.0 * f[m - 1] - 18.0 * f[m - 2] + 6.0 * f[m - 3] - f[m - 4]) / h12;
    Ok(d)
}

/// Checks that `times` are strictly increasing and uniformly spaced and
/// returns the sample rate.
pub fn uniform_rate(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::Precondition(
            "at least two samples are required".into(),
        ));
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::Precondition("time stamps must increase".into()));
    }
    for (k, w) in times.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::Precondition(format!(
                "time stamp {} at sample {} does not increase",
                w[1],
                k + 1
            )));
        }
        if (times[0] + dt * (k + 1) as f64 - w[1]).abs() > 1e-9 {
            return Err(Error::Precondition(format!(
                "non-uniform sampling at sample {}",
                k + 1
            )));
        }
    }
    Ok(1.0 / dt)
}

/// Fills runs of missing samples no longer than `max_gap` by cubic
/// interpolation through the nearest valid samples on each side. Returns the
/// completed series and a per-sample flag marking filled samples.
pub fn bridge_gaps(series: &[Option<f64>], max_gap: usize) -> Result<(Vec<f64>, Vec<bool>)> {
    let n = series.len();
    let valid: Vec<usize> = (0..n).filter(|&k| series[k].is_some()).collect();
    if valid.is_empty() {
        return Err(Error::GapTooLong(format!("all {n} samples are missing")));
    }
    let mut out: Vec<f64> = series.iter().map(|v| v.unwrap_or(f64::NAN)).collect();
    let mut filled = vec![false; n];
    if valid[0] != 0 || *valid.last().unwrap() != n - 1 {
        return Err(Error::GapTooLong(
            "missing samples at the start or end of the trial cannot be bridged".into(),
        ));
    }
    for (vi, w) in valid.windows(2).enumerate() {
        let (lo, hi) = (w[0], w[1]);
        let gap = hi - lo - 1;
        if gap == 0 {
            continue;
        }
        if gap > max_gap {
            return Err(Error::GapTooLong(format!(
                "{gap} consecutive missing samples starting at sample {} (limit {max_gap})",
                lo + 1
            )));
        }
        // Up to two anchors on each side of the gap.
        let mut anchors: Vec<usize> = Vec::with_capacity(4);
        if vi >= 1 {
            anchors.push(valid[vi - 1]);
        }
        anchors.push(lo);
        anchors.push(hi);
        if vi + 2 < valid.len() {
            anchors.push(valid[vi + 2]);
        }
        for k in lo + 1..hi {
            out[k] = lagrange(&anchors, |i| series[i].unwrap(), k as f64);
            filled[k] = true;
        }
    }
    Ok((out, filled))
}

fn lagrange(nodes: &[usize], value: impl Fn(usize) -> f64, x: f64) -> f64 {
    let mut sum = 0.0;
    for (i, &ni) in nodes.iter().enumerate() {
        let mut w = 1.0;
        for (j, &nj) in nodes.iter().enumerate() {
            if i != j {
                w *= (x - nj as f64) / (ni as f64 - nj as f64);
            }
        }
        sum += w * value(ni);
    }
    sum
}
