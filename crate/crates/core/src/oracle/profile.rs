use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Harmonic {
    pub amplitude: f64,
    /// Phase (rad).
    #[serde(default)]
    pub phase: f64,
}

/// Truncated Fourier series `offset + Σ aₖ sin(k·2πt/period + φₖ)`, with
/// harmonic `k` given by position (starting at 1).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Profile {
    #[serde(default)]
    pub offset: f64,
    #[serde(default = "unit_period")]
    pub period: f64,
    #[serde(default)]
    pub harmonics: Vec<Harmonic>,
}

fn unit_period() -> f64 {
    1.0
}

impl Profile {
    pub fn constant(value: f64) -> Self {
        Profile {
            offset: value,
            period: 1.0,
            harmonics: Vec::new(),
        }
    }

    pub fn validate(&self, what: &str) -> Result<()> {
        let finite = self.offset.is_finite()
            && self
                .harmonics
                .iter()
                .all(|h| h.amplitude.is_finite() && h.phase.is_finite());
        if !finite {
            return Err(Error::Config(format!(
                "{what}: non-finite profile coefficient"
            )));
        }
        if !self.harmonics.is_empty() && !(self.period > 0.0) {
            return Err(Error::Config(format!("{what}: period must be positive")));
        }
        Ok(())
    }

    /// Value, first and second time derivative at `t`.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let w = TAU / self.period;
        let (mut v, mut d, mut dd) = (self.offset, 0.0, 0.0);
        for (i, h) in self.harmonics.iter().enumerate() {
            let kw = (i + 1) as f64 * w;
            let (s, c) = (kw * t + h.phase).sin_cos();
            v += h.amplitude * s;
            d += h.amplitude * kw * c;
            dd -= h.amplitude * kw * kw * s;
        }
        (v, d, dd)
    }

    /// Same profile with every coefficient multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        Profile {
            offset: self.offset * k,
            period: self.period,
            harmonics: self
                .harmonics
                .iter()
                .map(|h| Harmonic {
                    amplitude: h.amplitude * k,
                    phase: h.phase,
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_finite_differences() {
        let p = Profile {
            offset: 0.3,
            period: 0.7,
            harmonics: vec![
                Harmonic {
                    amplitude: 0.5,
                    phase: 0.2,
                },
                Harmonic {
                    amplitude: -0.1,
                    phase: 1.0,
                },
            ],
        };
        let h = 1e-5;
        for k in 0..20 {
            let t = 0.05 * k as f64;
            let (_, d, dd) = p.eval(t);
            let fd = (p.eval(t + h).0 - p.eval(t - h).0) / (2.0 * h);
            let fdd = (p.eval(t + h).1 - p.eval(t - h).1) / (2.0 * h);
            assert!((d - fd).abs() < 1e-7);
            assert!((dd - fdd).abs() < 1e-5);
        }
    }

    #[test]
    fn constant_profile() {
        assert_eq!(Profile::constant(2.0).eval(5.0), (2.0, 0.0, 0.0));
        let bad = Profile {
            period: 0.0,
            harmonics: vec![Harmonic::default()],
            ..Profile::default()
        };
        assert!(bad.validate("x").is_err());
    }
}
