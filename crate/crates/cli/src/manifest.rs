use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use forelimb_core::pipeline::AnalysisSettings;

pub const MANIFEST_FILE: &str = "manifest.toml";

/// One trial: either a bundle directory or separate files.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialInput {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bundle: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub markers: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grf: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<PathBuf>,
}

/// Everything an analysis run depends on besides the input files. Relative
/// paths resolve against the manifest's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    /// Chain configuration; the shipped forelimb when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<PathBuf>,
    /// Marker low-pass cutoff (Hz); 0 disables filtering.
    #[serde(default = "default_cutoff_kin")]
    pub cutoff_kin: f64,
    /// Force-plate low-pass cutoff (Hz); 0 disables filtering.
    #[serde(default = "default_cutoff_grf")]
    pub cutoff_grf: f64,
    /// Contact threshold (N); 2 % of body weight when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contact_threshold: Option<f64>,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub trials: Vec<TrialInput>,
}

fn default_cutoff_kin() -> f64 {
    10.0
}
fn default_cutoff_grf() -> f64 {
    50.0
}
fn default_grid_points() -> usize {
    101
}

impl Default for RunManifest {
    fn default() -> Self {
        RunManifest {
            chain: None,
            cutoff_kin: default_cutoff_kin(),
            cutoff_grf: default_cutoff_grf(),
            contact_threshold: None,
            grid_points: default_grid_points(),
            out: None,
            seed: 0,
            trials: Vec::new(),
        }
    }
}

fn cutoff(hz: f64) -> Option<f64> {
    (hz > 0.0).then_some(hz)
}

impl RunManifest {
    pub fn from_toml_str(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.message().to_string())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn settings(&self) -> AnalysisSettings {
        AnalysisSettings {
            cutoff_kin: cutoff(self.cutoff_kin),
            cutoff_grf: cutoff(self.cutoff_grf),
            contact_threshold: self.contact_threshold,
            grid_points: self.grid_points,
        }
    }

    pub fn check(&self) -> Result<(), String> {
        if self.trials.is_empty() {
            return Err("no trials given".into());
        }
        if !(self.cutoff_kin >= 0.0 && self.cutoff_grf >= 0.0) {
            return Err("cutoffs must be non-negative".into());
        }
        if self
            .contact_threshold
            .is_some_and(|t| t.is_nan() || t < 0.0)
        {
            return Err("contact threshold must be non-negative".into());
        }
        if self.grid_points < 2 {
            return Err("grid needs at least 2 points".into());
        }
        for (i, t) in self.trials.iter().enumerate() {
            let files = t.markers.is_some() || t.grf.is_some() || t.calibration.is_some();
            match (&t.bundle, files) {
                (Some(_), true) => {
                    return Err(format!(
                        "trial {}: give a bundle or separate files, not both",
                        i + 1
                    ))
                }
                (None, _) if t.markers.is_none() || t.grf.is_none() => {
                    return Err(format!(
                        "trial {}: markers and grf files are required",
                        i + 1
                    ))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// `path` relative to `base` unless it is absolute.
pub fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_defaults() {
        let m = RunManifest::from_toml_str("[[trials]]\nbundle = \"t1\"\n").unwrap();
        assert_eq!(m.cutoff_kin, 10.0);
        assert_eq!(m.settings().cutoff_grf, Some(50.0));
        assert_eq!(RunManifest::from_toml_str(&m.to_toml_string()).unwrap(), m);
        m.check().unwrap();
    }

    #[test]
    fn zero_cutoff_disables_filter() {
        let m = RunManifest {
            cutoff_kin: 0.0,
            ..RunManifest::default()
        };
        assert_eq!(m.settings().cutoff_kin, None);
    }

    #[test]
    fn incomplete_trials_rejected() {
        let m = RunManifest::from_toml_str("[[trials]]\nmarkers = \"m.csv\"\n").unwrap();
        assert!(m.check().is_err());
        let m =
            RunManifest::from_toml_str("[[trials]]\nbundle = \"b\"\ngrf = \"g.csv\"\n").unwrap();
        assert!(m.check().is_err());
        assert!(RunManifest::default().check().is_err());
        assert!(RunManifest::from_toml_str("bogus = 1\n").is_err());
    }
}
