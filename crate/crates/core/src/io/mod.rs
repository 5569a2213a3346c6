//! File formats: marker and force-plate CSV ingestion, trial bundles and
//! report serialization.
//!
//! Numbers are parsed and printed with Rust's locale-independent float
//! routines; written values use the shortest representation that parses
//! back to the same `f64`.

mod grf;
mod markers;
mod reports;
mod svg;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use grf::{grf_to_csv, parse_grf, read_grf, write_grf};
pub use markers::{markers_to_csv, parse_markers, read_markers, write_markers};
pub use reports::{
    curve_table_csv, energy_fractions_csv, energy_table_csv, extrema_csv, phases_csv, write_reports,
};
pub use svg::{line_plot_svg, PlotSeries};

use crate::dynamics::{detect_stance, GrfSeries};
use crate::error::{Error, Result};
use crate::kinematics::MarkerFrameSeries;
use crate::model::LimbChain;

/// Descriptive fields carried alongside a trial.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialMetadata {
    #[serde(default)]
    pub subject: String,
    /// Travel speed, m/s.
    #[serde(default)]
    pub speed: Option<f64>,
    #[serde(default)]
    pub notes: String,
}

/// One trial: dynamic markers, force plate, optional static capture.
#[derive(Clone, Debug)]
pub struct TrialBundle {
    pub id: String,
    pub markers: MarkerFrameSeries,
    pub grf: GrfSeries,
    pub calibration: Option<MarkerFrameSeries>,
    /// Name of the chain the markers were placed on.
    pub chain: String,
    pub metadata: TrialMetadata,
}

impl TrialBundle {
    /// Checks that the marker recording covers the contact episode, allowing
    /// one marker frame of slack at either end.
    pub fn validate(&self, threshold: f64) -> Result<()> {
        let events = detect_stance(&self.grf, threshold)?;
        let t = self.markers.times();
        let slack = 1.0 / self.markers.sample_rate();
        let (a, b) = (t[0], t[t.len() - 1]);
        if events.stance_start < a - slack || events.stance_end > b + slack {
            return Err(Error::Misaligned(format!(
                "trial {}: contact [{:.4}, {:.4}] s is not covered by markers [{a:.4}, {b:.4}] s",
                self.id, events.stance_start, events.stance_end
            )));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BundleDocument {
    id: String,
    chain: String,
    markers: String,
    grf: String,
    #[serde(default)]
    calibration: Option<String>,
    #[serde(default)]
    metadata: TrialMetadata,
}

pub const BUNDLE_FILE: &str = "trial.toml";

/// Writes `trial.toml`, `markers.csv`, `grf.csv` and, when present,
/// `static.csv` into `dir`.
pub fn write_bundle(dir: &Path, bundle: &TrialBundle) -> Result<()> {
    create_dir(dir)?;
    let doc = BundleDocument {
        id: bundle.id.clone(),
        chain: bundle.chain.clone(),
        markers: "markers.csv".into(),
        grf: "grf.csv".into(),
        calibration: bundle.calibration.as_ref().map(|_| "static.csv".into()),
        metadata: bundle.metadata.clone(),
    };
    let text = toml::to_string(&doc).map_err(|e| Error::Config(e.to_string()))?;
    write_markers(&dir.join(&doc.markers), &bundle.markers)?;
    write_grf(&dir.join(&doc.grf), &bundle.grf)?;
    if let (Some(cal), Some(name)) = (&bundle.calibration, &doc.calibration) {
        write_markers(&dir.join(name), cal)?;
    }
    write_text(&dir.join(BUNDLE_FILE), &text)
}

/// Reads a bundle directory written by [`write_bundle`]. COP validity uses
/// `threshold` (N).
pub fn read_bundle(dir: &Path, chain: &LimbChain, threshold: f64) -> Result<TrialBundle> {
    let path = dir.join(BUNDLE_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let doc: BundleDocument = toml::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))?;
    let markers = parse_markers(&dir.join(&doc.markers), Some(chain))?;
    let grf = parse_grf(&dir.join(&doc.grf), threshold)?;
    let calibration = doc
        .calibration
        .map(|c| parse_markers(&dir.join(c), Some(chain)))
        .transpose()?;
    Ok(TrialBundle {
        id: doc.id,
        markers,
        grf,
        calibration,
        chain: doc.chain,
        metadata: doc.metadata,
    })
}

pub(crate) fn parse_error(path: &Path, line: u64, message: &str) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.to_string(),
    }
}

/// Non-empty records with their 1-based line numbers; fields are trimmed.
pub(crate) fn read_records(text: &str, path: &Path) -> Result<Vec<(u64, Vec<String>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        })?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let line = record.position().map_or(0, |p| p.line());
        out.push((line, record.iter().map(str::to_string).collect()));
    }
    Ok(out)
}

/// A blank cell parses as `None`.
pub(crate) fn parse_number(cell: &str, path: &Path, line: u64) -> Result<Option<f64>> {
    if cell.is_empty() {
        return Ok(None);
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(parse_error(
            path,
            line,
            &format!("'{cell}' is not a finite number"),
        )),
    }
}

pub(crate) fn check_time(previous: &[f64], t: f64, path: &Path, line: u64) -> Result<()> {
    if let Some(&last) = previous.last() {
        if t == last {
            return Err(parse_error(
                path,
                line,
                &format!("duplicated time stamp {t}"),
            ));
        }
        if t < last {
            return Err(parse_error(
                path,
                line,
                &format!("time {t} is earlier than {last}"),
            ));
        }
    }
    Ok(())
}

pub(crate) fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::MarkerTrack;
    use nalgebra::Vector3;

    fn bundle() -> TrialBundle {
        let times: Vec<f64> = (0..13).map(|k| k as f64 / 120.0).collect();
        let track = |label: &str, x: f64| MarkerTrack {
            segment: "humerus".into(),
            label: label.into(),
            positions: (0..13).map(|_| Some(Vector3::new(x, 0.1, 0.2))).collect(),
        };
        let markers =
            MarkerFrameSeries::new(times, vec![track("h1", 0.0), track("h2", 0.1)]).unwrap();
        let gt: Vec<f64> = (0..101).map(|k| k as f64 / 1000.0).collect();
        let force = (0..101)
            .map(|k| Vector3::new(0.0, 0.0, if (20..60).contains(&k) { 500.0 } else { 0.0 }))
            .collect();
        let grf = GrfSeries::new(
            gt,
            force,
            vec![Vector3::zeros(); 101],
            vec![true; 101],
            None,
        )
        .unwrap();
        TrialBundle {
            id: "t1".into(),
            markers: markers.clone(),
            grf,
            calibration: Some(markers),
            chain: "forelimb".into(),
            metadata: TrialMetadata {
                subject: "h".into(),
                speed: Some(3.13),
                notes: String::new(),
            },
        }
    }

    #[test]
    fn bundle_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let b = bundle();
        write_bundle(dir.path(), &b).unwrap();
        let back = read_bundle(dir.path(), &crate::model::default_forelimb(), 10.0).unwrap();
        assert_eq!(back.id, "t1");
        assert_eq!(back.metadata, b.metadata);
        assert_eq!(back.markers.len(), 13);
        assert!(back.calibration.is_some());
        b.validate(10.0).unwrap();
    }

    #[test]
    fn contact_outside_markers_is_rejected() {
        let mut b = bundle();
        b.markers = MarkerFrameSeries::new(
            (0..4).map(|k| k as f64 / 120.0).collect(),
            b.markers
                .tracks()
                .iter()
                .map(|t| MarkerTrack {
                    positions: t.positions[..4].to_vec(),
                    ..t.clone()
                })
                .collect(),
        )
        .unwrap();
        assert!(b.validate(10.0).is_err());
    }
}
