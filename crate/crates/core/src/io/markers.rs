use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use super::{parse_error, parse_number, read_records, write_text};
use crate::error::{Error, Result};
use crate::kinematics::{MarkerFrameSeries, MarkerTrack};
use crate::model::LimbChain;

const AXES: [&str; 3] = ["x_mm", "y_mm", "z_mm"];

/// Reads a wide marker CSV (`time_s,<segment>:<marker>:x_mm,...`).
///
/// With a chain, segment names must belong to it. Blank cells mark an
/// occluded sample; a marker is invalid in a frame if any coordinate is
/// blank.
pub fn parse_markers(path: &Path, chain: Option<&LimbChain>) -> Result<MarkerFrameSeries> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_markers(&text, path, chain)
}

pub fn read_markers(
    text: &str,
    path: &Path,
    chain: Option<&LimbChain>,
) -> Result<MarkerFrameSeries> {
    let records = read_records(text, path)?;
    let Some((header_line, header)) = records.first() else {
        return Err(parse_error(path, 1, "file is empty"));
    };
    if header.first().map(|s| s.as_str()) != Some("time_s") {
        return Err(parse_error(
            path,
            *header_line,
            "first column must be 'time_s'",
        ));
    }
    let columns = &header[1..];
    if columns.is_empty() || columns.len() % 3 != 0 {
        return Err(parse_error(
            path,
            *header_line,
            "marker columns must come in x_mm, y_mm, z_mm triples",
        ));
    }
    let known = chain.map(|c| {
        std::iter::once(c.reference().name.clone())
            .chain(c.segments().iter().map(|s| s.name.clone()))
            .collect::<Vec<_>>()
    });
    let mut tracks = Vec::with_capacity(columns.len() / 3);
    for triple in columns.chunks(3) {
        let mut names = None;
        for (col, axis) in triple.iter().zip(AXES) {
            let parts: Vec<&str> = col.split(':').collect();
            if parts.len() != 3 || parts[2] != axis || parts[0].is_empty() || parts[1].is_empty() {
                return Err(parse_error(
                    path,
                    *header_line,
                    &format!(
                        "malformed marker column '{col}', expected '<segment>:<marker>:{axis}'"
                    ),
                ));
            }
            match names {
                None => names = Some((parts[0], parts[1])),
                Some(n) if n != (parts[0], parts[1]) => {
                    return Err(parse_error(
                        path,
                        *header_line,
                        &format!(
                            "column '{col}' breaks the x, y, z triple of {}:{}",
                            n.0, n.1
                        ),
                    ))
                }
                _ => {}
            }
        }
        let (segment, label) = names.unwrap();
        if let Some(known) = &known {
            if !known.iter().any(|k| k == segment) {
                return Err(parse_error(
                    path,
                    *header_line,
                    &format!("unknown segment '{segment}'"),
                ));
            }
        }
        tracks.push(MarkerTrack {
            segment: segment.to_string(),
            label: label.to_string(),
            positions: Vec::new(),
        });
    }

    let mut times = Vec::with_capacity(records.len().saturating_sub(1));
    for (line, row) in &records[1..] {
        if row.len() != header.len() {
            return Err(parse_error(
                path,
                *line,
                &format!("expected {} fields, found {}", header.len(), row.len()),
            ));
        }
        let t = parse_number(&row[0], path, *line)?
            .ok_or_else(|| parse_error(path, *line, "missing time stamp"))?;
        super::check_time(&times, t, path, *line)?;
        times.push(t);
        for (m, track) in tracks.iter_mut().enumerate() {
            let mut v = Vector3::zeros();
            let mut valid = true;
            for c in 0..3 {
                match parse_number(&row[1 + 3 * m + c], path, *line)? {
                    Some(x) => v[c] = x / 1000.0,
                    None => valid = false,
                }
            }
            track.positions.push(valid.then_some(v));
        }
    }
    if times.is_empty() {
        return Err(parse_error(path, *header_line, "no data rows"));
    }
    MarkerFrameSeries::new(times, tracks)
}

/// Serializes markers in the wide CSV layout (positions in mm).
pub fn markers_to_csv(series: &MarkerFrameSeries) -> String {
    let mut out = String::from("time_s");
    for t in series.tracks() {
        for axis in AXES {
            let _ = write!(out, ",{}:{}:{axis}", t.segment, t.label);
        }
    }
    out.push('\n');
    for (k, time) in series.times().iter().enumerate() {
        let _ = write!(out, "{time}");
        for t in series.tracks() {
            match t.positions[k] {
                Some(p) => {
                    for c in 0..3 {
                        let _ = write!(out, ",{}", p[c] * 1000.0);
                    }
                }
                None => out.push_str(",,,"),
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_markers(path: &Path, series: &MarkerFrameSeries) -> Result<()> {
    write_text(path, &markers_to_csv(series))
}
