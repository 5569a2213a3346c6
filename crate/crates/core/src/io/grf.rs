use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use super::{parse_error, parse_number, read_records, write_text};
use crate::dynamics::GrfSeries;
use crate::error::{Error, Result};

const COLUMNS: [&str; 7] = [
    "time_s", "fx_N", "fy_N", "fz_N", "copx_m", "copy_m", "copz_m",
];
const FREE_MOMENT: &str = "tz_Nm";

/// Reads a force-plate CSV. Rows whose vertical force does not exceed
/// `threshold` (N) keep their force but carry an invalid COP, as do rows
/// with blank COP cells.
pub fn parse_grf(path: &Path, threshold: f64) -> Result<GrfSeries> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_grf(&text, path, threshold)
}

pub fn read_grf(text: &str, path: &Path, threshold: f64) -> Result<GrfSeries> {
    let records = read_records(text, path)?;
    let Some((header_line, header)) = records.first() else {
        return Err(parse_error(path, 1, "file is empty"));
    };
    let has_free = match header.len() {
        7 => false,
        8 if header[7] == FREE_MOMENT => true,
        _ => {
            return Err(parse_error(
                path,
                *header_line,
                &format!("expected header '{}[,{FREE_MOMENT}]'", COLUMNS.join(",")),
            ))
        }
    };
    if header[..7] != COLUMNS {
        return Err(parse_error(
            path,
            *header_line,
            &format!("expected header '{}[,{FREE_MOMENT}]'", COLUMNS.join(",")),
        ));
    }

    let mut times = Vec::new();
    let mut force = Vec::new();
    let mut cop = Vec::new();
    let mut cop_valid = Vec::new();
    let mut free = Vec::new();
    for (line, row) in &records[1..] {
        if row.len() != header.len() {
            return Err(parse_error(
                path,
                *line,
                &format!("expected {} fields, found {}", header.len(), row.len()),
            ));
        }
        let required = |i: usize| -> Result<f64> {
            parse_number(&row[i], path, *line)?
                .ok_or_else(|| parse_error(path, *line, &format!("missing {}", COLUMNS[i])))
        };
        let t = required(0)?;
        super::check_time(&times, t, path, *line)?;
        times.push(t);
        let f = Vector3::new(required(1)?, required(2)?, required(3)?);
        if f.z < 0.0 {
            log::warn!(
                "{}: line {line}: negative vertical force {} N clamped to 0",
                path.display(),
                f.z
            );
        }
        force.push(f);
        let c: Vec<Option<f64>> = (4..7)
            .map(|i| parse_number(&row[i], path, *line))
            .collect::<Result<_>>()?;
        match (c[0], c[1], c[2]) {
            (Some(x), Some(y), Some(z)) => {
                cop.push(Vector3::new(x, y, z));
                cop_valid.push(f.z > threshold);
            }
            _ => {
                cop.push(Vector3::zeros());
                cop_valid.push(false);
            }
        }
        if has_free {
            free.push(parse_number(&row[7], path, *line)?.unwrap_or(0.0));
        }
    }
    if times.is_empty() {
        return Err(parse_error(path, *header_line, "no data rows"));
    }
    if times.len() < 2 {
        return Err(parse_error(
            path,
            *header_line,
            "at least two rows are required",
        ));
    }
    GrfSeries::new(times, force, cop, cop_valid, has_free.then_some(free))
}

/// Serializes a force series. Invalid COP samples are written as blanks.
pub fn grf_to_csv(grf: &GrfSeries) -> String {
    let mut out = COLUMNS.join(",");
    if grf.free_moment.is_some() {
        let _ = write!(out, ",{FREE_MOMENT}");
    }
    out.push('\n');
    for k in 0..grf.len() {
        let f = grf.force[k];
        let _ = write!(out, "{},{},{},{}", grf.times[k], f.x, f.y, f.z);
        if grf.cop_valid[k] {
            let c = grf.cop[k];
            let _ = write!(out, ",{},{},{}", c.x, c.y, c.z);
        } else {
            out.push_str(",,,");
        }
        if let Some(m) = &grf.free_moment {
            let _ = write!(out, ",{}", m[k]);
        }
        out.push('\n');
    }
    out
}

pub fn write_grf(path: &Path, grf: &GrfSeries) -> Result<()> {
    write_text(path, &grf_to_csv(grf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn p() -> PathBuf {
        PathBuf::from("g.csv")
    }

    #[test]
    fn thousand_hertz_file() {
        let mut text = String::from("time_s,fx_N,fy_N,fz_N,copx_m,copy_m,copz_m\n");
        for k in 0..100 {
            let _ = writeln!(text, "{},1,2,{},0.1,0.2,0", k as f64 / 1000.0, 10 * k);
        }
        let g = read_grf(&text, &p(), 50.0).unwrap();
        assert!((g.sample_rate - 1000.0).abs() < 1e-6);
        assert!(!g.cop_valid[5] && g.cop_valid[6]);
        assert!(g.free_moment.is_none());
    }

    #[test]
    fn negative_vertical_force_is_clamped() {
        let text = "time_s,fx_N,fy_N,fz_N,copx_m,copy_m,copz_m\n0,0,0,100,0,0,0\n0.001,0,0,-3,0,0,0\n0.002,0,0,90,0,0,0\n";
        let g = read_grf(text, &p(), 10.0).unwrap();
        assert_eq!(g.force[1].z, 0.0);
        assert!(g.clamped[1]);
    }

    #[test]
    fn empty_file() {
        assert!(matches!(read_grf("", &p(), 10.0), Err(Error::Parse { .. })));
        assert!(read_grf("time_s,fx_N,fy_N,fz_N,copx_m,copy_m,copz_m\n", &p(), 10.0).is_err());
    }

    #[test]
    fn wrong_header() {
        assert!(read_grf("time,fx,fy,fz,cx,cy,cz\n0,0,0,0,0,0,0\n", &p(), 10.0).is_err());
    }

    #[test]
    fn round_trip_with_free_moment() {
        let times: Vec<f64> = (0..20).map(|k| k as f64 / 1000.0).collect();
        let force = (0..20)
            .map(|k| Vector3::new(0.1 * k as f64, -1.0 / 7.0, 100.0 * k as f64))
            .collect();
        let cop = (0..20)
            .map(|k| Vector3::new(0.001 * k as f64, 0.3, 0.0))
            .collect();
        let valid = (0..20).map(|k| k > 2).collect();
        let free = Some((0..20).map(|k| 0.01 * k as f64).collect());
        let g = GrfSeries::new(times, force, cop, valid, free).unwrap();
        let back = read_grf(&grf_to_csv(&g), &p(), 1.0).unwrap();
        assert_eq!(back.force, g.force);
        assert_eq!(back.cop_valid, g.cop_valid);
        assert_eq!(back.free_moment, g.free_moment);
        for k in 3..20 {
            assert_eq!(back.cop[k], g.cop[k]);
        }
    }
}
