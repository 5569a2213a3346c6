use crate::error::{Error, Result};

/// Natural cubic spline through strictly increasing knots.
#[derive(Clone, Debug, PartialEq)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn natural(x: &[f64], y: &[f64]) -> Result<Self> {
        let n = x.len();
        if n != y.len() {
            return Err(Error::Misaligned(format!(
                "{n} abscissae for {} values",
                y.len()
            )));
        }
        if n < 2 {
            return Err(Error::Precondition(
                "a spline needs at least two knots".into(),
            ));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Precondition(
                "spline knots must increase strictly".into(),
            ));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite value in spline data".into()));
        }
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior equations.
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut upper = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for i in 0..k {
                let (h0, h1) = (x[i + 1] - x[i], x[i + 2] - x[i + 1]);
                diag[i] = 2.0 * (h0 + h1);
                upper[i] = h1;
                rhs[i] = 6.0 * ((y[i + 2] - y[i + 1]) / h1 - (y[i + 1] - y[i]) / h0);
            }
            for i in 1..k {
                let lower = x[i + 1] - x[i];
                let w = lower / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
            }
        }
        Ok(CubicSpline {
            x: x.to_vec(),
            y: y.to_vec(),
            m,
        })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let i = match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            p => (p - 1).min(n - 2),
        };
        let h = self.x[i + 1] - self.x[i];
        let a = self.x[i + 1] - t;
        let b = t - self.x[i];
        if b == 0.0 {
            return self.y[i];
        }
        if a == 0.0 {
            return self.y[i + 1];
        }
        (self.m[i] * a * a * a + self.m[i + 1] * b * b * b) / (6.0 * h)
            + (self.y[i] / h - self.m[i] * h / 6.0) * a
            + (self.y[i + 1] / h - self.m[i + 1] * h / 6.0) * b
    }
}

/// A series resampled on a uniform 0–100 % grid.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedSeries {
    pub percent: Vec<f64>,
    pub values: Vec<f64>,
    /// Grid position (%) of a phase boundary inside the window, if any.
    pub boundary_percent: Option<f64>,
}

impl NormalizedSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| 100.0 * i as f64 / (n - 1) as f64).collect()
}

/// Resamples the full span of `(times, values)` onto `grid_points` points.
pub fn time_normalize(
    times: &[f64],
    values: &[f64],
    grid_points: usize,
) -> Result<NormalizedSeries> {
    let (Some(&a), Some(&b)) = (times.first(), times.last()) else {
        return Err(Error::Precondition("empty series".into()));
    };
    time_normalize_window(times, values, a, b, grid_points)
}

/// Resamples `[start, end]` of `(times, values)` onto `grid_points` points
/// with a natural cubic spline.
pub fn time_normalize_window(
    times: &[f64],
    values: &[f64],
    start: f64,
    end: f64,
    grid_points: usize,
) -> Result<NormalizedSeries> {
    if grid_points < 2 {
        return Err(Error::Precondition(format!(
            "at least 2 grid points are required, got {grid_points}"
        )));
    }
    if times.len() < 2 {
        return Err(Error::Precondition(
            "at least two samples are required".into(),
        ));
    }
    let tol = 1e-9;
    if !(end > start) || start < times[0] - tol || end > times[times.len() - 1] + tol {
        return Err(Error::Precondition(format!(
            "window [{start}, {end}] s is empty or outside the series"
        )));
    }
    let spline = CubicSpline::natural(times, values)?;
    let percent = grid(grid_points);
    let values = percent
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let t = if i == 0 {
                start
            } else if i == grid_points - 1 {
                end
            } else {
                start + (end - start) * i as f64 / (grid_points - 1) as f64
            };
            spline.eval(t)
        })
        .collect();
    Ok(NormalizedSeries {
        percent,
        values,
        boundary_percent: None,
    })
}

/// Maximum and minimum of a normalized series with their grid positions
/// (%). Ties resolve to the earliest point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Extremum {
    pub max: f64,
    pub max_at: f64,
    pub min: f64,
    pub min_at: f64,
}

pub fn extrema(series: &NormalizedSeries) -> Result<Extremum> {
    if series.values.is_empty() {
        return Err(Error::Precondition("empty series has no extrema".into()));
    }
    let (mut imax, mut imin) = (0, 0);
    for (i, &v) in series.values.iter().enumerate() {
        if v > series.values[imax] {
            imax = i;
        }
        if v < series.values[imin] {
            imin = i;
        }
    }
    Ok(Extremum {
        max: series.values[imax],
        max_at: series.percent[imax],
        min: series.values[imin],
        min_at: series.percent[imin],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn spline_reproduces_knots_and_lines() {
        let x = [0.0, 0.3, 0.7, 1.0, 1.8];
        let y = [1.0, 1.6, 2.4, 3.0, 4.6];
        let s = CubicSpline::natural(&x, &y).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert_eq!(s.eval(*a), *b);
        }
        // Linear data stays linear.
        assert!((s.eval(0.5) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn spline_matches_smooth_function() {
        let x: Vec<f64> = (0..50).map(|k| k as f64 * 0.02).collect();
        let y: Vec<f64> = x.iter().map(|t| (3.0 * t).sin()).collect();
        let s = CubicSpline::natural(&x, &y).unwrap();
        for t in [0.31, 0.5, 0.77] {
            assert!((s.eval(t) - (3.0 * t).sin()).abs() < 1e-5);
        }
    }

    #[test]
    fn normalization_hits_endpoints_exactly() {
        let times: Vec<f64> = (0..85).map(|k| k as f64 / 120.0).collect();
        let v: Vec<f64> = times.iter().map(|t| (7.0 * t).cos() * 3.3).collect();
        let n = time_normalize(&times, &v, 101).unwrap();
        assert_eq!(n.len(), 101);
        assert_eq!(n.values[0], v[0]);
        assert_eq!(n.values[100], v[84]);
        assert_eq!(n.percent[50], 50.0);
    }

    #[test]
    fn bad_grid_rejected() {
        assert!(time_normalize(&[0.0, 1.0], &[0.0, 1.0], 1).is_err());
        assert!(time_normalize_window(&[0.0, 1.0], &[0.0, 1.0], 0.5, 0.5, 10).is_err());
    }

    #[test]
    fn extrema_ties_go_to_earliest() {
        let s = NormalizedSeries {
            percent: vec![0.0, 50.0, 100.0],
            values: vec![1.0, 1.0, -2.0],
            boundary_percent: None,
        };
        let e = extrema(&s).unwrap();
        assert_eq!((e.max, e.max_at, e.min, e.min_at), (1.0, 0.0, -2.0, 100.0));
    }

    proptest! {
        #[test]
        fn normalization_keeps_endpoints(
            vals in proptest::collection::vec(-10.0f64..10.0, 3..60),
            points in 2usize..300,
        ) {
            let times: Vec<f64> = (0..vals.len()).map(|k| 0.25 + k as f64 * 0.01).collect();
            let n = time_normalize(&times, &vals, points).unwrap();
            prop_assert_eq!(n.values.len(), points);
            prop_assert_eq!(n.values[0], vals[0]);
            prop_assert_eq!(n.values[points - 1], *vals.last().unwrap());
        }
    }
}
