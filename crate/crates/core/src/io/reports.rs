use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::svg::{line_plot_svg, PlotSeries};
use super::{create_dir, write_text};
use crate::energetics::{ExtremaReport, FractionTable, Share};
use crate::error::Result;
use crate::model::JointKind;
use crate::pipeline::{AggregateCurve, EnergyRow, GroupReport, Quantity, TrialPhases};

/// Fixed-point formatting without a negative zero.
fn fixed(x: f64, decimals: usize) -> String {
    if !x.is_finite() {
        return "NA".into();
    }
    let s = format!("{x:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn share(s: Share) -> String {
    s.map_or_else(|| "NA".into(), |v| fixed(v, 1))
}

fn joint_name(j: Option<JointKind>, none: &str) -> String {
    j.map_or_else(|| none.to_string(), |k| k.name().to_string())
}

/// Long-form energy table (J/kg, 4 decimals). Absorbed energy is negative.
pub fn energy_table_csv(rows: &[EnergyRow]) -> String {
    let mut out = String::from(
        "variant,phase,joint,generated,generated_sd,absorbed,absorbed_sd,net,net_sd\n",
    );
    for r in rows {
        let c = &r.cell;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.variant.name(),
            r.phase.name(),
            joint_name(r.joint, "total"),
            fixed(c.generated.0, 4),
            fixed(c.generated.1, 4),
            fixed(c.absorbed.0, 4),
            fixed(c.absorbed.1, 4),
            fixed(c.net.0, 4),
            fixed(c.net.1, 4),
        );
    }
    out
}

/// Joint shares of each phase total (%), followed per variant by a
/// `stride` row holding the stance and swing shares of the stride total.
pub fn energy_fractions_csv(tables: &[FractionTable]) -> String {
    let mut out = String::from(
        "variant,joint,stance_generated_pct,swing_generated_pct,stance_absorbed_pct,swing_absorbed_pct\n",
    );
    for t in tables {
        for j in &t.joints {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                t.variant.name(),
                j.kind.name(),
                share(j.stance_generated),
                share(j.swing_generated),
                share(j.stance_absorbed),
                share(j.swing_absorbed),
            );
        }
        if !t.joints.is_empty() {
            let _ = writeln!(
                out,
                "{},stride,{},{},{},{}",
                t.variant.name(),
                share(t.stance_of_generated),
                share(t.swing_of_generated),
                share(t.stance_of_absorbed),
                share(t.swing_of_absorbed),
            );
        }
    }
    out
}

pub fn extrema_csv(report: &ExtremaReport) -> String {
    let mut out =
        String::from("window,quantity,joint,axis,max,max_sd,max_at_pct,min,min_sd,min_at_pct\n");
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            report.window,
            r.quantity,
            joint_name(r.joint, "ground"),
            r.axis,
            fixed(r.max_mean, 4),
            fixed(r.max_sd, 4),
            fixed(r.max_at, 0),
            fixed(r.min_mean, 4),
            fixed(r.min_sd, 4),
            fixed(r.min_at, 0),
        );
    }
    out
}

pub fn phases_csv(trials: &[TrialPhases]) -> String {
    let mut out =
        String::from("trial,stride_start_s,stance_start_s,stance_end_s,stride_end_s,stance_pct\n");
    for t in trials {
        let p = &t.phases;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            t.id,
            fixed(p.stride_start, 6),
            fixed(p.stance_start, 6),
            fixed(p.stance_end, 6),
            fixed(p.stride_end, 6),
            fixed(100.0 * p.stance_fraction(), 2),
        );
    }
    out
}

#[derive(Clone, Copy)]
enum Window {
    Stride,
    Stance,
    Swing,
}

impl Window {
    const ALL: [Window; 3] = [Window::Stride, Window::Stance, Window::Swing];

    fn name(self) -> &'static str {
        match self {
            Window::Stride => "stride",
            Window::Stance => "stance",
            Window::Swing => "swing",
        }
    }

    fn pick(self, c: &AggregateCurve) -> Option<&crate::energetics::AggregateSeries> {
        match self {
            Window::Stride => Some(&c.stride),
            Window::Stance => Some(&c.stance),
            Window::Swing => c.swing.as_ref(),
        }
    }
}

/// Mean and s.d. columns for each curve, on their shared percent grid.
/// Curves missing in the window are skipped; with none left the table is
/// header-only with just the percent column.
pub fn curve_table_csv(curves: &[&AggregateCurve], window_name: &str) -> String {
    let window = Window::ALL
        .into_iter()
        .find(|w| w.name() == window_name)
        .unwrap_or(Window::Stride);
    let present: Vec<(&AggregateCurve, &crate::energetics::AggregateSeries)> = curves
        .iter()
        .filter_map(|c| window.pick(c).map(|s| (*c, s)))
        .collect();
    let mut out = String::from("percent");
    for (c, _) in &present {
        let l = c.channel.label();
        let _ = write!(out, ",{l}_mean,{l}_sd");
    }
    out.push('\n');
    let Some((_, first)) = present.first() else {
        return out;
    };
    for (i, p) in first.percent.iter().enumerate() {
        out.push_str(&fixed(*p, 2));
        for (_, s) in &present {
            let _ = write!(out, ",{},{}", fixed(s.mean[i], 6), fixed(s.sd[i], 6));
        }
        out.push('\n');
    }
    out
}

fn group_name(j: Option<JointKind>) -> String {
    joint_name(j, "ground")
}

/// Writes the full report set into `out_dir` and returns the written paths
/// in order:
///
/// * `phases.csv`, `energy.csv`, `energy_fractions.csv`
/// * `extrema_stance.csv`, `extrema_swing.csv`
/// * `curves/<window>/<joint>.csv` for stride, stance and swing windows
/// * `plots/<joint>_<quantity>.svg` of the stride means
pub fn write_reports(report: &GroupReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    create_dir(out_dir)?;
    let mut written = Vec::new();
    let mut put = |rel: &str, text: &str| -> Result<()> {
        let path = out_dir.join(rel);
        if let Some(parent) = path.parent() {
            create_dir(parent)?;
        }
        write_text(&path, text)?;
        written.push(path);
        Ok(())
    };
    put("phases.csv", &phases_csv(&report.trials))?;
    put("energy.csv", &energy_table_csv(&report.energy))?;
    put(
        "energy_fractions.csv",
        &energy_fractions_csv(&report.fractions),
    )?;
    put("extrema_stance.csv", &extrema_csv(&report.extrema_stance))?;
    put("extrema_swing.csv", &extrema_csv(&report.extrema_swing))?;

    let mut groups: Vec<Option<JointKind>> = report.joints.iter().map(|&k| Some(k)).collect();
    if report.curves.iter().any(|c| c.channel.joint.is_none()) {
        groups.push(None);
    }
    for &g in &groups {
        let members: Vec<&AggregateCurve> = report
            .curves
            .iter()
            .filter(|c| c.channel.joint == g)
            .collect();
        for w in Window::ALL {
            put(
                &format!("curves/{}/{}.csv", w.name(), group_name(g)),
                &curve_table_csv(&members, w.name()),
            )?;
        }
        let quantities: Vec<Quantity> = {
            let mut q: Vec<Quantity> = members.iter().map(|c| c.channel.quantity).collect();
            q.dedup();
            q
        };
        for q in quantities {
            let of_q: Vec<&AggregateCurve> = members
                .iter()
                .copied()
                .filter(|c| c.channel.quantity == q)
                .collect();
            let series: Vec<PlotSeries> = of_q
                .iter()
                .map(|c| PlotSeries {
                    label: c.channel.axis_label(),
                    values: &c.stride.mean,
                })
                .collect();
            let title = format!("{} {}", group_name(g), q.name().replace('_', " "));
            let svg = line_plot_svg(
                &title,
                q.unit(),
                &of_q[0].stride.percent,
                &series,
                Some(report.stance_end_percent),
            );
            put(&format!("plots/{}_{}.svg", group_name(g), q.name()), &svg)?;
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::PhaseEvents;
    use crate::energetics::{
        energy_fractions, EnergySummary, EnergyTerms, JointEnergy, PhaseEnergy,
    };
    use crate::pipeline::GroupReport;

    fn terms(g: f64, a: f64) -> EnergyTerms {
        EnergyTerms {
            generated: g,
            absorbed: a,
        }
    }

    /// Combined energies of reference group means (J/kg).
    fn reference_summary() -> EnergySummary {
        let rows = [
            (JointKind::Elbow, 1.3325, 0.4154, 0.1234, 0.5207),
            (JointKind::Carpus, 0.0698, 0.0351, 0.0974, 0.0071),
            (JointKind::Fetlock, 0.2266, 0.1664, 0.0171, 0.0021),
            (JointKind::Pastern, 0.0214, 0.0207, 0.0008, 0.0005),
            (JointKind::Coffin, 0.0414, 0.0425, 0.0010, 0.0007),
        ];
        let joints = rows
            .iter()
            .map(|&(kind, sg, sa, wg, wa)| {
                let e = PhaseEnergy {
                    stance: terms(sg, sa),
                    swing: terms(wg, wa),
                };
                JointEnergy {
                    kind,
                    rotation_axes: [PhaseEnergy::default(); 3],
                    translation_axes: [PhaseEnergy::default(); 3],
                    rotations: e,
                    translations: PhaseEnergy::default(),
                    combined: e,
                }
            })
            .collect();
        EnergySummary {
            phases: PhaseEvents {
                stride_start: 0.0,
                stance_start: 0.0,
                stance_end: 0.3,
                stride_end: 0.7,
            },
            joints,
        }
    }

    #[test]
    fn reference_energy_row() {
        let rows = EnergyRow::from_summaries(&[reference_summary()]).unwrap();
        let csv = energy_table_csv(&rows);
        assert!(
            csv.lines()
                .any(|l| l == "combined,stance,elbow,1.3325,0.0000,-0.4154,0.0000,0.9171,0.0000"),
            "{csv}"
        );
        let fr = energy_fractions_csv(&energy_fractions(&reference_summary()));
        assert!(
            fr.lines().any(|l| l.starts_with("combined,elbow,78.8,")),
            "{fr}"
        );
    }

    #[test]
    fn empty_joint_list_gives_header_only_tables() {
        let report = GroupReport {
            joints: vec![],
            trials: vec![],
            stance_end_percent: 40.0,
            curves: vec![],
            extrema_stance: ExtremaReport {
                window: "stance".into(),
                rows: vec![],
            },
            extrema_swing: ExtremaReport {
                window: "swing".into(),
                rows: vec![],
            },
            energy: vec![],
            fractions: vec![],
        };
        let dir = tempfile::tempdir().unwrap();
        let files = write_reports(&report, dir.path()).unwrap();
        assert_eq!(files.len(), 5);
        for f in files {
            let text = std::fs::read_to_string(f).unwrap();
            assert_eq!(text.lines().count(), 1, "{text}");
        }
    }

    #[test]
    fn negative_zero_is_not_printed() {
        assert_eq!(fixed(-0.00001, 4), "0.0000");
        assert_eq!(fixed(-0.5, 1), "-0.5");
        assert_eq!(fixed(f64::NAN, 2), "NA");
    }
}
