//! Artifact formats: trajectory CSV, snapshot CSV, two-column plot data.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::discretization::Grid;
use crate::error::Result;
use crate::record::{Snapshot, TrajectoryRecord};

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

type Column = fn(&crate::record::Sample) -> f64;

pub const TRAJECTORY_HEADER: &str = "t,norm_k0p2,norm_2,norm_inf,w1p,seminorm_int_f";

/// One row per sample; `seminorm_int_f` holds ∫_Ω f(u).
pub fn trajectory_csv(record: &TrajectoryRecord) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    for k in &record.extra_exponents {
        write!(out, ",norm_{k}").unwrap();
    }
    out.push('\n');
    for s in &record.samples {
        let cols = [s.t, s.norm_k0p2, s.norm_2, s.norm_inf, s.w1p, s.int_f];
        let row: Vec<String> = cols
            .iter()
            .chain(&s.extra_norms)
            .map(|&v| fmt_num(v))
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Interior node values with coordinates: `x,u` in 1D, `x,y,u` in 2D.
pub fn snapshot_csv(grid: &Grid, snapshot: &Snapshot) -> String {
    let mut out = String::from(if grid.dim() == 1 { "x,u\n" } else { "x,y,u\n" });
    for (idx, &u) in snapshot.values.iter().enumerate() {
        let x = grid.coords(idx);
        if grid.dim() == 1 {
            writeln!(out, "{},{}", fmt_num(x[0]), fmt_num(u)).unwrap();
        } else {
            writeln!(out, "{},{},{}", fmt_num(x[0]), fmt_num(x[1]), fmt_num(u)).unwrap();
        }
    }
    out
}

/// Whitespace-separated two-column data.
pub fn dat(rows: &[(f64, f64)]) -> String {
    let mut out = String::new();
    for &(a, b) in rows {
        writeln!(out, "{} {}", fmt_num(a), fmt_num(b)).unwrap();
    }
    out
}

pub(crate) fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

/// trajectory.csv, snapshots/ and (optionally) plot/ for one record.
pub(crate) fn write_record(dir: &Path, record: &TrajectoryRecord, plot: bool) -> Result<()> {
    write(&dir.join("trajectory.csv"), &trajectory_csv(record))?;
    if let Some(grid) = &record.grid {
        for (i, snap) in record.snapshots.iter().enumerate() {
            write(
                &dir.join("snapshots").join(format!("snapshot_{i:05}.csv")),
                &snapshot_csv(grid, snap),
            )?;
        }
    }
    if plot {
        let series: [(&str, Column); 5] = [
            ("norm_k0p2", |s| s.norm_k0p2),
            ("norm_2", |s| s.norm_2),
            ("norm_inf", |s| s.norm_inf),
            ("w1p", |s| s.w1p),
            ("int_f", |s| s.int_f),
        ];
        for (name, get) in series {
            let rows: Vec<(f64, f64)> = record.samples.iter().map(|s| (s.t, get(s))).collect();
            write(&dir.join("plot").join(format!("{name}.dat")), &dat(&rows))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::Sample;

    #[test]
    fn number_format_round_trips() {
        for x in [
            0.1,
            1.0 / 3.0,
            -2.5e-300,
            6.02214076e23,
            f64::MAX,
            f64::MIN_POSITIVE,
        ] {
            let s = fmt_num(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(fmt_num(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn trajectory_header_and_extras() {
        let mut rec = TrajectoryRecord::new(2.0, 0.0, vec![4.0, 2.5]);
        rec.samples.push(Sample {
            t: 0.0,
            norm_k0p2: 1.0,
            norm_2: 1.0,
            norm_inf: 2.0,
            extra_norms: vec![3.0, 4.0],
            w1p: 5.0,
            int_f: 6.0,
            source_max: 7.0,
        });
        let csv = trajectory_csv(&rec);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,norm_k0p2,norm_2,norm_inf,w1p,seminorm_int_f,norm_4,norm_2.5"
        );
        let row: Vec<f64> = lines
            .next()
            .unwrap()
            .split(',')
            .map(|v| v.parse().unwrap())
            .collect();
        assert_eq!(row, vec![0.0, 1.0, 1.0, 2.0, 5.0, 6.0, 3.0, 4.0]);
        assert!(lines.next().is_none());
    }

    #[test]
    fn snapshot_layout_2d() {
        let g = Grid::new_2d(2, 1, 3.0, 2.0).unwrap();
        let csv = snapshot_csv(
            &g,
            &Snapshot {
                t: 0.0,
                values: vec![1.0, 2.0],
            },
        );
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "x,y,u");
        assert_eq!(lines.len(), 3);
        let second: Vec<f64> = lines[2].split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(second, vec![2.0, 1.0, 2.0]);
    }

    #[test]
    fn dat_two_columns() {
        let text = dat(&[(0.0, 1.0), (0.5, -2.0)]);
        assert!(text.lines().all(|l| l.split_whitespace().count() == 2));
    }
}
