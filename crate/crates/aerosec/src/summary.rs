//! Aggregation of `results.csv`.
//!
//! `summary.csv` has one row per axis value with the feasible-run counts,
//! the mean robust and ideal Γ, their ratio, the mean offloaded bits and the
//! worst Monte-Carlo violation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::experiment::fmt;
use crate::{AppError, AppResult};

#[derive(Debug, Clone, PartialEq)]
pub struct AxisSummary {
    pub value: f64,
    pub runs: usize,
    /// Runs where both the robust and the ideal problem were solved.
    pub paired: usize,
    pub robust_gamma: f64,
    pub ideal_gamma: f64,
    /// Mean of the per-seed robust/ideal ratios.
    pub ratio: f64,
    pub offloaded_bits: f64,
    pub ideal_offloaded_bits: f64,
    pub max_violation: f64,
    pub headline: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub preset: String,
    pub axis: String,
    pub rows: Vec<AxisSummary>,
}

impl Summary {
    pub fn headline(&self) -> Option<&AxisSummary> {
        self.rows.iter().find(|r| r.headline)
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "preset {} (axis {})", self.preset, self.axis);
        let _ = writeln!(out, "{:>14} {:>5} {:>16} {:>16} {:>10} {:>14} {:>10}", "value", "runs", "robust_gamma", "ideal_gamma", "ratio", "offloaded_bits", "max_viol");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:>14.6e} {:>2}/{:<2} {:>16.6} {:>16.6} {:>10.6} {:>14.6e} {:>10.6}",
                r.value, r.paired, r.runs, r.robust_gamma, r.ideal_gamma, r.ratio, r.offloaded_bits, r.max_violation
            );
        }
        if let Some(h) = self.headline() {
            let _ = write!(out, "robust/ideal energy ratio: {:.6}", h.ratio);
            if h.ratio < 1.0 {
                out.push_str("  (below 1: the robust solution used less energy than the ideal one)");
            }
            out.push('\n');
        }
        out
    }
}

struct Columns {
    preset: usize,
    axis: usize,
    value: usize,
    headline: usize,
    robust_gamma: usize,
    ideal_gamma: usize,
    ratio: usize,
    offloaded_bits: usize,
    ideal_offloaded_bits: usize,
    max_violation: usize,
}

fn column(headers: &csv::StringRecord, name: &str, path: &Path) -> AppResult<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| AppError::Csv { path: path.into(), line: 1, msg: format!("missing column {name:?}") })
}

fn parse_f64(s: &str) -> Option<f64> {
    match s.trim() {
        "" => Some(f64::NAN),
        t => t.parse().ok(),
    }
}

#[derive(Default)]
struct Acc {
    runs: usize,
    paired: usize,
    robust: f64,
    ideal: f64,
    ratio: f64,
    bits: f64,
    ideal_bits: f64,
    viol: f64,
    headline: bool,
}

/// Reads `dir/results.csv`.
pub fn summarize(dir: &Path) -> AppResult<Summary> {
    let path: PathBuf = dir.join("results.csv");
    let text = fs::read_to_string(&path).map_err(|e| AppError::io(&path, e))?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let csv_err = |line: u64, e: csv::Error| AppError::Csv { path: path.clone(), line, msg: e.to_string() };
    let headers = rdr.headers().map_err(|e| csv_err(1, e))?.clone();
    let c = Columns {
        preset: column(&headers, "preset", &path)?,
        axis: column(&headers, "axis", &path)?,
        value: column(&headers, "value", &path)?,
        headline: column(&headers, "headline", &path)?,
        robust_gamma: column(&headers, "robust_gamma", &path)?,
        ideal_gamma: column(&headers, "ideal_gamma", &path)?,
        ratio: column(&headers, "ratio", &path)?,
        offloaded_bits: column(&headers, "offloaded_bits", &path)?,
        ideal_offloaded_bits: column(&headers, "ideal_offloaded_bits", &path)?,
        max_violation: column(&headers, "max_violation", &path)?,
    };
    let mut groups: BTreeMap<u64, (f64, Acc)> = BTreeMap::new();
    let (mut preset, mut axis) = (String::new(), String::new());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            csv_err(line, e)
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |k: usize, name: &str| -> AppResult<f64> {
            parse_f64(rec.get(k).unwrap_or("")).ok_or_else(|| AppError::Csv {
                path: path.clone(),
                line,
                msg: format!("column {name:?} is not a number"),
            })
        };
        preset = rec.get(c.preset).unwrap_or("").to_string();
        axis = rec.get(c.axis).unwrap_or("").to_string();
        let value = num(c.value, "value")?;
        if !value.is_finite() {
            return Err(AppError::Csv { path: path.clone(), line, msg: "axis value must be finite".into() });
        }
        let (_, a) = groups.entry(value.to_bits()).or_insert_with(|| (value, Acc::default()));
        a.runs += 1;
        a.headline |= rec.get(c.headline) == Some("1");
        let ratio = num(c.ratio, "ratio")?;
        if ratio.is_finite() {
            a.paired += 1;
            a.robust += num(c.robust_gamma, "robust_gamma")?;
            a.ideal += num(c.ideal_gamma, "ideal_gamma")?;
            a.ratio += ratio;
            a.bits += num(c.offloaded_bits, "offloaded_bits")?;
            a.ideal_bits += num(c.ideal_offloaded_bits, "ideal_offloaded_bits")?;
        }
        let v = num(c.max_violation, "max_violation")?;
        if v.is_finite() {
            a.viol = a.viol.max(v);
        }
    }
    if groups.is_empty() {
        return Err(AppError::Csv { path, line: 1, msg: "no runs recorded".into() });
    }
    let mut rows: Vec<AxisSummary> = groups
        .into_values()
        .map(|(value, a)| {
            let n = a.paired as f64;
            let mean = |x: f64| if a.paired == 0 { f64::NAN } else { x / n };
            AxisSummary {
                value,
                runs: a.runs,
                paired: a.paired,
                robust_gamma: mean(a.robust),
                ideal_gamma: mean(a.ideal),
                ratio: mean(a.ratio),
                offloaded_bits: mean(a.bits),
                ideal_offloaded_bits: mean(a.ideal_bits),
                max_violation: a.viol,
                headline: a.headline,
            }
        })
        .collect();
    rows.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(Summary { preset, axis, rows })
}

/// Writes `dir/summary.csv`.
pub fn write_summary(dir: &Path, s: &Summary) -> AppResult<()> {
    let path = dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| AppError::Format { path: path.clone(), msg: e.to_string() })?;
    let head = [
        "preset",
        "axis",
        "value",
        "runs",
        "paired",
        "robust_gamma",
        "ideal_gamma",
        "ratio",
        "offloaded_bits",
        "ideal_offloaded_bits",
        "max_violation",
        "headline",
    ];
    let err = |e: csv::Error| AppError::Format { path: path.clone(), msg: e.to_string() };
    w.write_record(head).map_err(err)?;
    for r in &s.rows {
        w.write_record([
            s.preset.clone(),
            s.axis.clone(),
            fmt(r.value),
            r.runs.to_string(),
            r.paired.to_string(),
            fmt(r.robust_gamma),
            fmt(r.ideal_gamma),
            fmt(r.ratio),
            fmt(r.offloaded_bits),
            fmt(r.ideal_offloaded_bits),
            fmt(r.max_violation),
            u8::from(r.headline).to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| AppError::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::RESULT_COLUMNS;

    fn row(value: f64, seed: u64, robust: f64, ideal: f64) -> String {
        let mut cells = vec![String::new(); RESULT_COLUMNS.len()];
        cells[0] = "p".into();
        cells[1] = "alpha".into();
        cells[2] = fmt(value);
        cells[3] = seed.to_string();
        cells[4] = u8::from(value == 0.95).to_string();
        cells[5] = "converged".into();
        cells[6] = "converged".into();
        cells[9] = fmt(robust);
        cells[10] = fmt(ideal);
        cells[11] = fmt(robust / ideal);
        cells[12] = fmt(1e6);
        cells[13] = fmt(5e5);
        cells[18] = fmt(0.01);
        cells[19] = fmt(0.3);
        cells.join(",")
    }

    fn write(dir: &Path, rows: &[String]) {
        let mut text = RESULT_COLUMNS.join(",");
        for r in rows {
            text.push('\n');
            text.push_str(r);
        }
        text.push('\n');
        fs::write(dir.join("results.csv"), text).unwrap();
    }

    #[test]
    fn single_run_means_equal_the_row() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), &[row(0.95, 0, 12.0, 10.0)]);
        let s = summarize(dir.path()).unwrap();
        assert_eq!(s.rows.len(), 1);
        let r = &s.rows[0];
        assert_eq!((r.robust_gamma, r.ideal_gamma, r.ratio), (12.0, 10.0, 1.2));
        assert_eq!(r.offloaded_bits, 1e6);
        assert!(s.text().contains("robust/ideal energy ratio: 1.200000"));
        write_summary(dir.path(), &s).unwrap();
        assert!(dir.path().join("summary.csv").exists());
    }

    #[test]
    fn groups_by_value() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), &[row(0.9, 0, 10.0, 10.0), row(0.95, 0, 12.0, 10.0), row(0.9, 1, 30.0, 20.0)]);
        let s = summarize(dir.path()).unwrap();
        assert_eq!(s.rows.len(), 2);
        assert_eq!(s.rows[0].value, 0.9);
        assert_eq!(s.rows[0].robust_gamma, 20.0);
        assert_eq!(s.rows[0].ratio, 1.25);
        assert!(s.rows[1].headline);
    }

    #[test]
    fn ratio_below_one_is_flagged() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), &[row(0.95, 0, 9.0, 10.0)]);
        assert!(summarize(dir.path()).unwrap().text().contains("below 1"));
    }

    #[test]
    fn corrupt_files_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(summarize(dir.path()), Err(AppError::Io { .. })));
        let mut bad = row(0.95, 0, 12.0, 10.0);
        bad = bad.replacen("1.200000000000000e0", "abc", 1);
        write(dir.path(), &[row(0.9, 0, 1.0, 1.0), bad]);
        match summarize(dir.path()) {
            Err(AppError::Csv { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        fs::write(dir.path().join("results.csv"), "value,seed\n1,2\n").unwrap();
        assert!(matches!(summarize(dir.path()), Err(AppError::Csv { line: 1, .. })));
    }
}
