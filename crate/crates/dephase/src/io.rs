// Copyright 2026 The dephase Authors
// SPDX-License-Identifier: Apache-2.0

//! CSV and JSON output.
//!
//! Numbers are written with 17 significant digits so they round-trip
//! exactly. Files of one command are staged as temporaries in the output
//! directory and renamed into place only after all of them were produced.

use std::io::Write;
use std::path::{Path, PathBuf};

use dephase_core::lab::{SweepDataset, SweepRow};
use dephase_core::spectrum::SampledSpectrum;
use serde::Serialize;
use tempfile::NamedTempFile;

/// Round-trip-safe decimal: `d.dddddddddddddddde±x`, or `NaN`/`inf`/`-inf`.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub fn csv_bytes(headers: &[&str], rows: &[Vec<f64>]) -> std::io::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(headers)?;
    for row in rows {
        if row.len() != headers.len() {
            return Err(std::io::Error::new(std::io::ErrorKind::InvalidInput, "row width does not match header"));
        }
        w.write_record(row.iter().map(|&x| format_number(x)))?;
    }
    w.into_inner().map_err(|e| e.into_error())
}

/// Pretty JSON with a trailing newline.
pub fn json_bytes<T: Serialize>(value: &T) -> std::io::Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

/// Reads a CSV written by [`csv_bytes`].
pub fn read_csv(path: &Path) -> std::io::Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record?;
        let row = record
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e)))
            .collect::<std::io::Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((headers, rows))
}

pub const SPECTRUM_HEADERS: [&str; 2] = ["omega_rad_per_s", "density"];

pub fn spectrum_rows(s: &SampledSpectrum) -> Vec<Vec<f64>> {
    s.grid().iter().zip(s.values()).map(|(&w, &v)| vec![w, v]).collect()
}

fn invalid(msg: impl std::fmt::Display) -> std::io::Error {
    std::io::Error::new(std::io::ErrorKind::InvalidData, msg.to_string())
}

fn column(headers: &[String], name: &str) -> Option<usize> {
    headers.iter().position(|h| h == name)
}

/// Reads a two-column spectrum CSV and normalizes it to unit integral.
pub fn read_spectrum(path: &Path) -> std::io::Result<SampledSpectrum> {
    let (headers, rows) = read_csv(path)?;
    let (Some(w), Some(d)) = (column(&headers, SPECTRUM_HEADERS[0]), column(&headers, SPECTRUM_HEADERS[1])) else {
        return Err(invalid(format!("expected columns {SPECTRUM_HEADERS:?}, got {headers:?}")));
    };
    let grid = rows.iter().map(|r| r[w]).collect();
    let values = rows.iter().map(|r| r[d]).collect();
    SampledSpectrum::from_unnormalized(grid, values).map_err(invalid)
}

/// Reads a sweep CSV back. `control`, `value` and `stderr` are required;
/// `exact` and `measure` are picked up when present. Rows with a NaN value
/// are marked failed; the messages live in the JSON sidecar.
pub fn read_sweep(path: &Path) -> std::io::Result<SweepDataset> {
    let (headers, rows) = read_csv(path)?;
    let (Some(c), Some(v), Some(s)) =
        (column(&headers, "control"), column(&headers, "value"), column(&headers, "stderr"))
    else {
        return Err(invalid(format!("sweep CSV needs control, value and stderr columns, got {headers:?}")));
    };
    let (exact, measure) = (column(&headers, "exact"), column(&headers, "measure"));
    let rows = rows
        .iter()
        .map(|r| SweepRow {
            control: r[c],
            value: r[v],
            stderr: r[s],
            exact: exact.map_or(f64::NAN, |i| r[i]),
            measure: measure.map(|i| r[i]),
            failure: r[v].is_nan().then(|| "see metadata".to_string()),
        })
        .collect();
    Ok(SweepDataset { rows })
}

/// Output files written to temporaries and renamed together on commit.
pub struct StagedOutput {
    dir: PathBuf,
    files: Vec<(NamedTempFile, PathBuf)>,
}

impl StagedOutput {
    pub fn new(dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn add(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        let target = self.dir.join(name);
        let parent = target.parent().unwrap_or(&self.dir).to_path_buf();
        std::fs::create_dir_all(&parent)?;
        let mut tmp = NamedTempFile::new_in(&parent)?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_all()?;
        self.files.push((tmp, target));
        Ok(())
    }

    pub fn add_csv(&mut self, name: &str, headers: &[&str], rows: &[Vec<f64>]) -> std::io::Result<()> {
        self.add(name, &csv_bytes(headers, rows)?)
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<()> {
        self.add(name, &json_bytes(value)?)
    }

    /// Renames every staged file into place; returns the final paths.
    pub fn commit(self) -> std::io::Result<Vec<PathBuf>> {
        let mut out = Vec::with_capacity(self.files.len());
        for (tmp, target) in self.files {
            tmp.persist(&target).map_err(|e| e.error)?;
            out.push(target);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.0, -0.0, 1.0 / 3.0, 6.02214076e23, 5e-324, f64::MAX, -2.5e-17] {
            let s = format_number(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(format_number(0.5), "5.0000000000000000e-1");
        assert!(format_number(f64::NAN).parse::<f64>().unwrap().is_nan());
    }

    #[test]
    fn csv_round_trip_and_staging() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![vec![0.0, 0.1, f64::NAN], vec![1.0, 2.0 / 3.0, 1e-300]];
        let mut staged = StagedOutput::new(dir.path()).unwrap();
        staged.add_csv("a.csv", &["control", "value", "stderr"], &rows).unwrap();
        assert!(!dir.path().join("a.csv").exists());
        staged.commit().unwrap();
        let (h, back) = read_csv(&dir.path().join("a.csv")).unwrap();
        assert_eq!(h, ["control", "value", "stderr"]);
        assert_eq!(back[1], rows[1]);
        assert!(back[0][2].is_nan());
    }

    #[test]
    fn dropped_stage_leaves_nothing() {
        let dir = tempfile::tempdir().unwrap();
        {
            let mut staged = StagedOutput::new(dir.path()).unwrap();
            staged.add("x.json", b"{}").unwrap();
        }
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn spectrum_and_sweep_files_read_back() {
        let dir = tempfile::tempdir().unwrap();
        let m = dephase_core::spectrum::GaussianMixtureSpectrum::two_peak(2.68e15, 1.6e13, 1.8e12, 0.5).unwrap();
        let grid: Vec<f64> = (0..=400).map(|i| 2.66e15 + 1e11 * i as f64).collect();
        let s = m.sample(&grid).unwrap();
        let mut staged = StagedOutput::new(dir.path()).unwrap();
        staged.add_csv("s.csv", &SPECTRUM_HEADERS, &spectrum_rows(&s)).unwrap();
        let rows = vec![vec![0.0, 0.9, 0.01, 0.91, 0.2], vec![1.0, f64::NAN, f64::NAN, 0.5, 0.0]];
        staged.add_csv("w.csv", &["control", "value", "stderr", "exact", "measure"], &rows).unwrap();
        staged.commit().unwrap();

        let back = read_spectrum(&dir.path().join("s.csv")).unwrap();
        assert_eq!(back.grid(), s.grid());
        for (a, b) in back.values().iter().zip(s.values()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-30));
        }
        let sweep = read_sweep(&dir.path().join("w.csv")).unwrap();
        assert_eq!(sweep.rows[0].measure, Some(0.2));
        assert!(sweep.rows[0].failure.is_none() && sweep.rows[1].failure.is_some());
        assert!(read_spectrum(&dir.path().join("w.csv")).is_err());
    }

    #[test]
    fn mixture_json_uses_centers_weights_width() {
        let m = dephase_core::spectrum::GaussianMixtureSpectrum::two_peak(2.68e15, 1.6e13, 1.8e12, 1.0).unwrap();
        let v = serde_json::to_value(&m).unwrap();
        assert_eq!(v["width"], 1.8e12);
        assert_eq!(v["weights"], serde_json::json!([0.5, 0.5]));
        let back: dephase_core::spectrum::GaussianMixtureSpectrum = serde_json::from_value(v).unwrap();
        assert_eq!(back, m);
        let bad = serde_json::json!({"centers": [1.0, 2.0], "weights": [1.0], "width": 1.0});
        assert!(serde_json::from_value::<dephase_core::spectrum::GaussianMixtureSpectrum>(bad).is_err());
    }

    #[test]
    fn ragged_rows_are_refused() {
        assert!(csv_bytes(&["a", "b"], &[vec![1.0]]).is_err());
    }
}
