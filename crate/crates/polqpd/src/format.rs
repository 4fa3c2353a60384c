//! On-disk formats.
//!
//! Grids are CSV with one header row naming coordinates and units, one row
//! per point, last axis fastest. Tomograms start with a `# {json}` line
//! holding the setting and provenance, followed by CSV. Floats are written
//! with `{:e}`, the shortest representation that parses back to the same
//! bits, so reruns produce byte-identical bodies.

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use polqpd_core::grid::{CoordinateSystem, Diagnostics, QpdGrid};
use polqpd_core::measure::{CountPmf, Tomogram, TomogramData, WaveplateSetting};

use crate::error::{CliError, Result};

/// Largest tolerated deviation of a stored pmf's mass from 1.
pub const PMF_MASS_TOLERANCE: f64 = 1e-12;

pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:e}")
    }
}

/// A file about to be written, with its metadata sidecar.
#[derive(Debug, Clone)]
pub struct Output {
    pub path: PathBuf,
    pub body: String,
    pub sidecar: serde_json::Value,
}

impl Output {
    pub fn sidecar_path(&self) -> PathBuf {
        self.path.with_extension("json")
    }

    pub fn write(&self) -> Result<()> {
        if let Some(dir) = self.path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        std::fs::write(&self.path, &self.body).map_err(|e| CliError::io(&self.path, e))?;
        let side = self.sidecar_path();
        let text =
            serde_json::to_string_pretty(&self.sidecar).map_err(|e| CliError::format(&side, e))?;
        std::fs::write(&side, text + "\n").map_err(|e| CliError::io(&side, e))
    }
}

fn csv_body(header: &[String], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    // writing into a Vec cannot fail
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(&r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}

/// Column labels `name[unit]` for a grid's coordinates.
pub fn coordinate_labels(coords: CoordinateSystem, dims: usize) -> Vec<String> {
    let (names, unit): (&[&str], &str) = match (coords, dims) {
        (CoordinateSystem::PhaseSpace, _) => (&["x", "p"], "1"),
        (CoordinateSystem::Normalized, _) => (&["s2", "s3"], "1"),
        (CoordinateSystem::RawStokes, 3) => (&["S1", "S2", "S3"], "photons"),
        (CoordinateSystem::RawStokes, _) => (&["S2", "S3"], "photons"),
    };
    names.iter().map(|n| format!("{n}[{unit}]")).collect()
}

pub fn grid_csv(grid: &QpdGrid, value_label: &str) -> String {
    let mut header = coordinate_labels(grid.coordinates, grid.axes.len());
    header.push(value_label.to_string());
    csv_body(
        &header,
        grid.values.iter().enumerate().map(|(i, v)| {
            let mut row: Vec<String> = grid.point(i).into_iter().map(fmt_f64).collect();
            row.push(fmt_f64(*v));
            row
        }),
    )
}

/// Generic table with pre-labelled columns.
pub fn table_csv(header: &[&str], rows: &[Vec<f64>]) -> String {
    let header: Vec<String> = header.iter().map(|s| s.to_string()).collect();
    csv_body(
        &header,
        rows.iter().map(|r| r.iter().map(|x| fmt_f64(*x)).collect()),
    )
}

pub fn diagnostics_json(d: &Diagnostics) -> serde_json::Value {
    serde_json::json!({
        "normalization_error": d.normalization_error,
        "max_imaginary": d.max_imaginary,
        "boundary_magnitude": d.boundary_magnitude,
        "shot_noise_bound": d.shot_noise_bound,
        "interpolation_error": d.interpolation_error,
    })
}

pub fn grid_summary(grid: &QpdGrid) -> serde_json::Value {
    serde_json::json!({
        "shape": grid.shape(),
        "coordinates": format!("{:?}", grid.coordinates),
        "axes": grid.axes.iter().map(|a| serde_json::json!({"min": a.min(), "max": a.max(), "count": a.count})).collect::<Vec<_>>(),
        "mass": grid.mass(),
        "max": grid.max(),
        "min": grid.min(),
        "jacobian": grid.jacobian,
        "singular_cells": grid.singular_cells.len(),
        "diagnostics": diagnostics_json(&grid.diagnostics),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TomogramHeader {
    theta: f64,
    phi: f64,
    kind: String,
    shots: u64,
    seed: Option<u64>,
    sigma: f64,
}

pub fn tomogram_text(t: &Tomogram) -> String {
    let header = TomogramHeader {
        theta: t.setting.theta(),
        phi: t.setting.phi(),
        kind: match t.data {
            TomogramData::Pmf(_) => "pmf".into(),
            TomogramData::Samples(_) => "samples".into(),
        },
        shots: t.shots,
        seed: t.seed,
        sigma: t.sigma,
    };
    let first = format!(
        "# {}\n",
        serde_json::to_string(&header).expect("header serializes")
    );
    let body = match &t.data {
        TomogramData::Pmf(p) => csv_body(
            &["n".into(), "p".into()],
            p.iter().map(|(n, q)| vec![n.to_string(), fmt_f64(q)]),
        ),
        TomogramData::Samples(s) => csv_body(&["y".into()], s.iter().map(|y| vec![fmt_f64(*y)])),
    };
    first + &body
}

pub fn read_tomogram(path: &Path) -> Result<Tomogram> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut first = String::new();
    reader
        .read_line(&mut first)
        .map_err(|e| CliError::io(path, e))?;
    let json = first
        .trim_end()
        .strip_prefix("# ")
        .ok_or_else(|| CliError::format(path, "missing `# {json}` header line"))?;
    let h: TomogramHeader = serde_json::from_str(json).map_err(|e| CliError::format(path, e))?;
    let setting = WaveplateSetting::new(h.theta, h.phi)?;
    let mut rdr = csv::Reader::from_reader(reader);
    let bad = |e: &dyn std::fmt::Display| CliError::format(path, e.to_string());
    let data = match h.kind.as_str() {
        "pmf" => {
            let mut rows: Vec<(i64, f64)> = Vec::new();
            for rec in rdr.records() {
                let rec = rec.map_err(|e| bad(&e))?;
                let n: i64 = rec.get(0).unwrap_or("").parse().map_err(|e| bad(&e))?;
                let p: f64 = rec.get(1).unwrap_or("").parse().map_err(|e| bad(&e))?;
                rows.push((n, p));
            }
            rows.sort_by_key(|r| r.0);
            let (lo, hi) = match (rows.first(), rows.last()) {
                (Some(a), Some(b)) => (a.0, b.0),
                _ => return Err(CliError::format(path, "empty pmf")),
            };
            let mut probs = vec![0.0; (hi - lo + 1) as usize];
            for (n, p) in rows {
                probs[(n - lo) as usize] += p;
            }
            let pmf = CountPmf { offset: lo, probs };
            if (pmf.total() - 1.0).abs() > PMF_MASS_TOLERANCE {
                return Err(CliError::format(
                    path,
                    format!("pmf mass {} differs from 1", pmf.total()),
                ));
            }
            TomogramData::Pmf(pmf)
        }
        "samples" => {
            let mut ys = Vec::new();
            for rec in rdr.records() {
                let rec = rec.map_err(|e| bad(&e))?;
                ys.push(
                    rec.get(0)
                        .unwrap_or("")
                        .parse::<f64>()
                        .map_err(|e| bad(&e))?,
                );
            }
            if ys.len() as u64 != h.shots {
                return Err(CliError::format(
                    path,
                    format!("{} samples but header says {} shots", ys.len(), h.shots),
                ));
            }
            TomogramData::Samples(ys)
        }
        other => {
            return Err(CliError::format(
                path,
                format!("unknown tomogram kind `{other}`"),
            ))
        }
    };
    Ok(Tomogram {
        setting,
        data,
        shots: h.shots,
        seed: h.seed,
        sigma: h.sigma,
    })
}
