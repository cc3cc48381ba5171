//! CSV reports: summary metrics, per-timestep error curves and snapshot
//! profiles.

use std::path::Path;

use kdvnet_core::eval::MetricsReport;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub model: String,
    pub protocol: String,
    pub mae: f64,
    pub rmse: f64,
    pub rse: f64,
    pub n: usize,
}

impl From<&MetricsReport> for MetricsRow {
    fn from(r: &MetricsReport) -> Self {
        Self {
            model: r.model.clone(),
            protocol: r.protocol.tag().to_string(),
            mae: r.mae,
            rmse: r.rmse,
            rse: r.rse,
            n: r.samples,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: f64,
    pub mae: f64,
}

/// Curve points for rows `1..=curve.len()` spaced `dt` apart.
pub fn curve_points(curve: &[f64], dt: f64) -> Vec<CurvePoint> {
    curve
        .iter()
        .enumerate()
        .map(|(i, &mae)| CurvePoint {
            t: (i + 1) as f64 * dt,
            mae,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnapshotPoint {
    pub t: f64,
    pub x: f64,
    pub truth: f64,
    pub pred: f64,
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => Error::Malformed {
            format: "csv",
            detail: format!("{}: {other:?}", path.display()),
        },
    }
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| csv_err(path, e))).collect()
}
