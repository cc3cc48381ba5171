//! Error metrics and the two evaluation protocols.
//!
//! E1 predicts the whole trajectory in one shot. E2 rolls a short-horizon
//! model forward in chunks; the last predicted row of each chunk becomes
//! the next initial condition and is not repeated in the output.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::kdv::{integrate, Dataset, GridSpec, PdeParams, Split};
use crate::math::{fabs, sqrt};
use crate::{Error, Result};

/// Snapshot times used for qualitative comparisons.
pub const SNAPSHOT_TIMES: [f64; 4] = [1.25, 2.5, 3.75, 5.0];

fn check_pair(y: &[f64], yhat: &[f64]) -> Result<()> {
    if y.len() != yhat.len() {
        return Err(Error::shape("metric operands", y.len(), yhat.len()));
    }
    if y.is_empty() {
        return Err(Error::invalid("metrics need at least one element"));
    }
    Ok(())
}

pub fn mae(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_pair(y, yhat)?;
    Ok(y.iter().zip(yhat).map(|(a, b)| fabs(a - b)).sum::<f64>() / y.len() as f64)
}

pub fn rmse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_pair(y, yhat)?;
    let mse = y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64;
    Ok(sqrt(mse))
}

/// Squared error relative to the spread of `y` around its global mean.
pub fn rse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_pair(y, yhat)?;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let den: f64 = y.iter().map(|a| (a - mean) * (a - mean)).sum();
    if den == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let num: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(num / den)
}

/// Mean absolute error per time row of `[samples, nt, nx]` tensors.
pub fn per_timestep_mae(y: &[f64], yhat: &[f64], nt: usize, nx: usize) -> Result<Vec<f64>> {
    check_pair(y, yhat)?;
    if nt == 0 || nx == 0 || !y.len().is_multiple_of(nt * nx) {
        return Err(Error::shape("per_timestep_mae", nt * nx, y.len()));
    }
    let samples = y.len() / (nt * nx);
    let mut out = vec![0.0; nt];
    for (a, b) in y.chunks_exact(nt * nx).zip(yhat.chunks_exact(nt * nx)) {
        for t in 0..nt {
            let row = t * nx..(t + 1) * nx;
            out[t] += a[row.clone()]
                .iter()
                .zip(&b[row])
                .map(|(p, q)| fabs(p - q))
                .sum::<f64>();
        }
    }
    let n = (samples * nx) as f64;
    out.iter_mut().for_each(|v| *v /= n);
    Ok(out)
}

/// Least-squares slope of `curve[i]` against `t_i = (i + 1) dt`, using only
/// points with `t_from <= t_i <= t_to`.
pub fn curve_slope(curve: &[f64], dt: f64, t_from: f64, t_to: f64) -> Result<f64> {
    let tol = 1e-9 * dt;
    let pts: Vec<(f64, f64)> = curve
        .iter()
        .enumerate()
        .map(|(i, &v)| ((i + 1) as f64 * dt, v))
        .filter(|(t, _)| *t >= t_from - tol && *t <= t_to + tol)
        .collect();
    if pts.len() < 2 {
        return Err(Error::invalid("slope needs at least two points in range"));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mv = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - mv)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    Ok(sxy / sxx)
}

/// Row index (1-based step count) of a physical time on the recording grid.
pub fn snapshot_row(t: f64, dt: f64) -> usize {
    libm::round(t / dt) as usize
}

/// Anything that maps initial conditions to trajectories in physical units.
pub trait Predictor {
    /// Number of predicted rows (excluding the initial condition).
    fn horizon(&self) -> usize;
    fn nx(&self) -> usize;
    /// `u0: [batch, nx]` → `[batch, horizon, nx]`.
    fn predict(&self, u0: &[f64], batch: usize) -> Result<Vec<f64>>;
}

impl<P: Predictor + ?Sized> Predictor for &P {
    fn horizon(&self) -> usize {
        (**self).horizon()
    }
    fn nx(&self) -> usize {
        (**self).nx()
    }
    fn predict(&self, u0: &[f64], batch: usize) -> Result<Vec<f64>> {
        (**self).predict(u0, batch)
    }
}

fn first_non_finite(v: &[f64]) -> Option<usize> {
    v.iter().position(|x| !x.is_finite())
}

pub fn predict_oneshot<P: Predictor + ?Sized>(model: &P, u0: &[f64]) -> Result<Vec<f64>> {
    if u0.len() != model.nx() {
        return Err(Error::shape("initial condition", model.nx(), u0.len()));
    }
    let out = model.predict(u0, 1)?;
    if let Some(index) = first_non_finite(&out) {
        return Err(Error::NonFinite {
            what: "prediction",
            index,
        });
    }
    Ok(out)
}

/// Chains `n_chunks` predictions of `chunk_len` rows each.
pub fn rollout_recursive<P: Predictor + ?Sized>(
    model: &P,
    u0: &[f64],
    chunk_len: usize,
    n_chunks: usize,
) -> Result<Vec<f64>> {
    if model.horizon() != chunk_len {
        return Err(Error::invalid(format!(
            "model horizon {} does not match chunk length {chunk_len}",
            model.horizon()
        )));
    }
    let nx = model.nx();
    let mut ic = u0.to_vec();
    let mut out = Vec::with_capacity(chunk_len * n_chunks * nx);
    for chunk in 0..n_chunks {
        let pred = predict_oneshot(model, &ic).map_err(|e| Error::Chunk {
            chunk,
            source: alloc::boxed::Box::new(e),
        })?;
        ic.copy_from_slice(&pred[(chunk_len - 1) * nx..]);
        out.extend(pred);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    /// One-shot prediction of the whole horizon.
    OneShot,
    /// Chained predictions of `chunk_len` rows.
    Recursive { chunk_len: usize, n_chunks: usize },
}

impl Protocol {
    pub fn e1() -> Self {
        Protocol::OneShot
    }

    pub fn e2() -> Self {
        Protocol::Recursive {
            chunk_len: 50,
            n_chunks: 4,
        }
    }

    /// Chunk arithmetic for a model of `horizon` rows covering `target` rows.
    pub fn chained(horizon: usize, target: usize) -> Result<Self> {
        if horizon == 0 || !target.is_multiple_of(horizon) {
            return Err(Error::invalid(format!(
                "target {target} is not a multiple of horizon {horizon}"
            )));
        }
        Ok(Protocol::Recursive {
            chunk_len: horizon,
            n_chunks: target / horizon,
        })
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Protocol::OneShot => "E1",
            Protocol::Recursive { .. } => "E2",
        }
    }

    pub fn rows(&self, horizon: usize) -> usize {
        match *self {
            Protocol::OneShot => horizon,
            Protocol::Recursive {
                chunk_len,
                n_chunks,
            } => chunk_len * n_chunks,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub model: String,
    pub protocol: Protocol,
    pub mae: f64,
    pub rmse: f64,
    pub rse: f64,
    pub per_timestep_mae: Vec<f64>,
    pub samples: usize,
}

/// Runs the protocol on `indices` of the dataset and returns predictions
/// `[samples, rows, nx]` alongside the matching ground truth.
pub fn predict_split<P: Predictor + ?Sized>(
    model: &P,
    dataset: &Dataset,
    indices: &[usize],
    protocol: Protocol,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let nx = dataset.grid.nx;
    if model.nx() != nx {
        return Err(Error::shape("model grid width", nx, model.nx()));
    }
    let rows = protocol.rows(model.horizon());
    if rows > dataset.grid.nt_record {
        return Err(Error::invalid(format!(
            "protocol needs {rows} rows but trajectories hold {}",
            dataset.grid.nt_record
        )));
    }
    let mut pred = Vec::with_capacity(indices.len() * rows * nx);
    let mut truth = Vec::with_capacity(indices.len() * rows * nx);
    for &i in indices {
        let traj = &dataset.trajectories[i];
        let wrap = |e| Error::Sample {
            index: i,
            source: alloc::boxed::Box::new(e),
        };
        let p = match protocol {
            Protocol::OneShot => predict_oneshot(model, traj.initial()).map_err(wrap)?,
            Protocol::Recursive {
                chunk_len,
                n_chunks,
            } => rollout_recursive(model, traj.initial(), chunk_len, n_chunks).map_err(wrap)?,
        };
        pred.extend(p);
        truth.extend_from_slice(traj.target(rows));
    }
    Ok((pred, truth))
}

/// Aggregates metrics from matching prediction / truth tensors.
pub fn report(
    model: &str,
    protocol: Protocol,
    pred: &[f64],
    truth: &[f64],
    rows: usize,
    nx: usize,
) -> Result<MetricsReport> {
    let curve = per_timestep_mae(truth, pred, rows, nx)?;
    Ok(MetricsReport {
        model: String::from(model),
        protocol,
        mae: mae(truth, pred)?,
        rmse: rmse(truth, pred)?,
        rse: rse(truth, pred)?,
        per_timestep_mae: curve,
        samples: truth.len() / (rows * nx),
    })
}

/// Evaluates `model` on the test split.
pub fn evaluate<P: Predictor + ?Sized>(
    model: &P,
    name: &str,
    dataset: &Dataset,
    protocol: Protocol,
) -> Result<MetricsReport> {
    let test = dataset.indices(Split::Test);
    if test.is_empty() {
        return Err(Error::invalid("test split is empty"));
    }
    let (pred, truth) = predict_split(model, dataset, &test, protocol)?;
    report(name, protocol, &pred, &truth, protocol.rows(model.horizon()), dataset.grid.nx)
}

/// Baseline predictors used for plumbing checks.
pub mod stubs {
    use super::*;

    /// Repeats the initial condition for every row.
    pub struct Persistence {
        pub horizon: usize,
        pub nx: usize,
    }

    impl Predictor for Persistence {
        fn horizon(&self) -> usize {
            self.horizon
        }
        fn nx(&self) -> usize {
            self.nx
        }
        fn predict(&self, u0: &[f64], batch: usize) -> Result<Vec<f64>> {
            let mut out = Vec::with_capacity(batch * self.horizon * self.nx);
            for s in u0.chunks_exact(self.nx) {
                for _ in 0..self.horizon {
                    out.extend_from_slice(s);
                }
            }
            Ok(out)
        }
    }

    /// Runs the reference solver.
    pub struct ExactSolver {
        pub grid: GridSpec,
        pub pde: PdeParams,
        pub substeps: usize,
    }

    impl Predictor for ExactSolver {
        fn horizon(&self) -> usize {
            self.grid.nt_record
        }
        fn nx(&self) -> usize {
            self.grid.nx
        }
        fn predict(&self, u0: &[f64], _batch: usize) -> Result<Vec<f64>> {
            let mut out = Vec::new();
            for s in u0.chunks_exact(self.grid.nx) {
                let traj = integrate(s, &self.grid, &self.pde, self.substeps)?;
                out.extend_from_slice(traj.target(self.grid.nt_record));
            }
            Ok(out)
        }
    }

    /// Predicts a fixed value everywhere.
    pub struct Constant {
        pub horizon: usize,
        pub nx: usize,
        pub value: f64,
    }

    impl Predictor for Constant {
        fn horizon(&self) -> usize {
            self.horizon
        }
        fn nx(&self) -> usize {
            self.nx
        }
        fn predict(&self, _u0: &[f64], batch: usize) -> Result<Vec<f64>> {
            Ok(vec![self.value; batch * self.horizon * self.nx])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_examples() {
        let (y, p) = ([1.0, 2.0], [1.0, 3.0]);
        assert_eq!(mae(&y, &p).unwrap(), 0.5);
        assert!((rmse(&y, &p).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(mae(&y, &y).unwrap(), 0.0);
        assert_eq!(rmse(&y, &y).unwrap(), 0.0);
        assert_eq!(rse(&y, &y).unwrap(), 0.0);
        assert_eq!(rse(&y, &[1.5, 1.5]).unwrap(), 1.0);
        assert!(matches!(rse(&[2.0, 2.0], &[1.0, 1.0]), Err(Error::ZeroVariance)));
        assert!(mae(&[1.0], &[1.0, 2.0]).is_err());
        assert!(mae(&[], &[]).is_err());
    }

    #[test]
    fn per_timestep_shapes() {
        let y = vec![0.0; 2 * 3 * 4];
        let c = vec![0.25; 2 * 3 * 4];
        assert_eq!(per_timestep_mae(&y, &c, 3, 4).unwrap(), vec![0.25; 3]);
        let mut spike = y.clone();
        for s in 0..2 {
            for x in 0..4 {
                spike[s * 12 + 8 + x] = 1.0;
            }
        }
        assert_eq!(per_timestep_mae(&y, &spike, 3, 4).unwrap(), vec![0.0, 0.0, 1.0]);
        assert!(per_timestep_mae(&y, &c, 5, 4).is_err());
    }

    #[test]
    fn snapshot_rows_on_default_grid() {
        let rows: Vec<usize> = SNAPSHOT_TIMES.iter().map(|&t| snapshot_row(t, 0.025)).collect();
        assert_eq!(rows, vec![50, 100, 150, 200]);
    }

    #[test]
    fn e2_chunk_arithmetic() {
        assert_eq!(
            Protocol::chained(50, 200).unwrap(),
            Protocol::Recursive {
                chunk_len: 50,
                n_chunks: 4
            }
        );
        assert_eq!(Protocol::e2().rows(50), 200);
        assert!(Protocol::chained(60, 200).is_err());
    }

    #[test]
    fn slope_of_a_line() {
        let curve: Vec<f64> = (1..=200).map(|i| 3.0 * i as f64 * 0.025 + 1.0).collect();
        let s = curve_slope(&curve, 0.025, 2.5, 5.0).unwrap();
        assert!((s - 3.0).abs() < 1e-10);
    }
}
