//! Test-split evaluation spread over the rayon pool.

use kdvnet_core::eval::{self, MetricsReport, Predictor, Protocol, SNAPSHOT_TIMES};
use kdvnet_core::kdv::{Dataset, Split};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::report::{curve_points, CurvePoint, SnapshotPoint};

/// Samples per parallel task.
const TASK: usize = 4;

pub struct Evaluation {
    pub report: MetricsReport,
    pub curve: Vec<CurvePoint>,
    /// Profiles of the first test sample at the snapshot times.
    pub snapshots: Vec<SnapshotPoint>,
}

/// Evaluates on the test split. Samples are predicted independently and
/// reassembled in index order, so results do not depend on the pool size.
pub fn evaluate<P: Predictor + Sync>(model: &P, name: &str, ds: &Dataset, protocol: Protocol) -> Result<Evaluation> {
    let test = ds.indices(Split::Test);
    if test.is_empty() {
        return Err(Error::Config("test split is empty".into()));
    }
    let parts = test
        .par_chunks(TASK)
        .map(|idx| eval::predict_split(model, ds, idx, protocol))
        .collect::<kdvnet_core::Result<Vec<_>>>()?;
    let (mut pred, mut truth) = (Vec::new(), Vec::new());
    for (p, t) in parts {
        pred.extend(p);
        truth.extend(t);
    }
    let (grid, rows) = (&ds.grid, protocol.rows(model.horizon()));
    let report = eval::report(name, protocol, &pred, &truth, rows, grid.nx)?;
    let curve = curve_points(&report.per_timestep_mae, grid.dt_record);

    let nx = grid.nx;
    let mut snapshots = Vec::new();
    for &t in &SNAPSHOT_TIMES {
        let row = eval::snapshot_row(t, grid.dt_record);
        if row == 0 || row > rows {
            continue;
        }
        let off = (row - 1) * nx;
        for j in 0..nx {
            snapshots.push(SnapshotPoint {
                t,
                x: grid.x(j),
                truth: truth[off + j],
                pred: pred[off + j],
            });
        }
    }
    Ok(Evaluation {
        report,
        curve,
        snapshots,
    })
}
