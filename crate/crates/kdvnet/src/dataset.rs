//! The `KDVD` dataset file.
//!
//! Layout (little-endian): magic `KDVD`, `u16` major, `u16` minor, `u64` N,
//! `u32` nt_record, `u32` nx, `f64` period, dt_record, eta, gamma, `u64`
//! master seed; then per sample the four soliton parameters
//! `(k1, k2, d1, d2)` as `f64`, a `u8` split tag and `(nt_record + 1) * nx`
//! field values; finally a CRC-32 of all preceding bytes.

use std::fs;
use std::path::Path;

use kdvnet_core::kdv::{self, Dataset, GridSpec, PdeParams, SolitonParams, Split, Trajectory};
use rayon::prelude::*;

use crate::binfmt::{check_crc, check_header, Reader, Writer};
use crate::error::{Error, IoContext, Result};

pub const MAGIC: &[u8; 4] = b"KDVD";
/// Minor revisions keep the layout; readers accept any minor of the
/// current major and warn when it differs from theirs.
pub const VERSION: (u16, u16) = (1, 1);
const FORMAT: &str = "dataset";
const HEADER_BYTES: u64 = 8 + 8 + 4 + 4 + 4 * 8 + 8;

/// A decoded file plus any compatibility warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded<T> {
    pub value: T,
    pub warnings: Vec<String>,
}

pub(crate) fn minor_warning(format: &str, minor: u16, current: (u16, u16)) -> Option<String> {
    (minor != current.1).then(|| {
        format!(
            "{format} file has version {}.{minor}; this build writes {}.{}",
            current.0, current.0, current.1
        )
    })
}

/// Generates `n` samples in parallel on the current rayon pool. Each sample
/// draws from its own keyed stream, so the result does not depend on the
/// thread count and equals `kdv::generate_dataset`.
pub fn generate(n: usize, grid: &GridSpec, pde: &PdeParams, master_seed: u64, substeps: usize) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Config("dataset size must be at least 1".into()));
    }
    grid.validate()?;
    pde.validate()?;
    let trajectories = (0..n as u64)
        .into_par_iter()
        .map(|i| kdv::simulate_sample(i, grid, pde, master_seed, substeps))
        .collect::<kdvnet_core::Result<Vec<_>>>()?;
    Ok(Dataset {
        grid: *grid,
        pde: *pde,
        master_seed,
        trajectories,
        splits: kdv::assign_splits(n, master_seed),
    })
}

pub fn encode(ds: &Dataset) -> Vec<u8> {
    let g = &ds.grid;
    let mut w = Writer::new(MAGIC, VERSION);
    w.u64(ds.len() as u64);
    w.u32(g.nt_record as u32);
    w.u32(g.nx as u32);
    w.f64(g.period);
    w.f64(g.dt_record);
    w.f64(ds.pde.eta);
    w.f64(ds.pde.gamma);
    w.u64(ds.master_seed);
    for (t, split) in ds.trajectories.iter().zip(&ds.splits) {
        let p = t.params.map_or([f64::NAN; 4], |p| [p.k1, p.k2, p.d1, p.d2]);
        w.f64s(&p);
        w.u8(*split as u8);
        w.f64s(&t.u);
    }
    w.finish()
}

pub fn decode(bytes: &[u8]) -> Result<Loaded<Dataset>> {
    let (_, minor) = check_header(bytes, MAGIC, FORMAT, VERSION.0)?;
    let mut r = Reader::new(bytes, FORMAT);
    let n = r.u64()?;
    let nt_record = r.u32()? as usize;
    let nx = r.u32()? as usize;
    let grid = GridSpec {
        period: r.f64()?,
        nx,
        dt_record: r.f64()?,
        nt_record,
    };
    let pde = PdeParams {
        eta: r.f64()?,
        gamma: r.f64()?,
    };
    let master_seed = r.u64()?;

    let field = (nt_record as u64 + 1) * nx as u64;
    let expected = n
        .checked_mul(33 + 8 * field)
        .and_then(|b| b.checked_add(HEADER_BYTES + 4))
        .ok_or_else(|| r.malformed("sample count overflows"))?;
    let found = bytes.len() as u64;
    if found < expected {
        return Err(Error::Truncated {
            format: FORMAT,
            expected,
            found,
        });
    }
    if found > expected {
        return Err(r.malformed(format!("{} trailing bytes", found - expected)));
    }
    check_crc(bytes, FORMAT)?;
    grid.validate()?;
    pde.validate()?;

    let mut trajectories = Vec::with_capacity(n as usize);
    let mut splits = Vec::with_capacity(n as usize);
    for i in 0..n {
        let p = r.f64s(4)?;
        let tag = r.u8()?;
        let split = Split::from_tag(tag).ok_or_else(|| r.malformed(format!("sample {i}: split tag {tag}")))?;
        let params = (!p.iter().any(|v| v.is_nan())).then(|| SolitonParams {
            k1: p[0],
            k2: p[1],
            d1: p[2],
            d2: p[3],
        });
        trajectories.push(Trajectory {
            u: r.f64s(field as usize)?,
            grid,
            params,
        });
        splits.push(split);
    }
    Ok(Loaded {
        value: Dataset {
            grid,
            pde,
            master_seed,
            trajectories,
            splits,
        },
        warnings: minor_warning(FORMAT, minor, VERSION).into_iter().collect(),
    })
}

pub fn save(ds: &Dataset, path: &Path) -> Result<()> {
    fs::write(path, encode(ds)).at(path)
}

/// Loads a dataset, logging any version warning.
pub fn load(path: &Path) -> Result<Dataset> {
    let bytes = fs::read(path).at(path)?;
    let loaded = decode(&bytes)?;
    for w in &loaded.warnings {
        log::warn!("{}: {w}", path.display());
    }
    Ok(loaded.value)
}
