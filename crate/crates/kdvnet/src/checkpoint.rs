//! The `NOCK` checkpoint file.
//!
//! Layout (little-endian): magic `NOCK`, `u16` major, `u16` minor, `u64`
//! length of the rest of the file, `u64` config hash, `u32` length and the
//! TOML text of the training configuration, `u32` array count, then per
//! array a `u16` name length, the UTF-8 name, a `u8` dtype (0 = f64), a `u8`
//! rank, `rank` `u64` dimensions and the row-major payload; a `u32` length
//! and the RNG state blob; finally a CRC-32 of all preceding bytes.
//!
//! Weights, optimizer moments, scalers and histories all live in the named
//! array table.

use std::fs;
use std::path::Path;

use kdvnet_core::kdv::GridSpec;
use kdvnet_core::params::Tensor;
use kdvnet_core::rng::RngState;
use kdvnet_core::training::{Checkpoint, TrainedModel, TrainingConfig};

use crate::binfmt::{check_crc, check_header, Reader, Writer};
use crate::dataset::{minor_warning, Loaded};
use crate::error::{Error, IoContext, Result};

pub const MAGIC: &[u8; 4] = b"NOCK";
pub const VERSION: (u16, u16) = (1, 1);
const FORMAT: &str = "checkpoint";
const DTYPE_F64: u8 = 0;
/// Array holding `[period, nx, dt_record, nt_record]` of the training data.
pub const GRID_ARRAY: &str = "data.grid";

/// A checkpoint together with the configuration that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointFile {
    pub config: TrainingConfig,
    pub checkpoint: Checkpoint,
}

impl CheckpointFile {
    pub fn new(config: TrainingConfig, checkpoint: Checkpoint, grid: &GridSpec) -> Self {
        let mut checkpoint = checkpoint;
        if checkpoint.get(GRID_ARRAY).is_none() {
            checkpoint.push_vec(
                GRID_ARRAY,
                vec![grid.period, grid.nx as f64, grid.dt_record, grid.nt_record as f64],
            );
        }
        Self { config, checkpoint }
    }

    /// Grid of the data the checkpoint was trained on.
    pub fn grid(&self) -> Result<GridSpec> {
        let g = self.checkpoint.vec(GRID_ARRAY)?;
        if g.len() != 4 {
            return Err(Error::Malformed {
                format: FORMAT,
                detail: format!("`{GRID_ARRAY}` has {} entries", g.len()),
            });
        }
        Ok(GridSpec {
            period: g[0],
            nx: g[1] as usize,
            dt_record: g[2],
            nt_record: g[3] as usize,
        })
    }

    /// Rebuilds a finished model, refusing data on another grid.
    pub fn model_for(&self, data: &GridSpec) -> Result<TrainedModel> {
        let g = self.grid()?;
        if g.nx != data.nx || g.period != data.period || g.dt_record != data.dt_record {
            return Err(Error::Config(format!(
                "model was trained on nx={}, P={}, dt={} but the dataset has nx={}, P={}, dt={}",
                g.nx, g.period, g.dt_record, data.nx, data.period, data.dt_record
            )));
        }
        Ok(TrainedModel::from_checkpoint(&self.config, g.nx, &self.checkpoint)?)
    }
}

pub fn encode(file: &CheckpointFile) -> Result<Vec<u8>> {
    let config = toml::to_string(&file.config).map_err(|e| Error::Config(e.to_string()))?;
    let ck = &file.checkpoint;
    let mut body = Writer::new(MAGIC, VERSION);
    body.u64(0); // patched below
    body.u64(ck.config_hash);
    body.u32(config.len() as u32);
    body.bytes(config.as_bytes());
    body.u32(ck.arrays.len() as u32);
    for (name, t) in &ck.arrays {
        let name_len = u16::try_from(name.len()).map_err(|_| Error::Config(format!("array name too long: {name}")))?;
        body.u16(name_len);
        body.bytes(name.as_bytes());
        body.u8(DTYPE_F64);
        body.u8(t.shape.len() as u8);
        for &d in &t.shape {
            body.u64(d as u64);
        }
        body.f64s(&t.data);
    }
    let rng = ck.rng.to_bytes();
    body.u32(rng.len() as u32);
    body.bytes(&rng);
    // everything after the length field, checksum included
    let rest = (body.len() - 16 + 4) as u64;
    body.patch_u64(8, rest);
    Ok(body.finish())
}

pub fn decode(bytes: &[u8]) -> Result<Loaded<CheckpointFile>> {
    let (_, minor) = check_header(bytes, MAGIC, FORMAT, VERSION.0)?;
    let mut r = Reader::new(bytes, FORMAT);
    let rest = r.u64()?;
    let expected = 16 + rest;
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

    let config_hash = r.u64()?;
    let n = r.u32()? as usize;
    let text = std::str::from_utf8(r.take(n)?).map_err(|_| r.malformed("config is not UTF-8"))?;
    let config: TrainingConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    if config.hash() != config_hash {
        return Err(r.malformed("stored config does not match its hash"));
    }
    let count = r.u32()? as usize;
    let mut arrays = Vec::with_capacity(count);
    for _ in 0..count {
        let len = r.u16()? as usize;
        let name = String::from_utf8(r.take(len)?.to_vec()).map_err(|_| r.malformed("array name is not UTF-8"))?;
        let dtype = r.u8()?;
        if dtype != DTYPE_F64 {
            return Err(r.malformed(format!("array `{name}` has unknown dtype {dtype}")));
        }
        let rank = r.u8()? as usize;
        let shape = (0..rank).map(|_| r.u64().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let size = shape
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .ok_or_else(|| r.malformed(format!("array `{name}` is too large")))?;
        let data = r.f64s(size)?;
        arrays.push((name, Tensor::new(shape, data)));
    }
    let len = r.u32()? as usize;
    let rng = RngState::from_bytes(r.take(len)?).ok_or_else(|| r.malformed("bad RNG state"))?;
    if r.position() != bytes.len() - 4 {
        return Err(r.malformed("unread bytes before the checksum"));
    }
    Ok(Loaded {
        value: CheckpointFile {
            config,
            checkpoint: Checkpoint {
                config_hash,
                arrays,
                rng,
            },
        },
        warnings: minor_warning(FORMAT, minor, VERSION).into_iter().collect(),
    })
}

pub fn save(file: &CheckpointFile, path: &Path) -> Result<()> {
    fs::write(path, encode(file)?).at(path)
}

pub fn load(path: &Path) -> Result<CheckpointFile> {
    let bytes = fs::read(path).at(path)?;
    let loaded = decode(&bytes)?;
    for w in &loaded.warnings {
        log::warn!("{}: {w}", path.display());
    }
    Ok(loaded.value)
}
