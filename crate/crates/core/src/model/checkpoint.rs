//! Model checkpoint files.
//!
//! Binary layout: magic `DLF2M`, format version, `n`, the architecture
//! fields, then every parameter tensor in declared order as little-endian
//! 64-bit floats. A JSON sidecar carries the configuration and training
//! history for humans and tooling; the binary alone suffices to reload.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::graph::Tensor;
use crate::model::net::{ModelConfig, ModelParams};
use crate::model::train::EpochStats;

const MAGIC: &[u8; 5] = b"DLF2M";
const VERSION: u8 = 1;

/// Human-readable companion written next to the binary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointSidecar {
    pub config: ModelConfig,
    pub history: Vec<EpochStats>,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".json");
    path.with_file_name(name)
}

pub fn save_checkpoint(
    params: &ModelParams,
    path: &Path,
    history: &[EpochStats],
) -> Result<()> {
    let config = params.config();
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(MAGIC)?;
    out.write_all(&[VERSION, config.n as u8])?;
    for dim in [
        config.dim,
        config.enc_blocks,
        config.heads,
        config.inducing,
        config.pool_seeds,
        config.ff_hidden,
        config.ff_layers,
    ] {
        out.write_all(&(dim as u32).to_le_bytes())?;
    }
    out.write_all(&[config.layer_norm as u8])?;
    out.write_all(&config.dropout.to_le_bytes())?;
    for tensor in params.tensors() {
        for &v in &tensor.data {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;

    let sidecar = CheckpointSidecar {
        config: config.clone(),
        history: history.to_vec(),
    };
    let file = File::create(sidecar_path(path))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &sidecar)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<ModelParams> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 5];
    reader.read_exact(&mut magic).map_err(|_| Error::CorruptRecord {
        kind: "checkpoint",
        detail: "file shorter than header".into(),
    })?;
    if &magic != MAGIC {
        return Err(Error::BadMagic { kind: "checkpoint" });
    }
    let mut header = [0u8; 2];
    reader.read_exact(&mut header)?;
    if header[0] != VERSION {
        return Err(Error::UnsupportedVersion {
            kind: "checkpoint",
            found: header[0],
            expected: VERSION,
        });
    }
    let n = header[1] as usize;
    let mut dims = [0usize; 7];
    for dim in &mut dims {
        let mut bytes = [0u8; 4];
        reader.read_exact(&mut bytes)?;
        *dim = u32::from_le_bytes(bytes) as usize;
    }
    let mut flag = [0u8; 1];
    reader.read_exact(&mut flag)?;
    let mut dropout_bytes = [0u8; 8];
    reader.read_exact(&mut dropout_bytes)?;
    let config = ModelConfig {
        n,
        dim: dims[0],
        enc_blocks: dims[1],
        heads: dims[2],
        inducing: dims[3],
        pool_seeds: dims[4],
        ff_hidden: dims[5],
        ff_layers: dims[6],
        dropout: f64::from_le_bytes(dropout_bytes),
        layer_norm: flag[0] != 0,
    };

    let layout = crate::model::net::Layout::new(&config)?;
    let mut tensors = Vec::with_capacity(layout.shapes.len());
    for &(_, rows, cols) in &layout.shapes {
        let mut data = vec![0.0f64; rows * cols];
        for v in &mut data {
            let mut bytes = [0u8; 8];
            reader.read_exact(&mut bytes).map_err(|_| Error::CorruptRecord {
                kind: "checkpoint",
                detail: "truncated tensor data".into(),
            })?;
            *v = f64::from_le_bytes(bytes);
        }
        tensors.push(Tensor::from_rows(rows, cols, data));
    }
    let mut trailing = [0u8; 1];
    if reader.read(&mut trailing)? != 0 {
        return Err(Error::CorruptRecord {
            kind: "checkpoint",
            detail: "trailing bytes after tensors".into(),
        });
    }
    ModelParams::from_parts(config, tensors)
}
