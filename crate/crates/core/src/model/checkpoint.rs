//! Checkpoint file: `MNCK`, a version byte, a little-endian `u32` header
//! length, a JSON header, then the flat parameter vector as little-endian
//! values of the header's dtype.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::MenetConfig;
use super::network::{BranchSpec, Layout, MenetModel};
use crate::error::{Error, Result};
use crate::scalar::{Dtype, Scalar};

const MAGIC: &[u8; 4] = b"MNCK";
const VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub dtype: Dtype,
    pub views: Vec<BranchSpec>,
    pub n_classes: usize,
    pub epoch: usize,
    pub n_params: usize,
    pub config: MenetConfig,
}

pub fn encode_checkpoint<T: Scalar>(model: &MenetModel<T>, config: &MenetConfig) -> Result<Vec<u8>> {
    let header = CheckpointHeader {
        dtype: T::DTYPE,
        views: model.layout().specs().to_vec(),
        n_classes: model.n_classes(),
        epoch: model.epoch,
        n_params: model.params().len(),
        config: config.clone(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::format("checkpoint", e.to_string()))?;
    let header_len = u32::try_from(json.len()).map_err(|_| Error::format("checkpoint", "header too large"))?;
    let mut out = Vec::with_capacity(9 + json.len() + model.params().len() * T::DTYPE.width());
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&header_len.to_le_bytes());
    out.extend_from_slice(&json);
    for &p in model.params() {
        p.write_le(&mut out);
    }
    Ok(out)
}

pub fn decode_checkpoint<T: Scalar>(buf: &[u8]) -> Result<(MenetModel<T>, CheckpointHeader)> {
    let bad = |d: &str| Error::format("checkpoint", d.to_string());
    if buf.len() < 9 || &buf[..4] != MAGIC {
        return Err(bad("bad magic"));
    }
    if buf[4] != VERSION {
        return Err(bad(&format!("unsupported version {}", buf[4])));
    }
    let header_len = u32::from_le_bytes(buf[5..9].try_into().unwrap()) as usize;
    let body = &buf[9..];
    if body.len() < header_len {
        return Err(bad("truncated header"));
    }
    let header: CheckpointHeader =
        serde_json::from_slice(&body[..header_len]).map_err(|e| Error::format("checkpoint", e.to_string()))?;
    let layout = Layout::new(header.views.clone(), header.n_classes)?;
    if layout.n_params() != header.n_params {
        return Err(bad("parameter count disagrees with the layout"));
    }
    let data = &body[header_len..];
    let width = header.dtype.width();
    if data.len() != header.n_params * width {
        return Err(bad("parameter block has the wrong length"));
    }
    let params: Vec<T> = data
        .chunks_exact(width)
        .map(|b| match header.dtype {
            Dtype::F32 => T::lit(f32::read_le(b) as f64),
            Dtype::F64 => T::lit(f64::read_le(b)),
        })
        .collect();
    let mut model = MenetModel::from_params(header.views.clone(), header.n_classes, params)?;
    model.epoch = header.epoch;
    Ok((model, header))
}

pub fn write_checkpoint<T: Scalar>(path: &Path, model: &MenetModel<T>, config: &MenetConfig) -> Result<()> {
    std::fs::write(path, encode_checkpoint(model, config)?)?;
    Ok(())
}

pub fn read_checkpoint<T: Scalar>(path: &Path) -> Result<(MenetModel<T>, CheckpointHeader)> {
    let buf = std::fs::read(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    decode_checkpoint(&buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> MenetModel<f64> {
        let specs = vec![
            BranchSpec { name: "tfidf".into(), input_dim: 7, hidden: 3 },
            BranchSpec { name: "timestamp".into(), input_dim: 24, hidden: 2 },
        ];
        let mut m = MenetModel::new(specs, 4, 11).unwrap();
        m.epoch = 17;
        m
    }

    #[test]
    fn roundtrip() {
        let m = model();
        let cfg = MenetConfig::default();
        let bytes = encode_checkpoint(&m, &cfg).unwrap();
        let (back, header) = decode_checkpoint::<f64>(&bytes).unwrap();
        assert_eq!(back, m);
        assert_eq!(header.config, cfg);
        assert_eq!(header.dtype, Dtype::F64);
        let (as_f32, _) = decode_checkpoint::<f32>(&bytes).unwrap();
        assert_eq!(as_f32.params()[0], m.params()[0] as f32);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let bytes = encode_checkpoint(&model(), &MenetConfig::default()).unwrap();
        assert!(decode_checkpoint::<f64>(&bytes[..bytes.len() - 1]).is_err());
        let mut wrong = bytes.clone();
        wrong[0] = b'X';
        assert!(decode_checkpoint::<f64>(&wrong).is_err());
        let mut version = bytes;
        version[4] = 9;
        assert!(decode_checkpoint::<f64>(&version).is_err());
    }
}
