//! `model.bin`: magic `NFL1`, config JSON length (u64 LE) and bytes, then f64 LE blocks.
//!
//! Blocks are row-major: the frozen embedding matrix first when the config has one,
//! then each layer's weights followed by its biases.

use nflab_core::linalg::Matrix;
use nflab_core::net::{DenseNet, NetworkConfig};

use crate::error::{CliError, Result};

const MAGIC: &[u8; 4] = b"NFL1";

pub fn encode(net: &DenseNet) -> Vec<u8> {
    let json = serde_json::to_vec(net.config()).expect("configs serialize");
    let floats = net.pe_matrix().map_or(0, |m| m.data().len()) + net.param_count();
    let mut out = Vec::with_capacity(12 + json.len() + 8 * floats);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    let mut put = |values: &[f64]| {
        for v in values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    };
    if let Some(pe) = net.pe_matrix() {
        put(pe.data());
    }
    for block in net.param_blocks() {
        put(block);
    }
    out
}

fn corrupt(msg: impl std::fmt::Display) -> CliError {
    CliError::config(format!("invalid model file: {msg}"))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| corrupt(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn floats(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| corrupt("block size overflows"))?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect())
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<Matrix> {
        Ok(Matrix::new(rows, cols, self.floats(rows * cols)?)?)
    }
}

pub fn decode(bytes: &[u8]) -> Result<DenseNet> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(corrupt("missing NFL1 magic"));
    }
    let len = u64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes"));
    let len = usize::try_from(len).map_err(|_| corrupt("config length overflows"))?;
    let config: NetworkConfig = serde_json::from_slice(r.take(len)?).map_err(corrupt)?;
    config.validate()?;
    let pe = match config.pe {
        Some(pe) => Some(r.matrix(config.widths[0], pe.embed_dim / 2)?),
        None => None,
    };
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for layer in 1..=config.num_layers() {
        weights.push(r.matrix(config.fan_in(layer), config.widths[layer])?);
        biases.push(r.floats(config.widths[layer])?);
    }
    if r.pos != bytes.len() {
        return Err(corrupt(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(DenseNet::from_parts(config, weights, biases, pe)?)
}
