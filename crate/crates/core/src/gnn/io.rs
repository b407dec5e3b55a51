//! Binary checkpoint format.
//!
//! ```text
//! magic      "SOGA-CKPT\0"                      10 bytes
//! version    u16 LE
//! arch       u8   (0 GCN, 1 GraphSAGE, 2 GAT)
//! dims       d, hidden, k, heads                u32 LE each
//! tensors    (rows u32, cols u32, rows·cols f64 LE) in layout order
//! trailer    JSON metadata, UTF-8, to end of file
//! ```

use std::fs;
use std::path::Path;

use super::layers::param_shapes;
use super::{Arch, CheckpointMeta, ModelCheckpoint, Model};
use crate::diff::Tensor;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 10] = b"SOGA-CKPT\0";
pub const FORMAT_VERSION: u16 = 1;

pub fn write_checkpoint(ckpt: &ModelCheckpoint) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(ckpt.arch.tag());
    for dim in [ckpt.feature_dim, ckpt.hidden_dim, ckpt.n_classes, ckpt.heads] {
        let dim = u32::try_from(dim).map_err(|_| Error::Checkpoint("dimension exceeds u32".into()))?;
        out.extend_from_slice(&dim.to_le_bytes());
    }
    for p in ckpt.parameters() {
        out.extend_from_slice(&(p.rows() as u32).to_le_bytes());
        out.extend_from_slice(&(p.cols() as u32).to_le_bytes());
        for v in p.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.extend_from_slice(serde_json::to_string(&ckpt.meta)?.as_bytes());
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Checkpoint(format!(
                "truncated file: needed {n} bytes at offset {}",
                self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

pub fn read_checkpoint(bytes: &[u8]) -> Result<ModelCheckpoint> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(MAGIC.len()).map_err(|_| Error::Checkpoint("magic mismatch".into()))? != MAGIC {
        return Err(Error::Checkpoint("magic mismatch".into()));
    }
    let version = u16::from_le_bytes(r.take(2)?.try_into().expect("2 bytes"));
    if version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported format version {version}")));
    }
    let arch = Arch::from_tag(r.take(1)?[0])?;
    let d = r.u32()? as usize;
    let hidden = r.u32()? as usize;
    let k = r.u32()? as usize;
    let heads = r.u32()? as usize;

    let shapes = param_shapes(arch, d, hidden, k, heads);
    let mut params = Vec::with_capacity(shapes.len());
    for s in &shapes {
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;
        if (rows, cols) != (s.rows, s.cols) {
            return Err(Error::Checkpoint(format!(
                "shape-header inconsistency for {}: file says {rows}x{cols}, dims imply {}x{}",
                s.name, s.rows, s.cols
            )));
        }
        let raw = r.take(rows * cols * 8)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        params.push(Tensor::from_vec(rows, cols, data)?);
    }
    let trailer = &bytes[r.pos..];
    if trailer.is_empty() {
        return Err(Error::Checkpoint("truncated file: missing metadata trailer".into()));
    }
    let meta: CheckpointMeta = serde_json::from_slice(trailer)
        .map_err(|e| Error::Checkpoint(format!("metadata trailer: {e}")))?;
    ModelCheckpoint::from_parts(arch, d, hidden, k, heads, params, meta)
}

pub fn save_checkpoint(ckpt: &ModelCheckpoint, path: &Path) -> Result<()> {
    let bytes = write_checkpoint(ckpt)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<ModelCheckpoint> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(&bytes)
}
