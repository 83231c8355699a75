//! Model artifact layout (all integers and floats little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "TKGM"
//! 4       4     format version (u32) = 1
//! 8       8     number of entities |E| (u64)
//! 16      8     number of relations |R| (u64)
//! 24      8     embedding dimension d (u64)
//! 32      ...   entity table   |E|×d  f64, row-major
//!               relation table |R|×d  f64, row-major
//!               output table   |E|×3d f64, row-major
//! ```

use std::path::Path;

use crate::codec::{self, Reader};
use crate::error::{Error, Result};

use super::params::{ModelParams, ParamLayout};

const MAGIC: &[u8; 4] = b"TKGM";
const VERSION: u32 = 1;

pub(crate) fn encode_layout(out: &mut Vec<u8>, layout: ParamLayout) {
    codec::put_u64(out, layout.num_entities as u64);
    codec::put_u64(out, layout.num_relations as u64);
    codec::put_u64(out, layout.dim as u64);
}

pub(crate) fn decode_layout(r: &mut Reader<'_>) -> Option<Result<ParamLayout>> {
    let ne = r.u64()? as usize;
    let nr = r.u64()? as usize;
    let d = r.u64()? as usize;
    Some(ParamLayout::new(ne, nr, d))
}

pub fn encode_params(params: &ModelParams) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + params.values().len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    encode_layout(&mut out, params.layout());
    codec::put_f64s(&mut out, params.values());
    out
}

pub fn decode_params(bytes: &[u8]) -> std::result::Result<ModelParams, String> {
    let mut r = Reader::new(bytes);
    if r.take(4) != Some(MAGIC.as_slice()) {
        return Err("not a model artifact (bad magic)".into());
    }
    match r.u32() {
        Some(VERSION) => {}
        Some(v) => return Err(format!("unsupported artifact version {v}")),
        None => return Err("truncated header".into()),
    }
    let layout = decode_layout(&mut r)
        .ok_or("truncated header")?
        .map_err(|e| e.to_string())?;
    let values = r.f64s(layout.len()).ok_or("truncated parameter tables")?;
    if !r.is_empty() {
        return Err("trailing bytes after parameter tables".into());
    }
    ModelParams::from_values(layout, values).map_err(|e| e.to_string())
}

pub fn write_params(path: &Path, params: &ModelParams) -> Result<()> {
    codec::write_all(path, &encode_params(params)).map_err(|e| Error::io(path, e))
}

pub fn read_params(path: &Path) -> Result<ModelParams> {
    let bytes = codec::read_file(path).map_err(|e| Error::io(path, e))?;
    decode_params(&bytes).map_err(|m| Error::format(path, m))
}
