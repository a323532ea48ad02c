//! Binary containers: 8-byte magic, `u32` format version, `u64` header length,
//! a JSON header, then little-endian payloads. All integers are little-endian.

use std::fs;
use std::io::Write;
use std::path::Path;

use compol_tensor::{DType, Real, Tensor};
use serde::{Deserialize, Serialize};

use crate::config::CompolConfig;
use crate::error::{CoreError, Result};
use crate::model::CompolModel;
use crate::params::ParamStore;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"CMPLCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn encode_container(magic: &[u8; 8], version: u32, header: &[u8], payload: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + header.len() + payload.len());
    out.extend_from_slice(magic);
    out.extend_from_slice(&version.to_le_bytes());
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(header);
    out.extend_from_slice(payload);
    out
}

/// Splits a container into its header and payload after checking magic and version.
pub fn decode_container<'a>(
    bytes: &'a [u8],
    magic: &[u8; 8],
    version: u32,
) -> Result<(&'a [u8], &'a [u8])> {
    if bytes.len() < 20 || &bytes[..8] != magic {
        return Err(CoreError::Corrupt(format!(
            "missing {} magic",
            String::from_utf8_lossy(magic)
        )));
    }
    let found = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if found != version {
        return Err(CoreError::Version {
            found,
            expected: version,
        });
    }
    let len = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
    let rest = &bytes[20..];
    if len > rest.len() {
        return Err(CoreError::Corrupt("header length exceeds file size".into()));
    }
    Ok(rest.split_at(len))
}

/// Writes via a temporary sibling and renames, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("partial");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub dtype: DType,
    pub shape: Vec<usize>,
    /// Byte offset into the payload.
    pub offset: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    config: CompolConfig,
    seed: u64,
    metadata: serde_json::Value,
    params: Vec<ParamEntry>,
}

/// A model together with free-form run metadata (normalization, hashes, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<T: Real> {
    pub model: CompolModel<T>,
    pub metadata: serde_json::Value,
}

pub fn encode_checkpoint<T: Real>(
    model: &CompolModel<T>,
    metadata: &serde_json::Value,
) -> Result<Vec<u8>> {
    let mut payload = Vec::new();
    let mut params = Vec::with_capacity(model.params().len());
    for (name, t) in model.params().iter() {
        params.push(ParamEntry {
            name: name.to_string(),
            dtype: t.dtype(),
            shape: t.shape().to_vec(),
            offset: payload.len(),
        });
        for &x in t.data() {
            x.write_le(&mut payload);
        }
    }
    let header = Header {
        config: model.config().clone(),
        seed: model.config().seed,
        metadata: metadata.clone(),
        params,
    };
    let header = serde_json::to_vec(&header)?;
    Ok(encode_container(
        CHECKPOINT_MAGIC,
        CHECKPOINT_VERSION,
        &header,
        &payload,
    ))
}

pub fn decode_checkpoint<T: Real>(bytes: &[u8]) -> Result<Checkpoint<T>> {
    let (header, payload) = decode_container(bytes, CHECKPOINT_MAGIC, CHECKPOINT_VERSION)?;
    let header: Header = serde_json::from_slice(header)
        .map_err(|e| CoreError::Corrupt(format!("unreadable header: {e}")))?;
    let mut store = ParamStore::new();
    for entry in &header.params {
        let complex = entry.dtype.is_complex();
        let expected = if complex { T::COMPLEX } else { T::REAL };
        if entry.dtype != expected {
            return Err(CoreError::Corrupt(format!(
                "parameter `{}` is {}, expected {expected}",
                entry.name, entry.dtype
            )));
        }
        let count: usize = entry.shape.iter().product::<usize>() * if complex { 2 } else { 1 };
        let width = entry.dtype.scalar_bytes();
        let end = entry.offset + count * width;
        let raw = payload.get(entry.offset..end).ok_or_else(|| {
            CoreError::Corrupt(format!("payload of `{}` is truncated", entry.name))
        })?;
        let data: Vec<T> = raw.chunks_exact(width).map(T::read_le).collect();
        let t = if complex {
            Tensor::new_complex(&entry.shape, data)?
        } else {
            Tensor::new(&entry.shape, data)?
        };
        store.insert(entry.name.clone(), t);
    }
    let model = CompolModel::from_parts(header.config, store)?;
    Ok(Checkpoint {
        model,
        metadata: header.metadata,
    })
}

pub fn save_checkpoint<T: Real>(
    path: &Path,
    model: &CompolModel<T>,
    metadata: &serde_json::Value,
) -> Result<()> {
    write_atomic(path, &encode_checkpoint(model, metadata)?)
}

pub fn load_checkpoint<T: Real>(path: &Path) -> Result<Checkpoint<T>> {
    decode_checkpoint(&fs::read(path)?)
}
