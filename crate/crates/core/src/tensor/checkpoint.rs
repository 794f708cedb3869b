//! Parameter checkpoint files.
//!
//! Layout: magic `BVCK`, u32 version, a metadata section of string key/value
//! pairs, the named parameter list (name, shape, 32-bit little-endian data),
//! and a trailing SHA-256 checksum over everything before it.

use super::{Array, ParamSet};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use thiserror::Error;

const CHECKPOINT_MAGIC: &[u8; 4] = b"BVCK";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: not a checkpoint file (bad magic)")]
    BadMagic { path: String },
    #[error("{path}: unsupported checkpoint version {found} (expected {expected})")]
    Version {
        path: String,
        found: u32,
        expected: u32,
    },
    #[error("{path}: checkpoint truncated")]
    Truncated { path: String },
    #[error("{path}: checksum mismatch; file is corrupt")]
    Checksum { path: String },
}

pub fn save_checkpoint(
    path: &Path,
    meta: &BTreeMap<String, String>,
    params: &ParamSet<f32>,
) -> Result<(), CheckpointError> {
    let mut buf = Vec::new();
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(meta.len() as u32).to_le_bytes());
    for (k, v) in meta {
        write_str(&mut buf, k);
        write_str(&mut buf, v);
    }
    buf.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for (name, array) in params.iter() {
        write_str(&mut buf, name);
        buf.extend_from_slice(&(array.shape().len() as u32).to_le_bytes());
        for &d in array.shape() {
            buf.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in array.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let digest = Sha256::digest(&buf);
    buf.extend_from_slice(&digest);
    fs::write(path, &buf).map_err(|source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_checkpoint(
    path: &Path,
) -> Result<(BTreeMap<String, String>, ParamSet<f32>), CheckpointError> {
    let p = path.display().to_string();
    let bytes = fs::read(path).map_err(|source| CheckpointError::Io {
        path: p.clone(),
        source,
    })?;
    if bytes.len() < 4 + 4 + 32 {
        return Err(CheckpointError::Truncated { path: p });
    }
    if &bytes[0..4] != CHECKPOINT_MAGIC {
        return Err(CheckpointError::BadMagic { path: p });
    }
    let body_len = bytes.len() - 32;
    let digest = Sha256::digest(&bytes[..body_len]);
    if digest.as_slice() != &bytes[body_len..] {
        return Err(CheckpointError::Checksum { path: p });
    }
    let mut r = Reader {
        bytes: &bytes[..body_len],
        pos: 4,
        path: &p,
    };
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(CheckpointError::Version {
            path: p.clone(),
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }
    let mut meta = BTreeMap::new();
    let meta_count = r.u32()?;
    for _ in 0..meta_count {
        let k = r.string()?;
        let v = r.string()?;
        meta.insert(k, v);
    }
    let mut params = ParamSet::new();
    let param_count = r.u32()?;
    for _ in 0..param_count {
        let name = r.string()?;
        let ndims = r.u32()? as usize;
        let mut shape = Vec::with_capacity(ndims);
        for _ in 0..ndims {
            shape.push(r.u32()? as usize);
        }
        let numel: usize = shape.iter().product();
        let mut data = Vec::with_capacity(numel);
        for _ in 0..numel {
            data.push(r.f32()?);
        }
        params.push(name, Array::from_vec(&shape, data).expect("consistent shape"));
    }
    Ok((meta, params))
}

fn write_str(buf: &mut Vec<u8>, s: &str) {
    buf.extend_from_slice(&(s.len() as u32).to_le_bytes());
    buf.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a str,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        if self.pos + n > self.bytes.len() {
            return Err(CheckpointError::Truncated {
                path: self.path.to_string(),
            });
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32, CheckpointError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String, CheckpointError> {
        let len = self.u32()? as usize;
        let bytes = self.take(len)?;
        Ok(String::from_utf8_lossy(bytes).into_owned())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_params() -> ParamSet<f32> {
        let mut p = ParamSet::new();
        p.push(
            "enc1.w",
            Array::from_vec(&[2, 1, 3, 3], (0..18).map(|i| i as f32 * 0.1).collect()).unwrap(),
        );
        p.push("enc1.b", Array::from_vec(&[2], vec![0.5, -0.5]).unwrap());
        p
    }

    #[test]
    fn round_trip_preserves_names_shapes_and_bits() {
        let dir = std::env::temp_dir().join(format!("bvck-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("model.ckpt");
        let mut meta = BTreeMap::new();
        meta.insert("variant".to_string(), "infer-skip".to_string());
        meta.insert("epoch".to_string(), "17".to_string());
        let params = sample_params();
        save_checkpoint(&path, &meta, &params).unwrap();
        let (meta2, params2) = load_checkpoint(&path).unwrap();
        assert_eq!(meta, meta2);
        assert_eq!(params.len(), params2.len());
        for ((n1, a1), (n2, a2)) in params.iter().zip(params2.iter()) {
            assert_eq!(n1, n2);
            assert_eq!(a1.shape(), a2.shape());
            assert_eq!(a1.data(), a2.data());
        }
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn corruption_is_detected() {
        let dir = std::env::temp_dir().join(format!("bvck-corrupt-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("model.ckpt");
        save_checkpoint(&path, &BTreeMap::new(), &sample_params()).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0xff;
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(CheckpointError::Checksum { .. })
        ));
        fs::remove_dir_all(&dir).ok();
    }
}
