//! The `PPNT` binary tensor container.
//!
//! Layout of a single-tensor file (all integers little-endian):
//!
//! ```text
//! "PPNT" | version: u32 | rank: u32 | extents: u32 * rank | values: f32 * prod(extents)
//! ```
//!
//! A checkpoint holds many named tensors:
//!
//! ```text
//! "PPNT" | version: u32 | count: u32 | count * (name_len: u32 | name: utf-8 | rank | extents | values)
//! ```
//!
//! Values are IEEE-754 32-bit, row-major. The format is trivially parseable
//! in any language and bit-exact, so determinism tests can compare files.

use std::fs;
use std::io::Write;
use std::path::Path;

const MAGIC: &[u8; 4] = b"PPNT";

/// Current container format version.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ContainerError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("bad magic bytes (not a PPNT file)")]
    BadMagic,

    #[error("unsupported container version {0}")]
    UnsupportedVersion(u32),

    #[error("corrupt container: {0}")]
    Corrupt(String),

    #[error("extent product {extents} does not match value count {values}")]
    ShapeMismatch { extents: usize, values: usize },
}

/// One named tensor inside a checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorRecord {
    pub name: String,
    pub dims: Vec<usize>,
    pub values: Vec<f32>,
}

fn checked_len(dims: &[usize]) -> Result<usize, ContainerError> {
    dims.iter().try_fold(1usize, |acc, &d| {
        acc.checked_mul(d)
            .ok_or_else(|| ContainerError::Corrupt("extent product overflows".into()))
    })
}

fn encode_dims_values(out: &mut Vec<u8>, dims: &[usize], values: &[f32]) {
    out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
    for &d in dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for &v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

/// Encodes a single tensor as PPNT bytes.
pub fn encode_tensor(dims: &[usize], values: &[f32]) -> Result<Vec<u8>, ContainerError> {
    let expected = checked_len(dims)?;
    if expected != values.len() {
        return Err(ContainerError::ShapeMismatch {
            extents: expected,
            values: values.len(),
        });
    }
    let mut out = Vec::with_capacity(12 + dims.len() * 4 + values.len() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    encode_dims_values(&mut out, dims, values);
    Ok(out)
}

/// Writes a single tensor file.
pub fn write_tensor<P: AsRef<Path>>(
    path: P,
    dims: &[usize],
    values: &[f32],
) -> Result<(), ContainerError> {
    let bytes = encode_tensor(dims, values)?;
    let mut f = fs::File::create(path.as_ref())?;
    f.write_all(&bytes)?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ContainerError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                ContainerError::Corrupt(format!(
                    "truncated: wanted {} bytes at offset {}",
                    n, self.pos
                ))
            })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32_le(&mut self) -> Result<u32, ContainerError> {
        let s = self.take(4)?;
        Ok(u32::from_le_bytes([s[0], s[1], s[2], s[3]]))
    }

    fn header(&mut self) -> Result<(), ContainerError> {
        if self.take(4)? != MAGIC {
            return Err(ContainerError::BadMagic);
        }
        let version = self.u32_le()?;
        if version != FORMAT_VERSION {
            return Err(ContainerError::UnsupportedVersion(version));
        }
        Ok(())
    }

    fn dims_values(&mut self) -> Result<(Vec<usize>, Vec<f32>), ContainerError> {
        let rank = self.u32_le()? as usize;
        if rank > 8 {
            return Err(ContainerError::Corrupt(format!("rank {rank} too large")));
        }
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(self.u32_le()? as usize);
        }
        let count = checked_len(&dims)?;
        let byte_len = count
            .checked_mul(4)
            .ok_or_else(|| ContainerError::Corrupt("value byte length overflows".into()))?;
        let raw = self.take(byte_len)?;
        let values = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        Ok((dims, values))
    }
}

/// Decodes a single tensor from PPNT bytes.
pub fn decode_tensor(bytes: &[u8]) -> Result<(Vec<usize>, Vec<f32>), ContainerError> {
    let mut c = Cursor { bytes, pos: 0 };
    c.header()?;
    let out = c.dims_values()?;
    if c.pos != bytes.len() {
        return Err(ContainerError::Corrupt(format!(
            "{} trailing bytes",
            bytes.len() - c.pos
        )));
    }
    Ok(out)
}

/// Reads a single tensor file.
pub fn read_tensor<P: AsRef<Path>>(path: P) -> Result<(Vec<usize>, Vec<f32>), ContainerError> {
    decode_tensor(&fs::read(path.as_ref())?)
}

/// Encodes named tensors as PPNT checkpoint bytes.
pub fn encode_checkpoint(records: &[TensorRecord]) -> Result<Vec<u8>, ContainerError> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(records.len() as u32).to_le_bytes());
    for rec in records {
        let expected = checked_len(&rec.dims)?;
        if expected != rec.values.len() {
            return Err(ContainerError::ShapeMismatch {
                extents: expected,
                values: rec.values.len(),
            });
        }
        out.extend_from_slice(&(rec.name.len() as u32).to_le_bytes());
        out.extend_from_slice(rec.name.as_bytes());
        encode_dims_values(&mut out, &rec.dims, &rec.values);
    }
    Ok(out)
}

/// Writes a checkpoint of named tensors.
pub fn write_checkpoint<P: AsRef<Path>>(
    path: P,
    records: &[TensorRecord],
) -> Result<(), ContainerError> {
    let bytes = encode_checkpoint(records)?;
    let mut f = fs::File::create(path.as_ref())?;
    f.write_all(&bytes)?;
    Ok(())
}

/// Decodes checkpoint bytes into named tensors, preserving order.
pub fn decode_checkpoint(bytes: &[u8]) -> Result<Vec<TensorRecord>, ContainerError> {
    let mut c = Cursor { bytes, pos: 0 };
    c.header()?;
    let count = c.u32_le()? as usize;
    let mut records = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let name_len = c.u32_le()? as usize;
        let name = String::from_utf8(c.take(name_len)?.to_vec())
            .map_err(|_| ContainerError::Corrupt("tensor name is not UTF-8".into()))?;
        let (dims, values) = c.dims_values()?;
        records.push(TensorRecord { name, dims, values });
    }
    if c.pos != bytes.len() {
        return Err(ContainerError::Corrupt(format!(
            "{} trailing bytes",
            bytes.len() - c.pos
        )));
    }
    Ok(records)
}

/// Reads a checkpoint file of named tensors.
pub fn read_checkpoint<P: AsRef<Path>>(path: P) -> Result<Vec<TensorRecord>, ContainerError> {
    decode_checkpoint(&fs::read(path.as_ref())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tensor_layout_is_bit_exact() {
        let bytes = encode_tensor(&[2, 3], &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(&bytes[0..4], b"PPNT");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[16..20].try_into().unwrap()), 3);
        assert_eq!(bytes.len(), 20 + 6 * 4);
        let two = f32::from_le_bytes(bytes[28..32].try_into().unwrap());
        assert_eq!(two, 2.0);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        assert!(matches!(
            encode_tensor(&[2, 2], &[1.0]),
            Err(ContainerError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn bad_magic_and_version_are_rejected() {
        let mut bytes = encode_tensor(&[1], &[1.0]).unwrap();
        bytes[0] = b'X';
        assert!(matches!(decode_tensor(&bytes), Err(ContainerError::BadMagic)));
        let mut bytes = encode_tensor(&[1], &[1.0]).unwrap();
        bytes[4] = 9;
        assert!(matches!(
            decode_tensor(&bytes),
            Err(ContainerError::UnsupportedVersion(9))
        ));
    }

    #[test]
    fn truncation_errors_not_panics() {
        let full = encode_checkpoint(&[TensorRecord {
            name: "w".into(),
            dims: vec![2, 2],
            values: vec![1.0, 2.0, 3.0, 4.0],
        }])
        .unwrap();
        for cut in 0..full.len() {
            assert!(decode_checkpoint(&full[..cut]).is_err(), "cut at {cut}");
        }
    }

    proptest! {
        #[test]
        fn checkpoint_round_trips(
            names in proptest::collection::vec("[a-z_.]{1,24}", 0..5),
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let records: Vec<TensorRecord> = names
                .into_iter()
                .map(|name| {
                    let dims = vec![rng.random_range(1..4usize), rng.random_range(1..4usize)];
                    let n = dims.iter().product();
                    TensorRecord {
                        name,
                        dims,
                        values: (0..n).map(|_| rng.random::<f32>()).collect(),
                    }
                })
                .collect();
            let bytes = encode_checkpoint(&records).unwrap();
            let back = decode_checkpoint(&bytes).unwrap();
            prop_assert_eq!(back, records);
        }
    }
}
