//! Shared on-disk layout for model and index files.
//!
//! Every artifact is a single file: one JSON header line, optional JSON
//! metadata lines, then a raw matrix block of little-endian f64 values in
//! row-major order. Binary storage keeps round-trips bit-exact; the JSON
//! header keeps files self-describing.

use std::io::{BufRead, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::Error;
use crate::Result;

/// 64-bit FNV-1a. Used for feature hashing and id checksums; fixed here so
/// files and feature spaces are stable across platforms and releases.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut hash = OFFSET;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(PRIME);
    }
    hash
}

pub fn write_json_line<T: Serialize>(
    writer: &mut impl Write,
    value: &T,
    path: &Path,
) -> Result<()> {
    let line = serde_json::to_string(value).map_err(|e| Error::FileFormat {
        path: path.to_owned(),
        message: format!("header serialization failed: {e}"),
    })?;
    writer
        .write_all(line.as_bytes())
        .and_then(|_| writer.write_all(b"\n"))
        .map_err(|e| Error::io(path, e))
}

pub fn read_json_line<T: DeserializeOwned>(reader: &mut impl BufRead, path: &Path) -> Result<T> {
    let mut line = String::new();
    reader
        .read_line(&mut line)
        .map_err(|e| Error::io(path, e))?;
    if line.is_empty() {
        return Err(Error::FileFormat {
            path: path.to_owned(),
            message: "unexpected end of file while reading header".into(),
        });
    }
    serde_json::from_str(line.trim_end()).map_err(|e| Error::FileFormat {
        path: path.to_owned(),
        message: format!("invalid header: {e}"),
    })
}

pub fn write_f64_block(writer: &mut impl Write, values: &[f64], path: &Path) -> Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 8);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    writer.write_all(&buf).map_err(|e| Error::io(path, e))
}

pub fn read_f64_block(reader: &mut impl Read, len: usize, path: &Path) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; len * 8];
    reader
        .read_exact(&mut bytes)
        .map_err(|e| Error::FileFormat {
            path: path.to_owned(),
            message: format!("matrix block truncated: {e}"),
        })?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_matches_reference_values() {
        // published FNV-1a test vectors
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn f64_block_round_trips_bit_exactly() {
        let values = vec![0.0, -0.0, 1.5, f64::MIN_POSITIVE, 1e300, -3.25];
        let path = Path::new("mem");
        let mut buf = Vec::new();
        write_f64_block(&mut buf, &values, path).unwrap();
        let back = read_f64_block(&mut buf.as_slice(), values.len(), path).unwrap();
        for (a, b) in values.iter().zip(&back) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
