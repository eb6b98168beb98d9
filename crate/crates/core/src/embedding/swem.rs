//! SWEM: little-endian binary matrix format.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "SWEM"
//! 4       1     version (1)
//! 5       3     reserved, zero
//! 8       4     rows (u32)
//! 12      4     cols (u32)
//! 16      4·r·c f32 payload, row-major
//! ```

use std::fs;
use std::path::Path;

use super::EmbeddingMatrix;
use crate::{Error, Result};

pub const SWEM_MAGIC: [u8; 4] = *b"SWEM";
pub const SWEM_VERSION: u8 = 1;
const HEADER_LEN: usize = 16;

pub fn encode_swem(m: &EmbeddingMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * m.as_slice().len());
    out.extend_from_slice(&SWEM_MAGIC);
    out.push(SWEM_VERSION);
    out.extend_from_slice(&[0; 3]);
    out.extend_from_slice(&(m.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u32).to_le_bytes());
    for v in m.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decodes one SWEM block from the front of `bytes`, returning the matrix and
/// the number of bytes consumed. Trailing bytes are left to the caller.
pub fn decode_swem(bytes: &[u8]) -> Result<(EmbeddingMatrix, usize)> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated(format!(
            "{} bytes is shorter than the {HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    if bytes[0..4] != SWEM_MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:?}",
            String::from_utf8_lossy(&bytes[0..4])
        )));
    }
    if bytes[4] != SWEM_VERSION {
        return Err(Error::Format(format!("unsupported version {}", bytes[4])));
    }
    let rows = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let n = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Format(format!("header claims {rows}x{cols}")))?;
    let end = HEADER_LEN + 4 * n;
    if bytes.len() < end {
        return Err(Error::Truncated(format!(
            "header claims {rows}x{cols} but payload holds {} floats",
            (bytes.len() - HEADER_LEN) / 4
        )));
    }
    let data = bytes[HEADER_LEN..end]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let m = EmbeddingMatrix::new(rows, cols, data).map_err(|e| Error::Format(e.to_string()))?;
    Ok((m, end))
}

pub fn write_swem(m: &EmbeddingMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_swem(m)).map_err(|e| Error::io(path, e))
}

pub fn read_swem(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (m, used) = decode_swem(&bytes).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        Error::Truncated(msg) => Error::Truncated(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    if used != bytes.len() {
        return Err(Error::Truncated(format!(
            "{}: {} bytes after the declared payload",
            path.display(),
            bytes.len() - used
        )));
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let m = EmbeddingMatrix::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let b = encode_swem(&m);
        assert_eq!(&b[..8], &[0x53, 0x57, 0x45, 0x4D, 1, 0, 0, 0]);
        assert_eq!(&b[8..16], &[2, 0, 0, 0, 3, 0, 0, 0]);
        assert_eq!(&b[16..20], &1.0f32.to_le_bytes());
        assert_eq!(b.len(), 16 + 24);
    }

    #[test]
    fn bad_magic_and_version() {
        let m = EmbeddingMatrix::new(1, 1, vec![1.0]).unwrap();
        let mut b = encode_swem(&m);
        b[3] = b'X';
        assert!(matches!(decode_swem(&b), Err(Error::Format(_))));
        let mut b = encode_swem(&m);
        b[4] = 2;
        assert!(matches!(decode_swem(&b), Err(Error::Format(_))));
    }

    #[test]
    fn short_payload_is_truncation() {
        let m = EmbeddingMatrix::new(10, 10, vec![0.5; 100]).unwrap();
        let b = encode_swem(&m);
        assert!(matches!(decode_swem(&b[..b.len() - 4]), Err(Error::Truncated(_))));

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.swem");
        let mut long = b.clone();
        long.extend_from_slice(&[0; 4]);
        fs::write(&p, long).unwrap();
        assert!(matches!(read_swem(&p), Err(Error::Truncated(_))));
    }

    #[test]
    fn zero_dims_rejected() {
        let mut b = encode_swem(&EmbeddingMatrix::new(1, 1, vec![1.0]).unwrap());
        b[8..12].copy_from_slice(&0u32.to_le_bytes());
        assert!(matches!(decode_swem(&b), Err(Error::Format(_))));
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(rows in 1usize..8, cols in 1usize..8, seed in any::<u64>()) {
            let mut rng = crate::Rng::new(seed);
            let data: Vec<f32> = (0..rows * cols).map(|_| (rng.normal() * 10.0) as f32).collect();
            let m = EmbeddingMatrix::new(rows, cols, data).unwrap();
            let (back, used) = decode_swem(&encode_swem(&m)).unwrap();
            prop_assert_eq!(used, 16 + 4 * rows * cols);
            let a: Vec<u32> = m.as_slice().iter().map(|v| v.to_bits()).collect();
            let b: Vec<u32> = back.as_slice().iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(a, b);
        }
    }
}
