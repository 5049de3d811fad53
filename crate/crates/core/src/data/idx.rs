//! IDX container (big-endian) as used by the MNIST distribution files.

use std::path::Path;

use super::Dataset;
use crate::error::{FscoError, Result};
use crate::tensor::Tensor;

pub const IMAGES_MAGIC: u32 = 2051;
pub const LABELS_MAGIC: u32 = 2049;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or(FscoError::Length { expected: offset + 4, found: bytes.len() })
}

fn check_magic(bytes: &[u8], want: u32) -> Result<()> {
    let magic = read_u32(bytes, 0)?;
    if magic != want {
        return Err(FscoError::Format {
            offset: 0,
            msg: format!("magic {magic:#010x}, expected {want:#010x} ({want})"),
        });
    }
    Ok(())
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages> {
    check_magic(bytes, IMAGES_MAGIC)?;
    let count = read_u32(bytes, 4)? as usize;
    let rows = read_u32(bytes, 8)? as usize;
    let cols = read_u32(bytes, 12)? as usize;
    if rows == 0 || cols == 0 {
        return Err(FscoError::Format { offset: 8, msg: format!("image size {rows}×{cols}") });
    }
    let payload = count
        .checked_mul(rows)
        .and_then(|v| v.checked_mul(cols))
        .and_then(|v| v.checked_add(16))
        .ok_or(FscoError::Format { offset: 4, msg: "image dimensions overflow".into() })?;
    if bytes.len() < payload {
        return Err(FscoError::Length { expected: payload, found: bytes.len() });
    }
    Ok(IdxImages { count, rows, cols, pixels: bytes[16..payload].to_vec() })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    check_magic(bytes, LABELS_MAGIC)?;
    let count = read_u32(bytes, 4)? as usize;
    let end = count
        .checked_add(8)
        .ok_or(FscoError::Format { offset: 4, msg: "label count overflow".into() })?;
    if bytes.len() < end {
        return Err(FscoError::Length { expected: end, found: bytes.len() });
    }
    Ok(bytes[8..end].to_vec())
}

pub fn encode_idx_images(images: &IdxImages) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.pixels.len());
    for v in [IMAGES_MAGIC, images.count as u32, images.rows as u32, images.cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(&images.pixels);
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Loads an image/label file pair; pixels map affinely from `[0, 255]` to `[−1, 1]`.
pub fn load_mnist(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let read = |p: &Path| std::fs::read(p).map_err(|e| FscoError::io(p, e));
    let images = parse_idx_images(&read(images_path)?)?;
    let labels = parse_idx_labels(&read(labels_path)?)?;
    if labels.len() != images.count {
        return Err(FscoError::Format {
            offset: 4,
            msg: format!("{} labels for {} images", labels.len(), images.count),
        });
    }
    let dim = images.rows * images.cols;
    let data = images.pixels.iter().map(|&p| p as f64 / 127.5 - 1.0).collect();
    Dataset::new(Tensor::matrix(images.count, dim, data)?, "mnist")
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn tiny() -> IdxImages {
        IdxImages { count: 2, rows: 2, cols: 2, pixels: vec![0, 0, 0, 0, 255, 128, 1, 254] }
    }

    #[test]
    fn loads_pixels_into_unit_range() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = (dir.path().join("i"), dir.path().join("l"));
        std::fs::write(&ip, encode_idx_images(&tiny())).unwrap();
        std::fs::write(&lp, encode_idx_labels(&[3, 7])).unwrap();
        let ds = load_mnist(&ip, &lp).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.data_dim(), 4);
        assert_eq!(ds.samples().row(0), &[-1.0; 4]);
        assert_eq!(ds.samples().at(1, 0), 1.0);
    }

    #[test]
    fn zero_magic_names_offset() {
        let mut bytes = encode_idx_images(&tiny());
        bytes[..4].copy_from_slice(&[0, 0, 0, 0]);
        let err = parse_idx_images(&bytes).unwrap_err();
        assert!(matches!(err, FscoError::Format { offset: 0, .. }));
        assert!(err.to_string().contains("offset 0"));
    }

    #[test]
    fn truncated_payload_is_a_length_error() {
        let bytes = encode_idx_images(&tiny());
        let err = parse_idx_images(&bytes[..bytes.len() - 1]).unwrap_err();
        assert!(matches!(err, FscoError::Length { expected: 24, found: 23 }));
        assert!(matches!(parse_idx_labels(&[0, 0, 8]), Err(FscoError::Length { .. })));
    }

    #[test]
    fn label_count_must_match() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = (dir.path().join("i"), dir.path().join("l"));
        std::fs::write(&ip, encode_idx_images(&tiny())).unwrap();
        std::fs::write(&lp, encode_idx_labels(&[3])).unwrap();
        assert!(load_mnist(&ip, &lp).is_err());
    }

    proptest! {
        #[test]
        fn fuzzed_headers_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..64)) {
            let _ = parse_idx_images(&bytes);
            let _ = parse_idx_labels(&bytes);
        }

        #[test]
        fn fuzzed_dimensions_never_panic(n in any::<u32>(), r in any::<u32>(), c in any::<u32>()) {
            let mut bytes = IMAGES_MAGIC.to_be_bytes().to_vec();
            for v in [n, r, c] {
                bytes.extend_from_slice(&v.to_be_bytes());
            }
            bytes.extend_from_slice(&[0; 32]);
            let _ = parse_idx_images(&bytes);
        }
    }
}
