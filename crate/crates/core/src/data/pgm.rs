//! Binary portable graymap (P5) output for generated image grids.

use std::io::Write;
use std::path::Path;

use crate::error::{FscoError, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub pixels: Vec<u8>,
}

fn exact_sqrt(n: usize) -> Option<usize> {
    let r = (n as f64).sqrt().round() as usize;
    (r * r == n).then_some(r)
}

/// Tiles `k` square images (one per row of `samples`) into a `√k × √k` grid.
/// Values map from `[−1, 1]` to `[0, 255]`; out-of-range values are clamped
/// and counted in the return value.
pub fn write_image_grid(samples: &Tensor, path: &Path) -> Result<usize> {
    let k = samples.rows();
    let grid = exact_sqrt(k)
        .filter(|&g| g > 0)
        .ok_or_else(|| FscoError::Argument(format!("{k} samples do not form a square grid")))?;
    let side = exact_sqrt(samples.cols())
        .ok_or_else(|| FscoError::Argument(format!("{} pixels is not a square image", samples.cols())))?;
    let dim = grid * side;
    let mut pixels = vec![0u8; dim * dim];
    let mut clamped = 0;
    for (i, &v) in samples.data().iter().enumerate() {
        if !(-1.0..=1.0).contains(&v) {
            clamped += 1;
        }
        let v = if v.is_nan() { -1.0 } else { v.clamp(-1.0, 1.0) };
        let (tile, offset) = (i / (side * side), i % (side * side));
        let (ty, tx) = (tile / grid, tile % grid);
        let (py, px) = (offset / side, offset % side);
        pixels[(ty * side + py) * dim + tx * side + px] = ((v + 1.0) * 127.5).round() as u8;
    }
    let mut f = std::fs::File::create(path).map_err(|e| FscoError::io(path, e))?;
    write!(f, "P5\n{dim} {dim}\n255\n")
        .and_then(|_| f.write_all(&pixels))
        .map_err(|e| FscoError::io(path, e))?;
    Ok(clamped)
}

pub fn read_pgm(path: &Path) -> Result<Pgm> {
    let bytes = std::fs::read(path).map_err(|e| FscoError::io(path, e))?;
    let mut pos = 0;
    let mut token = || -> Result<String> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(FscoError::Format { offset: start, msg: "truncated PGM header".into() });
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P5" {
        return Err(FscoError::Format { offset: 0, msg: "not a binary PGM".into() });
    }
    let mut num = |what: &str| -> Result<usize> {
        token()?
            .parse()
            .map_err(|_| FscoError::Format { offset: 0, msg: format!("bad PGM {what}") })
    };
    let width = num("width")?;
    let height = num("height")?;
    let maxval = num("maxval")? as u16;
    let start = pos + 1;
    let end = start + width * height;
    if bytes.len() < end {
        return Err(FscoError::Length { expected: end, found: bytes.len() });
    }
    Ok(Pgm { width, height, maxval, pixels: bytes[start..end].to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixteen_mnist_tiles_make_112_square() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.pgm");
        write_image_grid(&Tensor::filled(&[16, 784], -1.0), &p).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        let header: Vec<&str> = std::str::from_utf8(&bytes[..15]).unwrap().split_whitespace().collect();
        assert_eq!(header, ["P5", "112", "112", "255"]);
        let img = read_pgm(&p).unwrap();
        assert_eq!(img.pixels.len(), 112 * 112);
        assert!(img.pixels.iter().all(|&b| b == 0));
    }

    #[test]
    fn round_trip_recovers_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.pgm");
        // 4 tiles of 2×2; tile t pixel j holds value (t*4 + j)/7.5 - 1
        let vals: Vec<f64> = (0..16).map(|i| i as f64 / 7.5 - 1.0).collect();
        write_image_grid(&Tensor::matrix(4, 4, vals.clone()).unwrap(), &p).unwrap();
        let img = read_pgm(&p).unwrap();
        assert_eq!((img.width, img.height, img.maxval), (4, 4, 255));
        let byte = |i: usize| ((vals[i] + 1.0) * 127.5).round() as u8;
        let expect = [
            byte(0), byte(1), byte(4), byte(5),
            byte(2), byte(3), byte(6), byte(7),
            byte(8), byte(9), byte(12), byte(13),
            byte(10), byte(11), byte(14), byte(15),
        ];
        assert_eq!(img.pixels, expect);
    }

    #[test]
    fn out_of_range_values_are_counted() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.pgm");
        let t = Tensor::matrix(1, 4, vec![-2.0, 0.0, 1.0, 3.0]).unwrap();
        assert_eq!(write_image_grid(&t, &p).unwrap(), 2);
        assert_eq!(read_pgm(&p).unwrap().pixels, vec![0, 128, 255, 255]);
    }

    #[test]
    fn non_square_counts_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.pgm");
        assert!(write_image_grid(&Tensor::zeros(&[3, 784]), &p).is_err());
        assert!(write_image_grid(&Tensor::zeros(&[4, 10]), &p).is_err());
    }
}
