#![allow(dead_code)]

use std::path::Path;

use fsco::data::{encode_idx_images, encode_idx_labels, IdxImages};
use fsco::experiment::{IMAGES_FILE, LABELS_FILE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Writes an IDX image/label pair of `count` 28×28 images built from random
/// horizontal and vertical bars. Used in place of the real digit files when
/// those are not available.
pub fn write_standin_mnist(dir: &Path, count: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (rows, cols) = (28usize, 28usize);
    let mut pixels = vec![0u8; count * rows * cols];
    let mut labels = Vec::with_capacity(count);
    for img in pixels.chunks_mut(rows * cols) {
        let strokes = rng.random_range(1..=3);
        for _ in 0..strokes {
            let r = rng.random_range(8..20);
            let c = rng.random_range(8..20);
            let ink: u8 = rng.random_range(160..=255);
            let (dr, dc) = if rng.random_bool(0.5) { (2, 8) } else { (8, 2) };
            for y in r - dr..r + dr {
                for x in c - dc..c + dc {
                    img[y * cols + x] = ink;
                }
            }
        }
        labels.push(strokes as u8);
    }
    let images = IdxImages { count, rows, cols, pixels };
    std::fs::write(dir.join(IMAGES_FILE), encode_idx_images(&images)).unwrap();
    std::fs::write(dir.join(LABELS_FILE), encode_idx_labels(&labels)).unwrap();
}
