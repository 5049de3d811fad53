//! Datasets (MNIST IDX files, synthetic 2-D Gaussian mixtures) and sample
//! image emission.

mod idx;
mod mixture;
mod pgm;

pub use idx::{encode_idx_images, encode_idx_labels, load_mnist, parse_idx_images, parse_idx_labels, IdxImages};
pub use mixture::{mode_coverage, sample_mixture, Coverage, MixtureSpec};
pub use pgm::{read_pgm, write_image_grid, Pgm};

use crate::error::{FscoError, Result};
use crate::tensor::Tensor;

/// Samples stored row-wise, every entry in `[−1, 1]`.
#[derive(Debug, Clone)]
pub struct Dataset {
    samples: Tensor,
    name: String,
}

impl Dataset {
    pub fn new(samples: Tensor, name: impl Into<String>) -> Result<Self> {
        if samples.rows() == 0 {
            return Err(FscoError::Argument("dataset is empty".into()));
        }
        if let Some(v) = samples.data().iter().find(|v| !(-1.0..=1.0).contains(*v)) {
            return Err(FscoError::Argument(format!("dataset value {v} outside [-1, 1]")));
        }
        Ok(Dataset { samples, name: name.into() })
    }

    pub fn samples(&self) -> &Tensor {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.rows() == 0
    }

    pub fn data_dim(&self) -> usize {
        self.samples.cols()
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}
