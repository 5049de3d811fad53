//! 2-D Gaussian mixtures for mode-collapse measurements.

use std::f64::consts::TAU;

use rand::Rng;

use super::Dataset;
use crate::error::{FscoError, Result};
use crate::rng::standard_normal;
use crate::tensor::Tensor;

/// Mixture of isotropic Gaussians in the plane.
///
/// Samples are divided by `ring_radius + 3·sigma` so the data lands in
/// `[−1, 1]`; every method working with samples uses that scaled frame.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    pub modes: Vec<[f64; 2]>,
    pub sigma: f64,
    pub ring_radius: f64,
}

impl MixtureSpec {
    /// `k` modes evenly spaced on a circle.
    pub fn ring(k: usize, radius: f64, sigma: f64) -> Result<Self> {
        let modes = (0..k)
            .map(|i| {
                let a = TAU * i as f64 / k as f64;
                [radius * a.cos(), radius * a.sin()]
            })
            .collect();
        let spec = MixtureSpec { modes, sigma, ring_radius: radius };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes.len() < 2 {
            return Err(FscoError::Argument("a mixture needs at least two modes".into()));
        }
        if !(self.sigma > 0.0) || !(self.ring_radius > 0.0) {
            return Err(FscoError::Argument("sigma and ring radius must be positive".into()));
        }
        Ok(())
    }

    pub fn scale(&self) -> f64 {
        self.ring_radius + 3.0 * self.sigma
    }

    /// Mode centers in the scaled frame.
    pub fn scaled_centers(&self) -> Vec<[f64; 2]> {
        let s = self.scale();
        self.modes.iter().map(|c| [c[0] / s, c[1] / s]).collect()
    }

    pub fn scaled_sigma(&self) -> f64 {
        self.sigma / self.scale()
    }
}

/// `n` draws: mode uniform, isotropic jitter `sigma`, then scaled. Rare draws
/// beyond the scale box are clamped to keep the `[−1, 1]` contract.
pub fn sample_mixture<R: Rng + ?Sized>(spec: &MixtureSpec, n: usize, rng: &mut R) -> Result<Dataset> {
    spec.validate()?;
    if n == 0 {
        return Err(FscoError::Argument("sample count must be positive".into()));
    }
    let scale = spec.scale();
    let k = spec.modes.len();
    let mut data = Vec::with_capacity(2 * n);
    for _ in 0..n {
        let c = spec.modes[rng.random_range(0..k)];
        for coord in c {
            let v = (coord + spec.sigma * standard_normal(rng)) / scale;
            data.push(v.clamp(-1.0, 1.0));
        }
    }
    Dataset::new(Tensor::matrix(n, 2, data)?, "mixture")
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Coverage {
    pub covered_modes: usize,
    pub high_quality_fraction: f64,
    /// Points within the radius of each mode, in `spec.modes` order.
    pub per_mode: Vec<usize>,
}

/// A point is high quality if it lies within `radius_mult·sigma` of some
/// center; a mode is covered when at least `n/(10K)` points are attributed to it.
pub fn mode_coverage(points: &Tensor, spec: &MixtureSpec, radius_mult: f64) -> Result<Coverage> {
    if !(radius_mult > 0.0) {
        return Err(FscoError::Argument("radius_mult must be positive".into()));
    }
    if points.cols() != 2 {
        return Err(FscoError::Dimension(format!("points must be [n × 2], got {:?}", points.shape())));
    }
    let centers = spec.scaled_centers();
    let r2 = (radius_mult * spec.scaled_sigma()).powi(2);
    let mut per_mode = vec![0usize; centers.len()];
    let mut near = 0usize;
    for i in 0..points.rows() {
        let p = points.row(i);
        let (best, d2) = centers
            .iter()
            .enumerate()
            .map(|(j, c)| (j, (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("at least two modes");
        if d2 <= r2 {
            per_mode[best] += 1;
            near += 1;
        }
    }
    let n = points.rows();
    let k = centers.len();
    // count ≥ n/(10K), kept in integers
    let covered_modes = per_mode.iter().filter(|&&c| c > 0 && c * 10 * k >= n).count();
    Ok(Coverage {
        covered_modes,
        high_quality_fraction: if n == 0 { 0.0 } else { near as f64 / n as f64 },
        per_mode,
    })
}
