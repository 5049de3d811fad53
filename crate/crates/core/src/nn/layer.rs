use rand::Rng;
use rand_distr::{Distribution, Uniform};

use super::Activation;
use crate::error::{FscoError, Result};
use crate::tensor::{matmul_nn, matmul_nt, matmul_tn, Tensor};

/// Affine map followed by an elementwise activation: `y = act(x Wᵀ + b)`.
#[derive(Debug, Clone)]
pub struct DenseLayer {
    weights: Tensor,
    biases: Tensor,
    activation: Activation,
    cache: Option<Cache>,
}

#[derive(Debug, Clone)]
struct Cache {
    input: Tensor,
    preactivation: Tensor,
}

/// Gradients for one layer, shaped like its weights and biases.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    pub weights: Tensor,
    pub biases: Tensor,
}

impl DenseLayer {
    pub fn new(weights: Tensor, biases: Tensor, activation: Activation) -> Result<Self> {
        if weights.shape().len() != 2 {
            return Err(FscoError::Dimension("weights must be a matrix".into()));
        }
        if biases.shape() != [weights.rows()] {
            return Err(FscoError::Dimension(format!(
                "biases {:?} do not match {} output units",
                biases.shape(),
                weights.rows()
            )));
        }
        Ok(DenseLayer { weights, biases, activation, cache: None })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot<R: Rng + ?Sized>(
        inputs: usize,
        outputs: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        if inputs == 0 || outputs == 0 {
            return Err(FscoError::Dimension("layer widths must be positive".into()));
        }
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
        let w = (0..inputs * outputs).map(|_| dist.sample(rng)).collect();
        DenseLayer::new(
            Tensor::matrix(outputs, inputs, w)?,
            Tensor::zeros(&[outputs]),
            activation,
        )
    }

    pub fn inputs(&self) -> usize {
        self.weights.cols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.rows()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &Tensor {
        &self.weights
    }

    pub fn biases(&self) -> &Tensor {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut Tensor {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut Tensor {
        &mut self.biases
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    fn preactivate(&self, input: &Tensor) -> Result<Tensor> {
        if input.shape().len() != 2 || input.cols() != self.inputs() {
            return Err(FscoError::Dimension(format!(
                "layer expects [batch × {}], got {:?}",
                self.inputs(),
                input.shape()
            )));
        }
        let mut z = matmul_nt(input, &self.weights)?;
        let b = self.biases.data();
        for row in z.data_mut().chunks_mut(b.len()) {
            for (zi, bi) in row.iter_mut().zip(b) {
                *zi += bi;
            }
        }
        Ok(z)
    }

    fn activate(&self, z: &Tensor) -> Tensor {
        let mut a = z.clone();
        let act = self.activation;
        a.data_mut().iter_mut().for_each(|v| *v = act.apply(*v));
        a
    }

    /// Forward pass that caches what `backward` needs.
    pub fn forward(&mut self, input: &Tensor) -> Result<Tensor> {
        let z = self.preactivate(input)?;
        let a = self.activate(&z);
        self.cache = Some(Cache { input: input.clone(), preactivation: z });
        Ok(a)
    }

    /// Forward pass without touching the cache.
    pub fn predict(&self, input: &Tensor) -> Result<Tensor> {
        let z = self.preactivate(input)?;
        Ok(self.activate(&z))
    }

    /// Like `predict`, also returning the preactivations.
    pub(crate) fn predict_raw(&self, input: &Tensor) -> Result<(Tensor, Tensor)> {
        let z = self.preactivate(input)?;
        let a = self.activate(&z);
        Ok((z, a))
    }

    /// Consumes the forward cache and returns the parameter gradients and the
    /// gradient with respect to the layer input.
    pub fn backward(&mut self, grad_output: &Tensor) -> Result<(LayerGradient, Tensor)> {
        let cache = self
            .cache
            .take()
            .ok_or_else(|| FscoError::State("backward called without a matching forward".into()))?;
        if grad_output.shape() != cache.preactivation.shape() {
            return Err(FscoError::Dimension(format!(
                "loss gradient {:?} does not match layer output {:?}",
                grad_output.shape(),
                cache.preactivation.shape()
            )));
        }
        let act = self.activation;
        let mut dz = grad_output.clone();
        for (g, &z) in dz.data_mut().iter_mut().zip(cache.preactivation.data()) {
            *g *= act.derivative(z);
        }
        let dw = matmul_tn(&dz, &cache.input)?;
        let out = self.outputs();
        let mut db = vec![0.0; out];
        for row in dz.data().chunks(out) {
            for (acc, v) in db.iter_mut().zip(row) {
                *acc += v;
            }
        }
        let dx = matmul_nn(&dz, &self.weights)?;
        Ok((
            LayerGradient { weights: dw, biases: Tensor::new(vec![out], db)? },
            dx,
        ))
    }

    pub(crate) fn split_params_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (self.weights.data_mut(), self.biases.data_mut())
    }

    pub(crate) fn clear_cache(&mut self) {
        self.cache = None;
    }

    pub fn has_cache(&self) -> bool {
        self.cache.is_some()
    }
}
