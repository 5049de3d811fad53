use rand::Rng;

use super::{Activation, DenseLayer, LayerGradient};
use crate::error::{FscoError, Result};
use crate::tensor::Tensor;

/// Per-layer gradients produced by one backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub layers: Vec<LayerGradient>,
}

impl GradientSet {
    pub fn zeros_like(net: &Network) -> Self {
        GradientSet {
            layers: net
                .layers()
                .iter()
                .map(|l| LayerGradient {
                    weights: Tensor::zeros(l.weights().shape()),
                    biases: Tensor::zeros(l.biases().shape()),
                })
                .collect(),
        }
    }

    /// Flattened view in the same order as [`Network::params`].
    pub fn flat(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|g| g.weights.data().iter().chain(g.biases.data()).copied())
    }

    pub fn flat_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.layers
            .iter_mut()
            .flat_map(|g| g.weights.data_mut().iter_mut().chain(g.biases.data_mut().iter_mut()))
    }

    /// Elementwise accumulate another congruent gradient set.
    pub fn accumulate(&mut self, other: &GradientSet) -> Result<()> {
        if self.layers.len() != other.layers.len()
            || self.layers.iter().zip(&other.layers).any(|(a, b)| {
                a.weights.shape() != b.weights.shape() || a.biases.shape() != b.biases.shape()
            })
        {
            return Err(FscoError::Dimension("gradient sets are not congruent".into()));
        }
        for (a, b) in self.flat_mut().zip(other.flat()) {
            *a += b;
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.flat().map(f64::abs).fold(0.0, f64::max)
    }
}

/// A feed-forward chain of dense layers.
#[derive(Debug, Clone)]
pub struct Network {
    layers: Vec<DenseLayer>,
}

impl Network {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(FscoError::Dimension(format!(
                    "layer {i} emits {} units but layer {} expects {}",
                    pair[0].outputs(),
                    i + 1,
                    pair[1].inputs()
                )));
            }
        }
        Ok(Network { layers })
    }

    /// Glorot-initialized MLP. `widths` lists every layer boundary, input first;
    /// `activations` has one entry per layer.
    pub fn mlp<R: Rng + ?Sized>(
        widths: &[usize],
        activations: &[Activation],
        rng: &mut R,
    ) -> Result<Self> {
        if widths.len() < 2 || activations.len() != widths.len() - 1 {
            return Err(FscoError::Dimension(format!(
                "{} widths need {} activations, got {}",
                widths.len(),
                widths.len().saturating_sub(1),
                activations.len()
            )));
        }
        let layers = widths
            .windows(2)
            .zip(activations)
            .map(|(w, &act)| DenseLayer::glorot(w[0], w[1], act, rng))
            .collect::<Result<Vec<_>>>()?;
        Network::new(layers)
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn input_width(&self) -> Option<usize> {
        self.layers.first().map(DenseLayer::inputs)
    }

    pub fn output_width(&self) -> Option<usize> {
        self.layers.last().map(DenseLayer::outputs)
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::parameter_count).sum()
    }

    pub fn forward(&mut self, input: &Tensor) -> Result<Tensor> {
        let mut x = input.clone();
        for layer in &mut self.layers {
            x = layer.forward(&x)?;
        }
        check_finite(&x)?;
        Ok(x)
    }

    /// Inference-only forward pass; leaves the backward cache untouched.
    pub fn predict(&self, input: &Tensor) -> Result<Tensor> {
        let mut x = input.clone();
        for layer in &self.layers {
            x = layer.predict(&x)?;
        }
        check_finite(&x)?;
        Ok(x)
    }

    /// Inference pass that also reports the sign of every preactivation feeding
    /// a kinked activation (relu family). Two inputs with equal signatures lie in
    /// the same linear region of the network.
    pub fn predict_with_signature(&self, input: &Tensor) -> Result<(Tensor, Vec<bool>)> {
        let mut x = input.clone();
        let mut signature = Vec::new();
        for layer in &self.layers {
            let (z, a) = layer.predict_raw(&x)?;
            if layer.activation().has_kink() {
                signature.extend(z.data().iter().map(|&v| v > 0.0));
            }
            x = a;
        }
        check_finite(&x)?;
        Ok((x, signature))
    }

    pub fn backward(&mut self, loss_grad: &Tensor) -> Result<GradientSet> {
        self.backward_with_input_grad(loss_grad).map(|(g, _)| g)
    }

    /// Backpropagates `loss_grad` (the gradient of the scalar loss with respect
    /// to the network output) and also returns the gradient with respect to the
    /// network input.
    pub fn backward_with_input_grad(&mut self, loss_grad: &Tensor) -> Result<(GradientSet, Tensor)> {
        if self.layers.iter().any(|l| !l.has_cache()) {
            self.layers.iter_mut().for_each(DenseLayer::clear_cache);
            return Err(FscoError::State("backward called without a matching forward".into()));
        }
        let mut grad = loss_grad.clone();
        let mut layers = Vec::with_capacity(self.layers.len());
        for layer in self.layers.iter_mut().rev() {
            let (g, dx) = layer.backward(&grad)?;
            layers.push(g);
            grad = dx;
        }
        layers.reverse();
        Ok((GradientSet { layers }, grad))
    }

    /// Plain gradient descent: `θ ← θ − η·∇θ` for every weight and bias.
    pub fn apply_update(&mut self, grads: &GradientSet, eta: f64) -> Result<()> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(FscoError::Argument(format!("step size must be positive, got {eta}")));
        }
        self.check_congruent(grads)?;
        for (layer, g) in self.layers.iter_mut().zip(&grads.layers) {
            for (w, d) in layer.weights_mut().data_mut().iter_mut().zip(g.weights.data()) {
                *w -= eta * d;
            }
            for (b, d) in layer.biases_mut().data_mut().iter_mut().zip(g.biases.data()) {
                *b -= eta * d;
            }
        }
        Ok(())
    }

    pub fn check_congruent(&self, grads: &GradientSet) -> Result<()> {
        let ok = self.layers.len() == grads.layers.len()
            && self.layers.iter().zip(&grads.layers).all(|(l, g)| {
                l.weights().shape() == g.weights.shape() && l.biases().shape() == g.biases.shape()
            });
        if ok {
            Ok(())
        } else {
            Err(FscoError::Dimension("gradient set does not match network".into()))
        }
    }

    /// Whether two networks have identical layer shapes and activations.
    pub fn same_architecture(&self, other: &Network) -> bool {
        self.layers.len() == other.layers.len()
            && self.layers.iter().zip(&other.layers).all(|(a, b)| {
                a.weights().shape() == b.weights().shape() && a.activation() == b.activation()
            })
    }

    /// Flattened parameters: per layer, weights (row-major) then biases.
    pub fn params(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights().data().iter().chain(l.biases().data()).copied())
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.layers.iter_mut().flat_map(|l| {
            let (w, b) = l.split_params_mut();
            w.iter_mut().chain(b.iter_mut())
        })
    }

    /// Mutable access to the parameter at flat index `i`.
    pub fn param_mut(&mut self, mut i: usize) -> Option<&mut f64> {
        for layer in &mut self.layers {
            let nw = layer.weights().len();
            let nb = layer.biases().len();
            if i < nw {
                return layer.weights_mut().data_mut().get_mut(i);
            }
            if i < nw + nb {
                return layer.biases_mut().data_mut().get_mut(i - nw);
            }
            i -= nw + nb;
        }
        None
    }

    pub fn max_param_diff(&self, other: &Network) -> f64 {
        self.params()
            .zip(other.params())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn check_finite(t: &Tensor) -> Result<()> {
    if t.is_finite() {
        Ok(())
    } else {
        Err(FscoError::numeric("network output is not finite"))
    }
}
