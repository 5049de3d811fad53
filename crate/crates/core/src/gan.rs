//! Generator/discriminator pair with externally injected step sizes.

use rand::Rng;

use crate::error::{FscoError, Result};
use crate::nn::{bce_loss, Activation, Network};
use crate::rng::normal_matrix;
use crate::tensor::Tensor;

/// Generator objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GeneratorLoss {
    /// `bce(D(G(z)), 1)`.
    #[default]
    NonSaturating,
    /// `−bce(D(G(z)), 0)`, the literal min-max objective.
    Minimax,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GanOptions {
    pub generator_loss: GeneratorLoss,
    /// Report `Dloss` as the mean of the real and fake terms instead of their sum.
    pub halve_d_loss: bool,
}

/// Losses and discriminator calibration observed during one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GanStepReport {
    pub g_loss: f64,
    pub d_loss: f64,
    pub d_real_mean: f64,
    pub d_fake_mean: f64,
    pub eta_d_used: f64,
    pub eta_g_used: f64,
}

#[derive(Debug, Clone)]
pub struct GanPair {
    pub generator: Network,
    pub discriminator: Network,
    pub options: GanOptions,
    noise_dim: usize,
    data_dim: usize,
    updates: u64,
}

impl GanPair {
    pub fn new(generator: Network, discriminator: Network, options: GanOptions) -> Result<Self> {
        let (noise_dim, data_dim) = match (generator.input_width(), generator.output_width()) {
            (Some(i), Some(o)) => (i, o),
            _ => return Err(FscoError::Dimension("generator has no layers".into())),
        };
        if discriminator.input_width() != Some(data_dim) {
            return Err(FscoError::Dimension(format!(
                "generator emits {data_dim} values but discriminator expects {:?}",
                discriminator.input_width()
            )));
        }
        if discriminator.output_width() != Some(1) {
            return Err(FscoError::Dimension("discriminator must have one output".into()));
        }
        Ok(GanPair { generator, discriminator, options, noise_dim, data_dim, updates: 0 })
    }

    /// Dense GAN: relu generator with a tanh head, leaky-relu discriminator
    /// with a sigmoid head.
    pub fn mlp<R: Rng + ?Sized>(
        noise_dim: usize,
        data_dim: usize,
        g_hidden: &[usize],
        d_hidden: &[usize],
        options: GanOptions,
        rng: &mut R,
    ) -> Result<Self> {
        let g_widths: Vec<usize> =
            std::iter::once(noise_dim).chain(g_hidden.iter().copied()).chain([data_dim]).collect();
        let mut g_acts = vec![Activation::Relu; g_hidden.len()];
        g_acts.push(Activation::Tanh);

        let d_widths: Vec<usize> =
            std::iter::once(data_dim).chain(d_hidden.iter().copied()).chain([1]).collect();
        let mut d_acts = vec![Activation::LeakyRelu; d_hidden.len()];
        d_acts.push(Activation::Sigmoid);

        let generator = Network::mlp(&g_widths, &g_acts, rng)?;
        let discriminator = Network::mlp(&d_widths, &d_acts, rng)?;
        GanPair::new(generator, discriminator, options)
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    pub fn data_dim(&self) -> usize {
        self.data_dim
    }

    /// Number of parameter updates applied so far (D and G steps both count).
    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// Generator samples for `batch` fresh noise vectors.
    pub fn generate<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Tensor> {
        let z = sample_noise(batch, self.noise_dim, rng)?;
        self.generator.predict(&z)
    }

    fn check_real(&self, real: &Tensor) -> Result<()> {
        if real.rows() == 0 || real.cols() != self.data_dim || real.shape().len() != 2 {
            return Err(FscoError::Dimension(format!(
                "real batch must be [n × {}], got {:?}",
                self.data_dim,
                real.shape()
            )));
        }
        Ok(())
    }

    fn d_loss_scale(&self) -> f64 {
        if self.options.halve_d_loss {
            0.5
        } else {
            1.0
        }
    }

    /// One discriminator update on `real` plus a fresh fake batch of the same
    /// size. The generator is only evaluated, never touched.
    pub fn discriminator_step<R: Rng + ?Sized>(
        &mut self,
        real: &Tensor,
        eta_d: f64,
        rng: &mut R,
    ) -> Result<GanStepReport> {
        check_eta(eta_d)?;
        self.check_real(real)?;
        let step = self.updates;
        let n = real.rows();
        let fake = self.generate(n, rng).map_err(|e| e.with_step(step))?;
        let scale = self.d_loss_scale();

        let d_real = self.discriminator.forward(real).map_err(|e| e.with_step(step))?;
        let (loss_real, mut g_real) = bce_loss(&d_real, &Tensor::filled(&[n, 1], 1.0))?;
        scale_in_place(&mut g_real, scale);
        let mut grads = self.discriminator.backward(&g_real)?;

        let d_fake = self.discriminator.forward(&fake).map_err(|e| e.with_step(step))?;
        let (loss_fake, mut g_fake) = bce_loss(&d_fake, &Tensor::zeros(&[n, 1]))?;
        scale_in_place(&mut g_fake, scale);
        grads.accumulate(&self.discriminator.backward(&g_fake)?)?;

        let d_loss = scale * (loss_real + loss_fake);
        if !d_loss.is_finite() {
            return Err(FscoError::Numeric { step: Some(step), what: "discriminator loss".into() });
        }
        self.discriminator.apply_update(&grads, eta_d)?;
        self.updates += 1;

        // Generator-side loss on the same fake batch, pre-update D.
        let g_loss = self.generator_loss_value(&d_fake)?;
        Ok(GanStepReport {
            g_loss,
            d_loss,
            d_real_mean: d_real.mean(),
            d_fake_mean: d_fake.mean(),
            eta_d_used: eta_d,
            eta_g_used: 0.0,
        })
    }

    /// One generator update; gradients flow through the (frozen) discriminator.
    pub fn generator_step<R: Rng + ?Sized>(
        &mut self,
        batch: usize,
        eta_g: f64,
        rng: &mut R,
    ) -> Result<GanStepReport> {
        check_eta(eta_g)?;
        let z = sample_noise(batch, self.noise_dim, rng)?;
        self.generator_step_on(&z, eta_g)
    }

    /// Generator update on caller-supplied noise.
    pub fn generator_step_on(&mut self, z: &Tensor, eta_g: f64) -> Result<GanStepReport> {
        check_eta(eta_g)?;
        let step = self.updates;
        let n = z.rows();
        let fake = self.generator.forward(z).map_err(|e| e.with_step(step))?;
        // Discriminator forward with a cache so its input gradient is available;
        // its parameter gradients are discarded.
        let d_fake = self.discriminator.forward(&fake).map_err(|e| e.with_step(step))?;
        let (g_loss, grad) = match self.options.generator_loss {
            GeneratorLoss::NonSaturating => bce_loss(&d_fake, &Tensor::filled(&[n, 1], 1.0))?,
            GeneratorLoss::Minimax => {
                let (l, mut g) = bce_loss(&d_fake, &Tensor::zeros(&[n, 1]))?;
                scale_in_place(&mut g, -1.0);
                (-l, g)
            }
        };
        if !g_loss.is_finite() {
            return Err(FscoError::Numeric { step: Some(step), what: "generator loss".into() });
        }
        let (_, d_input_grad) = self.discriminator.backward_with_input_grad(&grad)?;
        let g_grads = self.generator.backward(&d_input_grad)?;
        self.generator.apply_update(&g_grads, eta_g)?;
        self.updates += 1;
        Ok(GanStepReport {
            g_loss,
            d_loss: f64::NAN,
            d_real_mean: f64::NAN,
            d_fake_mean: d_fake.mean(),
            eta_d_used: 0.0,
            eta_g_used: eta_g,
        })
    }

    fn generator_loss_value(&self, d_fake: &Tensor) -> Result<f64> {
        let n = d_fake.rows();
        Ok(match self.options.generator_loss {
            GeneratorLoss::NonSaturating => bce_loss(d_fake, &Tensor::filled(&[n, 1], 1.0))?.0,
            GeneratorLoss::Minimax => -bce_loss(d_fake, &Tensor::zeros(&[n, 1]))?.0,
        })
    }

    /// Read-only evaluation of both losses on `real` and a fresh fake batch.
    pub fn evaluate_losses<R: Rng + ?Sized>(&self, real: &Tensor, rng: &mut R) -> Result<GanStepReport> {
        self.check_real(real)?;
        let n = real.rows();
        let fake = self.generate(n, rng)?;
        self.evaluate_on(real, &fake)
    }

    /// Read-only evaluation on caller-supplied real and fake batches.
    pub fn evaluate_on(&self, real: &Tensor, fake: &Tensor) -> Result<GanStepReport> {
        let d_real = self.discriminator.predict(real)?;
        let d_fake = self.discriminator.predict(fake)?;
        let loss_real = bce_loss(&d_real, &Tensor::filled(&[real.rows(), 1], 1.0))?.0;
        let loss_fake = bce_loss(&d_fake, &Tensor::zeros(&[fake.rows(), 1]))?.0;
        let report = GanStepReport {
            g_loss: self.generator_loss_value(&d_fake)?,
            d_loss: self.d_loss_scale() * (loss_real + loss_fake),
            d_real_mean: d_real.mean(),
            d_fake_mean: d_fake.mean(),
            eta_d_used: 0.0,
            eta_g_used: 0.0,
        };
        if !(report.g_loss.is_finite() && report.d_loss.is_finite()) {
            return Err(FscoError::Numeric { step: Some(self.updates), what: "evaluated losses".into() });
        }
        Ok(report)
    }
}

/// `batch × noise_dim` standard normal noise.
pub fn sample_noise<R: Rng + ?Sized>(batch: usize, noise_dim: usize, rng: &mut R) -> Result<Tensor> {
    if batch == 0 || noise_dim == 0 {
        return Err(FscoError::Argument("noise batch and width must be positive".into()));
    }
    Ok(normal_matrix(batch, noise_dim, rng))
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(FscoError::Argument(format!("step size must be positive, got {eta}")))
    }
}

fn scale_in_place(t: &mut Tensor, s: f64) {
    if s != 1.0 {
        t.data_mut().iter_mut().for_each(|v| *v *= s);
    }
}
