use rand::Rng;

use super::{ReplayBuffer, Transition};
use crate::error::{FscoError, Result};
use crate::nn::{mse_loss, Activation, Network};
use crate::rng::standard_normal;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct DdpgConfig {
    pub state_dim: usize,
    pub hidden: Vec<usize>,
    pub gamma: f64,
    pub tau: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Standard deviation of the additive Gaussian exploration noise.
    pub noise_sigma: f64,
    pub batch: usize,
    pub buffer_capacity: usize,
    /// Lower clamp on emitted actions.
    pub u_floor: f64,
}

impl Default for DdpgConfig {
    fn default() -> Self {
        DdpgConfig {
            state_dim: 6,
            hidden: vec![64, 64],
            gamma: 0.99,
            tau: 0.005,
            actor_lr: 1e-4,
            critic_lr: 1e-4,
            noise_sigma: 0.1,
            batch: 64,
            buffer_capacity: 10_000,
            u_floor: 0.001,
        }
    }
}

impl DdpgConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(FscoError::Argument(m.to_string()));
        if self.state_dim == 0 {
            return bad("state_dim must be positive");
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1)");
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return bad("tau must lie in (0, 1)");
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return bad("actor and critic learning rates must be positive");
        }
        if !(self.noise_sigma >= 0.0) {
            return bad("exploration noise must be non-negative");
        }
        if self.batch == 0 || self.buffer_capacity < self.batch {
            return bad("need 0 < batch <= buffer capacity");
        }
        if !(self.u_floor > 0.0 && self.u_floor < 1.0) {
            return bad("u_floor must lie in (0, 1)");
        }
        Ok(())
    }
}

/// Statistics from one agent update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub critic_loss: f64,
    /// Mean `Q(s, μ(s))` over the minibatch before the actor step.
    pub actor_objective: f64,
}

/// Deterministic-policy actor-critic with eval/target networks and replay.
///
/// The actor ends in a sigmoid, so the raw policy lies in (0, 1); the critic
/// sees the state and action concatenated.
#[derive(Debug, Clone)]
pub struct DdpgAgent {
    pub actor: Network,
    pub actor_target: Network,
    pub critic: Network,
    pub critic_target: Network,
    pub replay: ReplayBuffer,
    cfg: DdpgConfig,
}

pub const ACTION_DIM: usize = 1;

impl DdpgAgent {
    pub fn new<R: Rng + ?Sized>(cfg: DdpgConfig, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let mut acts = vec![Activation::Relu; cfg.hidden.len()];

        let actor_widths: Vec<usize> =
            std::iter::once(cfg.state_dim).chain(cfg.hidden.iter().copied()).chain([ACTION_DIM]).collect();
        acts.push(Activation::Sigmoid);
        let actor = Network::mlp(&actor_widths, &acts, rng)?;

        let critic_widths: Vec<usize> = std::iter::once(cfg.state_dim + ACTION_DIM)
            .chain(cfg.hidden.iter().copied())
            .chain([1])
            .collect();
        *acts.last_mut().expect("output layer") = Activation::Identity;
        let critic = Network::mlp(&critic_widths, &acts, rng)?;

        Ok(DdpgAgent {
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor,
            critic,
            replay: ReplayBuffer::new(cfg.buffer_capacity, cfg.state_dim, ACTION_DIM)?,
            cfg,
        })
    }

    pub fn config(&self) -> &DdpgConfig {
        &self.cfg
    }

    /// Raw policy output `μ(s)` for one state.
    pub fn policy(&self, state: &[f64]) -> Result<f64> {
        self.check_state(state)?;
        let s = Tensor::matrix(1, state.len(), state.to_vec())?;
        Ok(self.actor.predict(&s)?.data()[0])
    }

    /// `clamp(μ(s) + σ·N(0,1)·[explore], u_floor, 1)`.
    pub fn select_action<R: Rng + ?Sized>(&self, state: &[f64], explore: bool, rng: &mut R) -> Result<f64> {
        let mu = self.policy(state)?;
        let noise = if explore { self.cfg.noise_sigma * standard_normal(rng) } else { 0.0 };
        Ok((mu + noise).clamp(self.cfg.u_floor, 1.0))
    }

    fn check_state(&self, state: &[f64]) -> Result<()> {
        if state.len() != self.cfg.state_dim {
            return Err(FscoError::Argument(format!(
                "state has {} entries, expected {}",
                state.len(),
                self.cfg.state_dim
            )));
        }
        if state.iter().any(|v| !v.is_finite()) {
            return Err(FscoError::Argument("state contains a non-finite entry".into()));
        }
        Ok(())
    }

    pub fn store(&mut self, t: Transition) -> Result<()> {
        self.replay.push(t)
    }

    /// Whether the replay pool holds at least one minibatch.
    pub fn ready(&self) -> bool {
        self.replay.len() >= self.cfg.batch
    }

    /// One critic regression step, one actor ascent step, then soft updates of
    /// both target networks.
    pub fn update<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<UpdateStats> {
        let slots = self.replay.sample_slots(self.cfg.batch, rng)?;
        let b = slots.len();
        let sd = self.cfg.state_dim;
        let mut s = Vec::with_capacity(b * sd);
        let mut a = Vec::with_capacity(b);
        let mut r = Vec::with_capacity(b);
        let mut s2 = Vec::with_capacity(b * sd);
        for &i in &slots {
            let t = self.replay.get(i).expect("sampled slot");
            s.extend_from_slice(&t.state);
            a.extend_from_slice(&t.action);
            r.push(t.reward);
            s2.extend_from_slice(&t.next_state);
        }
        let s = Tensor::matrix(b, sd, s)?;
        let a = Tensor::matrix(b, ACTION_DIM, a)?;
        let s2 = Tensor::matrix(b, sd, s2)?;

        // TD target from the target networks; no terminal masking.
        let a2 = self.actor_target.predict(&s2)?;
        let q2 = self.critic_target.predict(&s2.hstack(&a2)?)?;
        let y: Vec<f64> = r.iter().zip(q2.data()).map(|(r, q)| r + self.cfg.gamma * q).collect();
        let y = Tensor::matrix(b, 1, y)?;

        let q = self.critic.forward(&s.hstack(&a)?)?;
        let (critic_loss, dq) = mse_loss(&q, &y)?;
        let critic_grads = self.critic.backward(&dq)?;
        self.critic.apply_update(&critic_grads, self.cfg.critic_lr)?;

        // Actor ascends Q(s, μ(s)); the critic is only differentiated through.
        let mu = self.actor.forward(&s)?;
        let q_pi = self.critic.forward(&s.hstack(&mu)?)?;
        let actor_objective = q_pi.mean();
        let neg_mean = Tensor::filled(&[b, 1], -1.0 / b as f64);
        let (_, d_input) = self.critic.backward_with_input_grad(&neg_mean)?;
        let d_action = d_input.columns(sd, sd + ACTION_DIM);
        let actor_grads = self.actor.backward(&d_action)?;
        self.actor.apply_update(&actor_grads, self.cfg.actor_lr)?;

        soft_update(&self.actor, &mut self.actor_target, self.cfg.tau)?;
        soft_update(&self.critic, &mut self.critic_target, self.cfg.tau)?;

        if !(critic_loss.is_finite() && actor_objective.is_finite()) {
            return Err(FscoError::numeric("agent losses"));
        }
        Ok(UpdateStats { critic_loss, actor_objective })
    }
}

/// `θ′ ← τ·θ + (1 − τ)·θ′`, elementwise.
pub fn soft_update(eval: &Network, target: &mut Network, tau: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(FscoError::Argument(format!("tau must lie in [0, 1], got {tau}")));
    }
    if !eval.same_architecture(target) {
        return Err(FscoError::Argument("soft update between different architectures".into()));
    }
    for (t, e) in target.params_mut().zip(eval.params()) {
        *t = tau * e + (1.0 - tau) * *t;
    }
    Ok(())
}
