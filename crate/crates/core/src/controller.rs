//! The co-advancing training cycle.
//!
//! Each cycle the policy picks `u ∈ [u_floor, 1]`, the discriminator trains
//! with `eta_d_base · u`, the generator trains with its fixed rate, and the
//! post-update losses yield the reward `−|Gloss − Dloss|` and the next state.

use std::time::Instant;

use crate::ddpg::{DdpgAgent, Transition, UpdateStats};
use crate::error::{FscoError, Result};
use crate::gan::{GanPair, GanStepReport};
use crate::rng::{stream, Rng, Stream};
use crate::tensor::Tensor;

pub const STATE_DIM: usize = 6;

/// `[Gloss_ema, Dloss_ema, Gloss_ema − Dloss_ema, u(t−1), mean D(real), mean D(fake)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlState(pub [f64; STATE_DIM]);

impl ControlState {
    /// Observation before any training: losses of a discriminator that
    /// outputs 1/2 everywhere, previous action 1.
    pub fn initial() -> Self {
        let ln2 = std::f64::consts::LN_2;
        ControlState([ln2, 2.0 * ln2, -ln2, 1.0, 0.5, 0.5])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Exponential moving averages of the two losses with `alpha = 2/(window+1)`,
/// seeded with the first observation.
#[derive(Debug, Clone, PartialEq)]
pub struct EmaTracker {
    alpha: f64,
    g: Option<f64>,
    d: Option<f64>,
}

impl EmaTracker {
    pub fn new(window: usize) -> Self {
        EmaTracker { alpha: 2.0 / (window.max(1) as f64 + 1.0), g: None, d: None }
    }

    pub fn update(&mut self, g_loss: f64, d_loss: f64) -> (f64, f64) {
        let step = |prev: Option<f64>, x: f64| match prev {
            None => x,
            Some(p) => p + self.alpha * (x - p),
        };
        let g = step(self.g, g_loss);
        let d = step(self.d, d_loss);
        self.g = Some(g);
        self.d = Some(d);
        (g, d)
    }
}

pub fn build_state(report: &GanStepReport, prev_action: f64, ema: &mut EmaTracker) -> ControlState {
    let (g, d) = ema.update(report.g_loss, report.d_loss);
    ControlState([g, d, g - d, prev_action, report.d_real_mean, report.d_fake_mean])
}

/// `−|g_loss − d_loss|`.
pub fn compute_reward(g_loss: f64, d_loss: f64) -> Result<f64> {
    if !(g_loss.is_finite() && d_loss.is_finite()) {
        return Err(FscoError::Argument(format!("non-finite losses ({g_loss}, {d_loss})")));
    }
    Ok(-(g_loss - d_loss).abs())
}

/// `eta_d_base · u`, after re-checking the agent's clamp.
pub fn modulate_step_size(eta_d_base: f64, u: f64, u_floor: f64) -> Result<f64> {
    if !(eta_d_base > 0.0) {
        return Err(FscoError::Argument(format!("base step size {eta_d_base} is not positive")));
    }
    if !(0.0..=1.0).contains(&u) || u < u_floor {
        return Err(FscoError::Argument(format!("action {u} outside [{u_floor}, 1]")));
    }
    Ok(eta_d_base * u)
}

/// Source of the per-cycle step-size multiplier.
pub trait StepSizePolicy {
    /// Exploratory action for `state`.
    fn act(&mut self, state: &ControlState) -> Result<f64>;

    fn observe(&mut self, transition: Transition) -> Result<()>;

    /// At most one learning step; `None` while warming up.
    fn learn(&mut self) -> Result<Option<UpdateStats>>;
}

/// The DDPG agent plus its own exploration and replay random streams.
#[derive(Debug, Clone)]
pub struct AgentPolicy {
    pub agent: DdpgAgent,
    explore_rng: Rng,
    replay_rng: Rng,
}

impl AgentPolicy {
    pub fn new(agent: DdpgAgent, master_seed: u64) -> Self {
        AgentPolicy {
            agent,
            explore_rng: stream(master_seed, Stream::AgentExplore),
            replay_rng: stream(master_seed, Stream::AgentReplay),
        }
    }
}

impl StepSizePolicy for AgentPolicy {
    fn act(&mut self, state: &ControlState) -> Result<f64> {
        self.agent.select_action(state.as_slice(), true, &mut self.explore_rng)
    }

    fn observe(&mut self, transition: Transition) -> Result<()> {
        self.agent.store(transition)
    }

    fn learn(&mut self) -> Result<Option<UpdateStats>> {
        if self.agent.ready() {
            self.agent.update(&mut self.replay_rng).map(Some)
        } else {
            Ok(None)
        }
    }
}

/// Always returns the same multiplier and never learns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantPolicy(pub f64);

impl StepSizePolicy for ConstantPolicy {
    fn act(&mut self, _: &ControlState) -> Result<f64> {
        Ok(self.0)
    }

    fn observe(&mut self, _: Transition) -> Result<()> {
        Ok(())
    }

    fn learn(&mut self) -> Result<Option<UpdateStats>> {
        Ok(None)
    }
}

/// Telemetry for one cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleRecord {
    pub step: u64,
    pub g_loss: f64,
    pub d_loss: f64,
    pub action_u: f64,
    pub eta_fsco_d: f64,
    pub reward: f64,
    pub wall_time: f64,
}

/// Step sizes and smoothing for the loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlParams {
    pub eta_g: f64,
    pub eta_d_base: f64,
    pub u_floor: f64,
    pub ema_window: usize,
}

/// Random streams the GAN side of a cycle consumes. Baseline and controlled
/// runs built from the same master seed draw identical values.
#[derive(Debug, Clone)]
pub struct GanStreams {
    pub noise: Rng,
    pub eval: Rng,
}

impl GanStreams {
    pub fn new(master_seed: u64) -> Self {
        GanStreams { noise: stream(master_seed, Stream::GanNoise), eval: stream(master_seed, Stream::Eval) }
    }
}

/// Owns one GAN, one policy and the observation state for a run.
pub struct FscoLoop<P> {
    pub gan: GanPair,
    pub policy: P,
    pub params: ControlParams,
    streams: GanStreams,
    state: ControlState,
    ema: EmaTracker,
    cycle: u64,
    last_update: Option<UpdateStats>,
}

impl<P: StepSizePolicy> FscoLoop<P> {
    pub fn new(gan: GanPair, policy: P, params: ControlParams, master_seed: u64) -> Self {
        FscoLoop {
            gan,
            policy,
            params,
            streams: GanStreams::new(master_seed),
            state: ControlState::initial(),
            ema: EmaTracker::new(params.ema_window),
            cycle: 0,
            last_update: None,
        }
    }

    pub fn state(&self) -> &ControlState {
        &self.state
    }

    pub fn cycles_run(&self) -> u64 {
        self.cycle
    }

    pub fn last_update(&self) -> Option<UpdateStats> {
        self.last_update
    }

    /// One full cycle on `real`. Errors carry the cycle index.
    pub fn run_cycle(&mut self, real: &Tensor) -> Result<CycleRecord> {
        let cycle = self.cycle;
        self.cycle_inner(real).map_err(|e| e.at_cycle(cycle))
    }

    fn cycle_inner(&mut self, real: &Tensor) -> Result<CycleRecord> {
        let started = Instant::now();
        let p = self.params;

        let u = self.policy.act(&self.state)?;
        let eta_d = modulate_step_size(p.eta_d_base, u, p.u_floor)?;

        self.gan.discriminator_step(real, eta_d, &mut self.streams.noise)?;
        self.gan.generator_step(real.rows(), p.eta_g, &mut self.streams.noise)?;

        let report = self.gan.evaluate_losses(real, &mut self.streams.eval)?;
        let reward = compute_reward(report.g_loss, report.d_loss)?;
        let next = build_state(&report, u, &mut self.ema);
        self.policy.observe(Transition {
            state: self.state.0.to_vec(),
            action: vec![u],
            reward,
            next_state: next.0.to_vec(),
        })?;
        self.state = next;
        self.last_update = self.policy.learn()?;

        let record = CycleRecord {
            step: self.cycle,
            g_loss: report.g_loss,
            d_loss: report.d_loss,
            action_u: u,
            eta_fsco_d: eta_d,
            reward,
            wall_time: started.elapsed().as_secs_f64(),
        };
        self.cycle += 1;
        Ok(record)
    }
}

/// Standalone fixed-rate GAN training, sharing the random-stream layout of
/// [`FscoLoop`] but with no policy, state or reward machinery in the loop.
pub struct FixedRateLoop {
    pub gan: GanPair,
    pub eta_g: f64,
    pub eta_d: f64,
    streams: GanStreams,
    cycle: u64,
}

impl FixedRateLoop {
    pub fn new(gan: GanPair, eta_g: f64, eta_d: f64, master_seed: u64) -> Self {
        FixedRateLoop { gan, eta_g, eta_d, streams: GanStreams::new(master_seed), cycle: 0 }
    }

    /// One D step, one G step, then a read-only loss evaluation.
    pub fn run_cycle(&mut self, real: &Tensor) -> Result<GanStepReport> {
        let cycle = self.cycle;
        let mut run = || -> Result<GanStepReport> {
            self.gan.discriminator_step(real, self.eta_d, &mut self.streams.noise)?;
            self.gan.generator_step(real.rows(), self.eta_g, &mut self.streams.noise)?;
            self.gan.evaluate_losses(real, &mut self.streams.eval)
        };
        let out = run().map_err(|e| e.at_cycle(cycle))?;
        self.cycle += 1;
        Ok(out)
    }
}
