//! Run configuration and its line-oriented `key = value` text form.
//!
//! A file names a `preset`; any other key overrides that preset's value.
//! `#` starts a comment. Unknown keys and malformed values are errors that
//! name the key and line.

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use crate::ddpg::DdpgConfig;
use crate::error::{FscoError, Result};
use crate::gan::{GanOptions, GeneratorLoss};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// 28×28 grayscale images.
    Mnist28,
    /// 8-mode Gaussian ring in the plane.
    Synthetic,
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Mnist28 => "mnist28",
            Preset::Synthetic => "synthetic",
        })
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "mnist28" => Ok(Preset::Mnist28),
            "synthetic" => Ok(Preset::Synthetic),
            other => Err(format!("unknown preset `{other}` (expected mnist28 or synthetic)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FscoConfig {
    pub preset: Preset,
    pub seed: u64,

    pub eta_g: f64,
    pub eta_d_base: f64,
    pub u_floor: f64,
    pub batch: usize,
    pub noise_dim: usize,
    pub g_hidden: Vec<usize>,
    pub d_hidden: Vec<usize>,
    pub generator_loss: GeneratorLoss,
    pub halve_d_loss: bool,

    /// Passes over an image dataset; ignored when `cycles` is set.
    pub epochs: u64,
    /// Explicit cycle count. Required for the synthetic stream.
    pub cycles: Option<u64>,
    pub ema_window: usize,

    pub gamma: f64,
    pub tau: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub buffer: usize,
    pub ddpg_batch: usize,
    pub noise: f64,
    pub agent_hidden: Vec<usize>,

    pub mixture_modes: usize,
    pub mixture_radius: f64,
    pub mixture_sigma: f64,
    pub coverage_samples: usize,
    pub coverage_radius: f64,

    /// Write an image grid every this many cycles (0 = final grid only).
    pub sample_every: u64,
    pub data_dir: Option<PathBuf>,
}

impl FscoConfig {
    pub fn preset(preset: Preset) -> Self {
        let common = FscoConfig {
            preset,
            seed: 0,
            eta_g: 0.0002,
            eta_d_base: 0.002,
            u_floor: 0.001,
            batch: 128,
            noise_dim: 100,
            g_hidden: vec![128, 256],
            d_hidden: vec![256, 128],
            generator_loss: GeneratorLoss::NonSaturating,
            halve_d_loss: false,
            epochs: 50,
            cycles: None,
            ema_window: 10,
            gamma: 0.99,
            tau: 0.005,
            actor_lr: 0.0001,
            critic_lr: 0.0001,
            buffer: 10_000,
            ddpg_batch: 64,
            noise: 0.1,
            agent_hidden: vec![64, 64],
            mixture_modes: 8,
            mixture_radius: 2.0,
            mixture_sigma: 0.02,
            coverage_samples: 2000,
            coverage_radius: 3.0,
            sample_every: 0,
            data_dir: None,
        };
        match preset {
            Preset::Mnist28 => common,
            Preset::Synthetic => FscoConfig {
                eta_d_base: 0.005,
                batch: 64,
                noise_dim: 2,
                g_hidden: vec![64, 64],
                d_hidden: vec![64, 64],
                epochs: 1,
                cycles: Some(5000),
                buffer: 100_000,
                ..common
            },
        }
    }

    pub fn ddpg(&self) -> DdpgConfig {
        DdpgConfig {
            state_dim: crate::controller::STATE_DIM,
            hidden: self.agent_hidden.clone(),
            gamma: self.gamma,
            tau: self.tau,
            actor_lr: self.actor_lr,
            critic_lr: self.critic_lr,
            noise_sigma: self.noise,
            batch: self.ddpg_batch,
            buffer_capacity: self.buffer,
            u_floor: self.u_floor,
        }
    }

    pub fn gan_options(&self) -> GanOptions {
        GanOptions { generator_loss: self.generator_loss, halve_d_loss: self.halve_d_loss }
    }

    /// Checks every invariant, reporting the offending key.
    pub fn validate(&self) -> Result<()> {
        let err = |key: &str, msg: &str| {
            Err(FscoError::Config { line: 0, key: key.into(), msg: msg.into() })
        };
        for (key, v) in [
            ("eta_g", self.eta_g),
            ("eta_d_base", self.eta_d_base),
            ("actor_lr", self.actor_lr),
            ("critic_lr", self.critic_lr),
            ("mixture_radius", self.mixture_radius),
            ("mixture_sigma", self.mixture_sigma),
            ("coverage_radius", self.coverage_radius),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return err(key, "must be a positive number");
            }
        }
        if !(self.u_floor > 0.0 && self.u_floor < 1.0) {
            return err("u_floor", "must satisfy 0 < u_floor < 1");
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return err("tau", "soft-update rate must satisfy 0 < tau < 1");
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return err("gamma", "discount must satisfy 0 <= gamma < 1");
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return err("noise", "must be non-negative");
        }
        for (key, v) in [
            ("batch", self.batch),
            ("noise_dim", self.noise_dim),
            ("ema_window", self.ema_window),
            ("ddpg_batch", self.ddpg_batch),
            ("coverage_samples", self.coverage_samples),
        ] {
            if v == 0 {
                return err(key, "must be positive");
            }
        }
        if self.buffer < self.ddpg_batch {
            return err("buffer", "must hold at least one DDPG batch");
        }
        if self.mixture_modes < 2 {
            return err("mixture_modes", "need at least two modes");
        }
        for (key, v) in [("g_hidden", &self.g_hidden), ("d_hidden", &self.d_hidden), ("agent_hidden", &self.agent_hidden)] {
            if v.contains(&0) {
                return err(key, "layer widths must be positive");
            }
        }
        if self.preset == Preset::Synthetic && self.cycles.is_none() {
            return err("cycles", "the synthetic stream needs an explicit cycle count");
        }
        Ok(())
    }

    /// Parses `key = value` text on top of the named preset.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        let mut preset = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| FscoError::Config {
                line: line_no,
                key: line.to_string(),
                msg: "expected `key = value`".into(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key == "preset" {
                preset = Some(value.parse::<Preset>().map_err(|msg| FscoError::Config {
                    line: line_no,
                    key: key.into(),
                    msg,
                })?);
            } else {
                entries.push((line_no, key.to_string(), value.to_string()));
            }
        }
        let preset = preset.ok_or_else(|| FscoError::Config {
            line: 0,
            key: "preset".into(),
            msg: "preset required".into(),
        })?;
        let mut cfg = FscoConfig::preset(preset);
        for (line, key, value) in &entries {
            cfg.set(key, value).map_err(|msg| FscoError::Config { line: *line, key: key.clone(), msg })?;
        }
        cfg.validate().map_err(|e| match e {
            FscoError::Config { key, msg, .. } => {
                let line = entries.iter().rev().find(|(_, k, _)| *k == key).map_or(0, |e| e.0);
                FscoError::Config { line, key, msg }
            }
            e => e,
        })?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| FscoError::io(path, e))?;
        FscoConfig::parse(&text)
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: FromStr>(v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("cannot parse `{v}`"))
        }
        fn list(v: &str) -> std::result::Result<Vec<usize>, String> {
            if v.is_empty() {
                return Ok(Vec::new());
            }
            v.split(',').map(|s| num(s.trim())).collect()
        }
        match key {
            "seed" => self.seed = num(value)?,
            "eta_g" => self.eta_g = num(value)?,
            "eta_d_base" => self.eta_d_base = num(value)?,
            "u_floor" => self.u_floor = num(value)?,
            "batch" => self.batch = num(value)?,
            "noise_dim" => self.noise_dim = num(value)?,
            "g_hidden" => self.g_hidden = list(value)?,
            "d_hidden" => self.d_hidden = list(value)?,
            "generator_loss" => {
                self.generator_loss = match value {
                    "non_saturating" => GeneratorLoss::NonSaturating,
                    "minimax" => GeneratorLoss::Minimax,
                    _ => return Err(format!("expected non_saturating or minimax, got `{value}`")),
                }
            }
            "halve_d_loss" => self.halve_d_loss = num(value)?,
            "epochs" => self.epochs = num(value)?,
            "cycles" => self.cycles = Some(num(value)?),
            "ema_window" => self.ema_window = num(value)?,
            "gamma" => self.gamma = num(value)?,
            "tau" => self.tau = num(value)?,
            "actor_lr" => self.actor_lr = num(value)?,
            "critic_lr" => self.critic_lr = num(value)?,
            "buffer" => self.buffer = num(value)?,
            "ddpg_batch" => self.ddpg_batch = num(value)?,
            "noise" => self.noise = num(value)?,
            "agent_hidden" => self.agent_hidden = list(value)?,
            "mixture_modes" => self.mixture_modes = num(value)?,
            "mixture_radius" => self.mixture_radius = num(value)?,
            "mixture_sigma" => self.mixture_sigma = num(value)?,
            "coverage_samples" => self.coverage_samples = num(value)?,
            "coverage_radius" => self.coverage_radius = num(value)?,
            "sample_every" => self.sample_every = num(value)?,
            "data_dir" => self.data_dir = Some(PathBuf::from(value)),
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    /// Full snapshot in the same text format; `parse(to_text())` reproduces `self`.
    pub fn to_text(&self) -> String {
        let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("preset", self.preset.to_string());
        kv("seed", self.seed.to_string());
        kv("eta_g", format!("{:?}", self.eta_g));
        kv("eta_d_base", format!("{:?}", self.eta_d_base));
        kv("u_floor", format!("{:?}", self.u_floor));
        kv("batch", self.batch.to_string());
        kv("noise_dim", self.noise_dim.to_string());
        kv("g_hidden", join(&self.g_hidden));
        kv("d_hidden", join(&self.d_hidden));
        kv(
            "generator_loss",
            match self.generator_loss {
                GeneratorLoss::NonSaturating => "non_saturating".into(),
                GeneratorLoss::Minimax => "minimax".into(),
            },
        );
        kv("halve_d_loss", self.halve_d_loss.to_string());
        kv("epochs", self.epochs.to_string());
        if let Some(c) = self.cycles {
            kv("cycles", c.to_string());
        }
        kv("ema_window", self.ema_window.to_string());
        kv("gamma", format!("{:?}", self.gamma));
        kv("tau", format!("{:?}", self.tau));
        kv("actor_lr", format!("{:?}", self.actor_lr));
        kv("critic_lr", format!("{:?}", self.critic_lr));
        kv("buffer", self.buffer.to_string());
        kv("ddpg_batch", self.ddpg_batch.to_string());
        kv("noise", format!("{:?}", self.noise));
        kv("agent_hidden", join(&self.agent_hidden));
        kv("mixture_modes", self.mixture_modes.to_string());
        kv("mixture_radius", format!("{:?}", self.mixture_radius));
        kv("mixture_sigma", format!("{:?}", self.mixture_sigma));
        kv("coverage_samples", self.coverage_samples.to_string());
        kv("coverage_radius", format!("{:?}", self.coverage_radius));
        kv("sample_every", self.sample_every.to_string());
        if let Some(d) = &self.data_dir {
            kv("data_dir", d.display().to_string());
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn mnist_preset_matches_hyperparameter_table() {
        let c = FscoConfig::parse("preset = mnist28\n").unwrap();
        assert_eq!(c.eta_g, 0.0002);
        assert_eq!(c.eta_d_base, 0.002);
        assert_eq!(c.batch, 128);
        assert_eq!(c.noise_dim, 100);
        assert_eq!(c.gamma, 0.99);
        assert_eq!(c.tau, 0.005);
        assert_eq!(c.buffer, 10_000);
        assert_eq!(c.ddpg_batch, 64);
        assert_eq!(c.noise, 0.1);
        assert_eq!((c.actor_lr, c.critic_lr), (0.0001, 0.0001));
        assert_eq!(c.epochs, 50);
    }

    #[test]
    fn synthetic_preset_uses_larger_discriminator_rate() {
        let c = FscoConfig::preset(Preset::Synthetic);
        assert_eq!(c.eta_d_base, 0.005);
        assert_eq!(c.u_floor, 0.001);
        assert_eq!(c.buffer, 100_000);
        assert_eq!(c.cycles, Some(5000));
        c.validate().unwrap();
    }

    #[test]
    fn empty_file_needs_preset() {
        let err = FscoConfig::parse("# nothing\n\n").unwrap_err();
        assert!(err.to_string().contains("preset required"), "{err}");
    }

    #[test]
    fn tau_out_of_range_names_key_and_line() {
        let err = FscoConfig::parse("preset = synthetic\ntau = 1.5\n").unwrap_err();
        match err {
            FscoError::Config { line, key, msg } => {
                assert_eq!((line, key.as_str()), (2, "tau"));
                assert!(msg.contains("0 < tau < 1"));
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn bad_keys_and_values() {
        let e = FscoConfig::parse("preset = synthetic\nlearning_rate = 3\n").unwrap_err();
        assert!(matches!(e, FscoError::Config { line: 2, .. }));
        let e = FscoConfig::parse("preset = synthetic\n\nbatch = many\n").unwrap_err();
        assert!(matches!(e, FscoError::Config { line: 3, ref key, .. } if key == "batch"));
        let e = FscoConfig::parse("preset = synthetic\nu_floor = 1\n").unwrap_err();
        assert!(matches!(e, FscoError::Config { ref key, .. } if key == "u_floor"));
        assert!(FscoConfig::parse("preset = imagenet\n").is_err());
        assert!(FscoConfig::parse("preset = synthetic\njust words\n").is_err());
    }

    #[test]
    fn overrides_and_comments() {
        let c = FscoConfig::parse("preset = synthetic # ring\ncycles = 12\ng_hidden = 32, 16\n").unwrap();
        assert_eq!(c.cycles, Some(12));
        assert_eq!(c.g_hidden, vec![32, 16]);
    }

    #[test]
    fn presets_round_trip() {
        for p in [Preset::Mnist28, Preset::Synthetic] {
            let c = FscoConfig::preset(p);
            assert_eq!(FscoConfig::parse(&c.to_text()).unwrap(), c);
        }
    }

    proptest! {
        #[test]
        fn snapshot_round_trips(
            eta_g in 1e-6f64..1.0,
            eta_d in 1e-6f64..1.0,
            u_floor in 1e-6f64..0.99,
            tau in 1e-6f64..0.99,
            seed in any::<u64>(),
            cycles in proptest::option::of(0u64..1_000_000),
            minimax in any::<bool>(),
        ) {
            let mut c = FscoConfig::preset(Preset::Mnist28);
            c.eta_g = eta_g;
            c.eta_d_base = eta_d;
            c.u_floor = u_floor;
            c.tau = tau;
            c.seed = seed;
            c.cycles = cycles;
            c.generator_loss = if minimax { GeneratorLoss::Minimax } else { GeneratorLoss::NonSaturating };
            c.data_dir = Some(PathBuf::from("/tmp/mnist"));
            prop_assert_eq!(FscoConfig::parse(&c.to_text()).unwrap(), c);
        }
    }
}
