//! Fast-slow co-advancing GAN training: a DDPG agent picks the discriminator's
//! step size every cycle, rewarded for keeping the generator and discriminator
//! losses close.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod controller;
pub mod data;
pub mod ddpg;
pub mod error;
pub mod experiment;
pub mod gan;
pub mod nn;
pub mod par;
pub mod rng;
pub mod telemetry;
pub mod tensor;

pub use error::{FscoError, Result};
pub use tensor::Tensor;
