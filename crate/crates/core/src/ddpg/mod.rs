//! DDPG agent: actor-critic with eval/target networks, soft target tracking,
//! experience replay and clamped Gaussian exploration.

mod agent;
mod replay;

pub use agent::{soft_update, DdpgAgent, DdpgConfig, UpdateStats, ACTION_DIM};
pub use replay::{ReplayBuffer, Transition};
