use rand::Rng;

use crate::error::{FscoError, Result};

/// One `(s, a, r, s′)` record.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
}

/// Fixed-capacity FIFO ring of transitions with uniform minibatch sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    state_dim: usize,
    action_dim: usize,
    storage: Vec<Transition>,
    /// Slot the next insertion overwrites once the ring is full.
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, state_dim: usize, action_dim: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(FscoError::Argument("replay capacity must be positive".into()));
        }
        Ok(ReplayBuffer {
            capacity,
            state_dim,
            action_dim,
            storage: Vec::with_capacity(capacity.min(1 << 16)),
            cursor: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn push(&mut self, t: Transition) -> Result<()> {
        if t.state.len() != self.state_dim
            || t.next_state.len() != self.state_dim
            || t.action.len() != self.action_dim
        {
            return Err(FscoError::Argument(format!(
                "transition shape ({}, {}, {}) does not match buffer ({}, {})",
                t.state.len(),
                t.action.len(),
                t.next_state.len(),
                self.state_dim,
                self.action_dim
            )));
        }
        let finite = t.reward.is_finite()
            && t.state.iter().chain(&t.action).chain(&t.next_state).all(|v| v.is_finite());
        if !finite {
            return Err(FscoError::Argument("transition contains a non-finite value".into()));
        }
        if self.storage.len() < self.capacity {
            self.storage.push(t);
        } else {
            self.storage[self.cursor] = t;
            self.cursor = (self.cursor + 1) % self.capacity;
        }
        Ok(())
    }

    /// Transitions from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> + '_ {
        let (newer, older) = self.storage.split_at(self.cursor);
        older.iter().chain(newer)
    }

    pub fn get(&self, slot: usize) -> Option<&Transition> {
        self.storage.get(slot)
    }

    /// `batch` storage slots drawn uniformly with replacement.
    pub fn sample_slots<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<usize>> {
        if self.storage.len() < batch || batch == 0 {
            return Err(FscoError::State(format!(
                "replay holds {} transitions, need {batch}",
                self.storage.len()
            )));
        }
        let n = self.storage.len();
        Ok((0..batch).map(|_| rng.random_range(0..n)).collect())
    }
}
