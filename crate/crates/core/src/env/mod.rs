//! Environments with a discrete action space and an absorbing failure set.
//!
//! Every environment distinguishes *termination* (entering a failure state)
//! from *truncation* (hitting the episode time limit). Only termination is
//! evidence of danger.

mod cartpole;
mod corridor;

use std::ops::Deref;

use rand::RngCore;

use crate::error::Result;

pub use cartpole::{cartpole_step, CartPole, CartPoleParams};
pub use corridor::Corridor;

/// An environment observation.
#[derive(Debug, Clone, PartialEq)]
pub struct State(Vec<f64>);

impl State {
    pub fn new(values: Vec<f64>) -> Self {
        State(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Deref for State {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for State {
    fn from(values: Vec<f64>) -> Self {
        State(values)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub next_state: State,
    pub reward: f64,
    /// The next state lies in the failure set.
    pub terminated: bool,
    /// The time limit was reached without failure.
    pub truncated: bool,
}

/// Common interface over the built-in environments.
pub trait Environment: Send {
    fn name(&self) -> &'static str;

    fn state_dim(&self) -> usize;

    fn num_actions(&self) -> usize;

    /// Draws an initial state and starts a new episode.
    fn reset(&mut self, rng: &mut dyn RngCore) -> State;

    /// Advances one step. Fails if the episode has already finished.
    fn step(&mut self, action: usize) -> Result<StepResult>;

    /// True when `state` lies in the failure set.
    fn is_failure(&self, state: &[f64]) -> bool;

    /// Fixed per-dimension divisors applied to states before they enter a network.
    fn normalization_scales(&self) -> Vec<f64>;
}

/// Divides each component of `state` by the matching scale.
pub fn normalize(state: &[f64], scales: &[f64]) -> Vec<f64> {
    state.iter().zip(scales).map(|(v, s)| v / s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_divides_componentwise() {
        assert_eq!(normalize(&[2.0, -3.0], &[2.0, 1.5]), vec![1.0, -2.0]);
    }

    #[test]
    fn state_finiteness() {
        assert!(State::new(vec![0.0, 1.0]).is_finite());
        assert!(!State::new(vec![0.0, f64::NAN]).is_finite());
    }
}
