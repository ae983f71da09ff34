//! Model-based reinforcement learning that avoids failure instead of
//! predicting reward.
//!
//! The agent learns per-action transition models and a *danger map* over
//! states, trained only on the states just before each failure. At every
//! step it predicts the next state under each action and takes the one whose
//! predicted state is least dangerous. A small DQN is included as a
//! comparator.

pub mod agent;
pub mod baseline;
pub mod config;
pub mod danger;
pub mod env;
pub mod error;
pub mod export;
pub mod memory;
pub mod nn;
pub mod run;
pub mod transition;

pub use error::{Error, Result};
