//! Cart-pole balancing, reimplemented from the classic control benchmark.
//!
//! State is `[x, x_dot, theta, theta_dot]`. Action 0 pushes left, 1 pushes
//! right. Integration is explicit Euler: positions advance with the velocity
//! from the start of the step.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{Environment, State, StepResult};
use crate::error::{Error, Result};

/// Physical constants and episode limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CartPoleParams {
    pub gravity: f64,
    pub mass_cart: f64,
    pub mass_pole: f64,
    pub pole_half_length: f64,
    pub force_magnitude: f64,
    pub time_step: f64,
    /// Radians.
    pub angle_threshold: f64,
    pub position_threshold: f64,
    pub max_steps: usize,
}

impl Default for CartPoleParams {
    fn default() -> Self {
        Self {
            gravity: 9.8,
            mass_cart: 1.0,
            mass_pole: 0.1,
            pole_half_length: 0.5,
            force_magnitude: 10.0,
            time_step: 0.02,
            angle_threshold: 12.0 * 2.0 * std::f64::consts::PI / 360.0,
            position_threshold: 2.4,
            max_steps: 500,
        }
    }
}

impl CartPoleParams {
    pub fn is_failure(&self, state: &[f64]) -> bool {
        let (x, theta) = (state[0], state[2]);
        x < -self.position_threshold
            || x > self.position_threshold
            || theta < -self.angle_threshold
            || theta > self.angle_threshold
    }
}

/// One Euler step of the cart-pole dynamics. Pure.
pub fn cartpole_step(state: &[f64], action: usize, params: &CartPoleParams) -> Result<State> {
    if action > 1 {
        return Err(Error::InvalidAction {
            action,
            num_actions: 2,
        });
    }
    if state.len() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: state.len(),
        });
    }
    let [x, x_dot, theta, theta_dot] = [state[0], state[1], state[2], state[3]];
    let force = if action == 1 {
        params.force_magnitude
    } else {
        -params.force_magnitude
    };

    let total_mass = params.mass_cart + params.mass_pole;
    let pole_mass_length = params.mass_pole * params.pole_half_length;
    let (sin_theta, cos_theta) = theta.sin_cos();

    let temp = (force + pole_mass_length * theta_dot * theta_dot * sin_theta) / total_mass;
    let theta_acc = (params.gravity * sin_theta - cos_theta * temp)
        / (params.pole_half_length
            * (4.0 / 3.0 - params.mass_pole * cos_theta * cos_theta / total_mass));
    let x_acc = temp - pole_mass_length * theta_acc * cos_theta / total_mass;

    let tau = params.time_step;
    Ok(State::new(vec![
        x + tau * x_dot,
        x_dot + tau * x_acc,
        theta + tau * theta_dot,
        theta_dot + tau * theta_acc,
    ]))
}

#[derive(Debug, Clone)]
pub struct CartPole {
    params: CartPoleParams,
    state: State,
    steps: usize,
    done: bool,
}

impl CartPole {
    pub fn new(params: CartPoleParams) -> Self {
        Self {
            params,
            state: State::new(vec![0.0; 4]),
            steps: 0,
            done: true,
        }
    }

    pub fn params(&self) -> &CartPoleParams {
        &self.params
    }

    pub fn state(&self) -> &State {
        &self.state
    }
}

impl Default for CartPole {
    fn default() -> Self {
        Self::new(CartPoleParams::default())
    }
}

impl Environment for CartPole {
    fn name(&self) -> &'static str {
        "cartpole"
    }

    fn state_dim(&self) -> usize {
        4
    }

    fn num_actions(&self) -> usize {
        2
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> State {
        let values = (0..4).map(|_| rng.gen_range(-0.05..=0.05)).collect();
        self.state = State::new(values);
        self.steps = 0;
        self.done = false;
        self.state.clone()
    }

    fn step(&mut self, action: usize) -> Result<StepResult> {
        if self.done {
            return Err(Error::EpisodeFinished);
        }
        let next = cartpole_step(&self.state, action, &self.params)?;
        self.steps += 1;
        let terminated = self.params.is_failure(&next);
        let truncated = !terminated && self.steps >= self.params.max_steps;
        self.done = terminated || truncated;
        self.state = next.clone();
        Ok(StepResult {
            next_state: next,
            reward: 1.0,
            terminated,
            truncated,
        })
    }

    fn is_failure(&self, state: &[f64]) -> bool {
        self.params.is_failure(state)
    }

    fn normalization_scales(&self) -> Vec<f64> {
        vec![
            self.params.position_threshold,
            3.0,
            self.params.angle_threshold,
            3.5,
        ]
    }
}
