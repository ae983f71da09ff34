//! Deep Q-learning comparator: epsilon-greedy over `argmax Q`, uniform replay
//! and a periodically synced target network.

use rand::{Rng, RngCore};

use crate::agent::{EpisodeRecord, EpsilonSchedule};
use crate::env::{normalize, Environment};
use crate::error::{Error, Result};
use crate::memory::{ReplayBuffer, TransitionRecord};
use crate::nn::{Activation, Gradients, Network};

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// `r` for a terminal transition, `r + gamma * max_a Q_target(s', a)` otherwise.
/// Truncated transitions still bootstrap.
pub fn bellman_target(target: &QNet, record: &TransitionRecord, gamma: f64) -> Result<f64> {
    if record.terminated {
        return Ok(record.reward);
    }
    let next = target.values(&record.next_state)?;
    let best = next.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(record.reward + gamma * best)
}

/// State-action value network over normalized states.
#[derive(Debug, Clone, PartialEq)]
pub struct QNet {
    network: Network,
    scales: Vec<f64>,
}

impl QNet {
    pub fn new(
        num_actions: usize,
        hidden: &[usize],
        scales: Vec<f64>,
        rng: &mut dyn RngCore,
    ) -> Result<Self> {
        let mut sizes = vec![scales.len()];
        sizes.extend_from_slice(hidden);
        sizes.push(num_actions);
        Ok(Self {
            network: Network::new(&sizes, Activation::Identity, 0.0, rng)?,
            scales,
        })
    }

    pub fn from_network(network: Network, scales: Vec<f64>) -> Result<Self> {
        if network.input_size() != scales.len() {
            return Err(Error::DimensionMismatch {
                expected: scales.len(),
                got: network.input_size(),
            });
        }
        Ok(Self { network, scales })
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn values(&self, state: &[f64]) -> Result<Vec<f64>> {
        self.network.forward(&normalize(state, &self.scales))
    }

    pub fn greedy(&self, state: &[f64]) -> Result<usize> {
        Ok(argmax(&self.values(state)?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DqnSettings {
    pub gamma: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub target_sync: u64,
    /// Minimum replay size before gradient updates begin.
    pub train_start: usize,
    pub epsilon: EpsilonSchedule,
    pub replay_capacity: usize,
}

#[derive(Debug, Clone)]
pub struct DqnAgent {
    online: QNet,
    target: QNet,
    replay: ReplayBuffer,
    settings: DqnSettings,
    total_steps: u64,
    episodes: u64,
}

impl DqnAgent {
    pub fn new(online: QNet, settings: DqnSettings) -> Self {
        Self {
            target: online.clone(),
            online,
            replay: ReplayBuffer::new(settings.replay_capacity),
            settings,
            total_steps: 0,
            episodes: 0,
        }
    }

    pub fn online(&self) -> &QNet {
        &self.online
    }

    pub fn target(&self) -> &QNet {
        &self.target
    }

    pub fn epsilon(&self) -> f64 {
        self.settings.epsilon.value(self.total_steps)
    }

    pub fn select_action(&self, state: &[f64], rng: &mut dyn RngCore) -> Result<usize> {
        let eps = self.epsilon();
        if eps > 0.0 && rng.gen::<f64>() < eps {
            return Ok(rng.gen_range(0..self.online.network.output_size()));
        }
        self.online.greedy(state)
    }

    /// One gradient step on a replay batch. Returns the mean squared TD error.
    pub fn learn(&mut self, rng: &mut dyn RngCore) -> Result<f64> {
        let batch = self.replay.sample(self.settings.batch_size, rng)?;
        let mut grads = Gradients::zeros_like(&self.online.network);
        let mut loss = 0.0;
        for rec in &batch {
            let y = bellman_target(&self.target, rec, self.settings.gamma)?;
            let input = normalize(&rec.state, &self.online.scales);
            self.online.network.accumulate(&input, &mut grads, |q| {
                let mut g = vec![0.0; q.len()];
                let err = q[rec.action] - y;
                loss += err * err;
                g[rec.action] = 2.0 * err;
                Ok(g)
            })?;
        }
        grads.scale(1.0 / batch.len() as f64);
        self.online
            .network
            .apply_update(&grads, self.settings.learning_rate)?;
        Ok(loss / batch.len() as f64)
    }

    pub fn run_episode(
        &mut self,
        env: &mut dyn Environment,
        rng: &mut dyn RngCore,
    ) -> Result<EpisodeRecord> {
        let mut state = env.reset(rng);
        let mut length = 0;
        let mut total_return = 0.0;
        let mut epsilon;
        let (terminated, truncated) = loop {
            epsilon = self.epsilon();
            let action = self.select_action(&state, rng)?;
            let step = env.step(action)?;
            self.total_steps += 1;
            length += 1;
            total_return += step.reward;
            self.replay.push(TransitionRecord {
                state: state.clone(),
                action,
                next_state: step.next_state.clone(),
                reward: step.reward,
                terminated: step.terminated,
                truncated: step.truncated,
            });
            if self.replay.len() >= self.settings.train_start.max(1) {
                self.learn(rng)?;
            }
            if self.total_steps.is_multiple_of(self.settings.target_sync) {
                self.target = self.online.clone();
            }
            state = step.next_state;
            if step.terminated || step.truncated {
                break (step.terminated, step.truncated);
            }
        };
        let record = EpisodeRecord {
            index: self.episodes,
            length,
            total_return,
            terminated,
            truncated,
            total_steps: self.total_steps,
            epsilon,
            danger_loss: None,
            transition_loss: None,
        };
        self.episodes += 1;
        Ok(record)
    }
}
