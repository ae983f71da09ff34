//! The survival agent: look one step ahead with every action's transition
//! model, score each predicted state with the danger map and take the
//! least dangerous action.
//!
//! Learning happens only when an episode ends in failure: the danger map is
//! fitted on that episode's head and tail, then the transition models are
//! fitted on replay samples. Truncated episodes train nothing.

use rand::{Rng, RngCore};

use crate::danger::{compute_targets, DangerLoss, DangerNet, DangerTraining};
use crate::env::{Environment, State};
use crate::error::Result;
use crate::memory::{EpisodeBuffer, ReplayBuffer, TransitionRecord};
use crate::transition::{TransitionLoss, TransitionModels};

/// Anything that scores a state's danger.
pub trait DangerEstimate {
    fn danger(&self, state: &[f64]) -> Result<f64>;
}

impl DangerEstimate for DangerNet {
    fn danger(&self, state: &[f64]) -> Result<f64> {
        self.eval(state)
    }
}

/// Linear decay from `start` to `end` over `decay_steps` env steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_steps: u64,
}

impl EpsilonSchedule {
    pub fn constant(epsilon: f64) -> Self {
        Self {
            start: epsilon,
            end: epsilon,
            decay_steps: 0,
        }
    }

    pub fn value(&self, steps: u64) -> f64 {
        if self.decay_steps == 0 || steps >= self.decay_steps {
            return self.end;
        }
        let frac = steps as f64 / self.decay_steps as f64;
        self.start + (self.end - self.start) * frac
    }
}

/// Index of the smallest value; ties go to the lowest index.
pub fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// Danger of each action's predicted next state.
pub fn lookahead_dangers<D: DangerEstimate + ?Sized>(
    danger: &D,
    models: &TransitionModels,
    state: &[f64],
) -> Result<Vec<f64>> {
    models
        .predict_all(state)?
        .iter()
        .map(|s| danger.danger(s))
        .collect()
}

/// Epsilon-greedy over the least-dangerous lookahead action.
pub fn select_action<D: DangerEstimate + ?Sized>(
    danger: &D,
    models: &TransitionModels,
    state: &[f64],
    epsilon: f64,
    rng: &mut dyn RngCore,
) -> Result<usize> {
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        return Ok(rng.gen_range(0..models.num_actions()));
    }
    Ok(argmin(&lookahead_dangers(danger, models, state)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurviveSettings {
    pub horizon: usize,
    pub gamma: f64,
    pub danger: DangerTraining,
    pub transition_batch_size: usize,
    pub transition_steps: usize,
    pub warmup_episodes: u64,
    pub epsilon: EpsilonSchedule,
    pub replay_capacity: usize,
}

/// Outcome of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub index: u64,
    pub length: usize,
    pub total_return: f64,
    pub terminated: bool,
    pub truncated: bool,
    /// Cumulative env steps at the end of the episode.
    pub total_steps: u64,
    /// Exploration rate in force at the last step.
    pub epsilon: f64,
    pub danger_loss: Option<DangerLoss>,
    pub transition_loss: Option<TransitionLoss>,
}

#[derive(Debug, Clone)]
pub struct SurviveAgent {
    danger: DangerNet,
    models: TransitionModels,
    replay: ReplayBuffer,
    episode: EpisodeBuffer,
    settings: SurviveSettings,
    total_steps: u64,
    episodes: u64,
}

impl SurviveAgent {
    pub fn new(danger: DangerNet, models: TransitionModels, settings: SurviveSettings) -> Self {
        Self {
            danger,
            models,
            replay: ReplayBuffer::new(settings.replay_capacity),
            episode: EpisodeBuffer::new(),
            settings,
            total_steps: 0,
            episodes: 0,
        }
    }

    pub fn danger(&self) -> &DangerNet {
        &self.danger
    }

    pub fn models(&self) -> &TransitionModels {
        &self.models
    }

    pub fn replay(&self) -> &ReplayBuffer {
        &self.replay
    }

    pub fn episode_buffer(&self) -> &EpisodeBuffer {
        &self.episode
    }

    pub fn settings(&self) -> &SurviveSettings {
        &self.settings
    }

    pub fn total_steps(&self) -> u64 {
        self.total_steps
    }

    pub fn episodes(&self) -> u64 {
        self.episodes
    }

    /// Exploration rate for the next step. Warmup episodes act at random.
    pub fn epsilon(&self) -> f64 {
        if self.episodes < self.settings.warmup_episodes {
            1.0
        } else {
            self.settings.epsilon.value(self.total_steps)
        }
    }

    pub fn select_action(&self, state: &[f64], rng: &mut dyn RngCore) -> Result<usize> {
        select_action(&self.danger, &self.models, state, self.epsilon(), rng)
    }

    /// Runs one episode to termination or truncation and learns from it.
    pub fn run_episode(
        &mut self,
        env: &mut dyn Environment,
        rng: &mut dyn RngCore,
    ) -> Result<EpisodeRecord> {
        self.episode.clear();
        let mut state: State = env.reset(rng);
        let mut total_return = 0.0;
        let mut epsilon;
        let outcome = loop {
            epsilon = self.epsilon();
            let action = select_action(&self.danger, &self.models, &state, epsilon, rng)?;
            let step = env.step(action)?;
            self.total_steps += 1;
            total_return += step.reward;
            let record = TransitionRecord {
                state: state.clone(),
                action,
                next_state: step.next_state.clone(),
                reward: step.reward,
                terminated: step.terminated,
                truncated: step.truncated,
            };
            self.replay.push(record.clone());
            self.episode.push(record)?;
            state = step.next_state;
            if step.terminated || step.truncated {
                break (step.terminated, step.truncated);
            }
        };

        let (danger_loss, transition_loss) = if outcome.0 {
            let (d, t) = self.learn_from_failure(rng)?;
            (Some(d), Some(t))
        } else {
            (None, None)
        };

        let record = EpisodeRecord {
            index: self.episodes,
            length: self.episode.len(),
            total_return,
            terminated: outcome.0,
            truncated: outcome.1,
            total_steps: self.total_steps,
            epsilon,
            danger_loss,
            transition_loss,
        };
        self.episodes += 1;
        Ok(record)
    }

    fn learn_from_failure(
        &mut self,
        rng: &mut dyn RngCore,
    ) -> Result<(DangerLoss, TransitionLoss)> {
        let targets = compute_targets(
            &self.episode,
            self.settings.horizon,
            self.settings.gamma,
            rng,
        )?;
        let danger_loss =
            self.danger
                .train(&targets.head, &targets.tail, &self.settings.danger, rng)?;
        let transition_loss = self.models.train(
            &self.replay,
            self.settings.transition_batch_size,
            self.settings.transition_steps,
            rng,
        )?;
        Ok((danger_loss, transition_loss))
    }
}
