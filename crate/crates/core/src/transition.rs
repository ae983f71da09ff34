//! One next-state predictor per discrete action.
//!
//! Each model sees the normalized state and predicts the normalized state
//! change, so `predict(s) = s + scales * model(s / scales)`. A model whose
//! output layer is zero predicts that the state stays put.

use rand::RngCore;

use crate::env::{normalize, State};
use crate::error::{Error, Result};
use crate::memory::ReplayBuffer;
use crate::nn::{mse_step, Activation, Network};

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionModels {
    models: Vec<Network>,
    scales: Vec<f64>,
    learning_rate: f64,
}

/// Loss summary for one call to [`TransitionModels::train`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TransitionLoss {
    /// Mean batch loss per model over the steps where it received data.
    pub mean_loss: Vec<f64>,
    /// Loss of each model's last update, if any.
    pub last_loss: Vec<Option<f64>>,
    /// Number of sampled records routed to each model.
    pub samples: Vec<usize>,
}

impl TransitionModels {
    pub fn new(
        num_actions: usize,
        hidden: &[usize],
        scales: Vec<f64>,
        learning_rate: f64,
        rng: &mut dyn RngCore,
    ) -> Result<Self> {
        if num_actions == 0 {
            return Err(Error::InvalidLayout("need at least one action".into()));
        }
        let dim = scales.len();
        let mut sizes = vec![dim];
        sizes.extend_from_slice(hidden);
        sizes.push(dim);
        let models = (0..num_actions)
            .map(|_| {
                let mut net = Network::new(&sizes, Activation::Identity, 0.0, rng)?;
                net.zero_output_layer();
                Ok(net)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            models,
            scales,
            learning_rate,
        })
    }

    /// Wraps existing networks. All must map `scales.len()` to `scales.len()`.
    pub fn from_networks(
        models: Vec<Network>,
        scales: Vec<f64>,
        learning_rate: f64,
    ) -> Result<Self> {
        let dim = scales.len();
        if models.is_empty() {
            return Err(Error::InvalidLayout("need at least one action".into()));
        }
        for m in &models {
            if m.input_size() != dim || m.output_size() != dim {
                return Err(Error::InvalidLayout(format!(
                    "transition model must map {dim} -> {dim}, got {:?}",
                    m.sizes()
                )));
            }
        }
        Ok(Self {
            models,
            scales,
            learning_rate,
        })
    }

    pub fn num_actions(&self) -> usize {
        self.models.len()
    }

    pub fn models(&self) -> &[Network] {
        &self.models
    }

    pub fn models_mut(&mut self) -> &mut [Network] {
        &mut self.models
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// Predicted next state under `action`.
    pub fn predict(&self, state: &[f64], action: usize) -> Result<State> {
        let model = self.models.get(action).ok_or(Error::InvalidAction {
            action,
            num_actions: self.models.len(),
        })?;
        let delta = model.forward(&normalize(state, &self.scales))?;
        Ok(State::new(
            state
                .iter()
                .zip(&delta)
                .zip(&self.scales)
                .map(|((s, d), k)| s + k * d)
                .collect(),
        ))
    }

    /// Predicted next state for every action, in action order.
    pub fn predict_all(&self, state: &[f64]) -> Result<Vec<State>> {
        (0..self.models.len())
            .map(|a| self.predict(state, a))
            .collect()
    }

    /// Regresses each model onto observed normalized state changes, routing
    /// every sampled record only to the model of its own action.
    pub fn train(
        &mut self,
        replay: &ReplayBuffer,
        batch_size: usize,
        steps: usize,
        rng: &mut dyn RngCore,
    ) -> Result<TransitionLoss> {
        let n = self.models.len();
        let mut loss_sum = vec![0.0; n];
        let mut loss_steps = vec![0usize; n];
        let mut last_loss = vec![None; n];
        let mut samples = vec![0usize; n];

        for _ in 0..steps {
            let batch = replay.sample(batch_size, rng)?;
            let mut routed: Vec<Vec<(Vec<f64>, Vec<f64>)>> = vec![Vec::new(); n];
            for rec in batch {
                if rec.action >= n {
                    return Err(Error::InvalidAction {
                        action: rec.action,
                        num_actions: n,
                    });
                }
                let input = normalize(&rec.state, &self.scales);
                let target: Vec<f64> = rec
                    .next_state
                    .iter()
                    .zip(rec.state.iter())
                    .zip(&self.scales)
                    .map(|((next, cur), k)| (next - cur) / k)
                    .collect();
                routed[rec.action].push((input, target));
            }
            for (action, pairs) in routed.iter().enumerate() {
                if pairs.is_empty() {
                    continue;
                }
                samples[action] += pairs.len();
                let loss = mse_step(
                    &mut self.models[action],
                    pairs.iter().map(|(x, y)| (x.as_slice(), y.as_slice())),
                    self.learning_rate,
                )?;
                loss_sum[action] += loss;
                loss_steps[action] += 1;
                last_loss[action] = Some(loss);
            }
        }

        Ok(TransitionLoss {
            mean_loss: loss_sum
                .iter()
                .zip(&loss_steps)
                .map(|(s, &c)| if c == 0 { 0.0 } else { s / c as f64 })
                .collect(),
            last_loss,
            samples,
        })
    }
}
