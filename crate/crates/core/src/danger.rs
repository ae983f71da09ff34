//! The danger map: a scalar in (0, 1) per state, learned only from episodes
//! that ended in failure.
//!
//! For a failed episode whose last pre-failure state has index `T`, the
//! states at `T - horizon ..= T` receive targets `gamma^(T - t)` and a sample
//! of earlier states receives 0.

use rand::seq::SliceRandom;
use rand::RngCore;

use crate::env::{normalize, State};
use crate::error::{Error, Result};
use crate::memory::{head_start, head_tail_split, EpisodeBuffer};
use crate::nn::{mse_step, Activation, Network};

#[derive(Debug, Clone, PartialEq)]
pub struct DangerTarget {
    pub state: State,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DangerTargets {
    pub final_index: usize,
    /// Ascending in time; the last entry has target 1.
    pub head: Vec<DangerTarget>,
    /// All targets are 0.
    pub tail: Vec<DangerTarget>,
}

fn check_discount(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "discount must lie in (0, 1), got {gamma}"
        )));
    }
    Ok(())
}

/// Target for every index `0..=final_index` of a failed episode.
///
/// Built backwards from `1.0` at `final_index`, so consecutive head targets
/// satisfy `target[t - 1] == gamma * target[t]` exactly.
pub fn reverse_horizon_targets(final_index: usize, horizon: usize, gamma: f64) -> Vec<f64> {
    let mut targets = vec![0.0; final_index + 1];
    let start = head_start(final_index, horizon);
    let mut value = 1.0;
    for t in (start..=final_index).rev() {
        targets[t] = value;
        value *= gamma;
    }
    targets
}

/// Pairs head states with their discounted targets and sampled tail states with 0.
pub fn compute_targets(
    episode: &EpisodeBuffer,
    horizon: usize,
    gamma: f64,
    rng: &mut dyn RngCore,
) -> Result<DangerTargets> {
    check_discount(gamma)?;
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let split = head_tail_split(episode, horizon, rng)?;
    let values = reverse_horizon_targets(split.final_index, horizon, gamma);
    Ok(DangerTargets {
        final_index: split.final_index,
        head: split
            .head
            .into_iter()
            .map(|s| DangerTarget {
                target: values[s.t],
                state: s.state,
            })
            .collect(),
        tail: split
            .tail
            .into_iter()
            .map(|s| DangerTarget {
                state: s.state,
                target: 0.0,
            })
            .collect(),
    })
}

/// One incremental step toward certain danger: `current + alpha * (1 - current)`.
pub fn soft_blend(current: f64, alpha: f64) -> f64 {
    blend_toward(current, 1.0, alpha)
}

/// `current + alpha * (target - current)`.
pub fn blend_toward(current: f64, target: f64, alpha: f64) -> f64 {
    current + alpha * (target - current)
}

/// How raw targets become regression targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DangerMode {
    /// Regress directly onto the raw targets.
    Regression,
    /// Regress onto `blend_toward(D(s), target, alpha)`, frozen at the start of training.
    Blend,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DangerTraining {
    pub epochs: usize,
    /// Minibatch size within an epoch; 0 means full batch.
    pub batch_size: usize,
    pub learning_rate: f64,
    pub mode: DangerMode,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DangerLoss {
    pub first_epoch: f64,
    pub last_epoch: f64,
}

/// Sigmoid-headed network over normalized states.
#[derive(Debug, Clone, PartialEq)]
pub struct DangerNet {
    network: Network,
    scales: Vec<f64>,
}

impl DangerNet {
    /// `output_bias` sets the initial danger level: sigmoid(-4) is about 0.018.
    pub fn new(
        hidden: &[usize],
        scales: Vec<f64>,
        output_bias: f64,
        rng: &mut dyn RngCore,
    ) -> Result<Self> {
        let mut sizes = vec![scales.len()];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let network = Network::new(&sizes, Activation::Sigmoid, output_bias, rng)?;
        Ok(Self { network, scales })
    }

    pub fn from_network(network: Network, scales: Vec<f64>) -> Result<Self> {
        if network.input_size() != scales.len()
            || network.output_size() != 1
            || network.output_activation() != Activation::Sigmoid
        {
            return Err(Error::InvalidLayout(format!(
                "danger net must be sigmoid-headed {} -> 1, got {:?}",
                scales.len(),
                network.sizes()
            )));
        }
        Ok(Self { network, scales })
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// Danger of `state`, strictly inside (0, 1).
    pub fn eval(&self, state: &[f64]) -> Result<f64> {
        let y = self.network.forward(&normalize(state, &self.scales))?[0];
        Ok(y.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON))
    }

    /// Squared-error regression on the combined head and tail.
    pub fn train(
        &mut self,
        head: &[DangerTarget],
        tail: &[DangerTarget],
        config: &DangerTraining,
        rng: &mut dyn RngCore,
    ) -> Result<DangerLoss> {
        if head.is_empty() {
            return Err(Error::InvalidArgument("danger head is empty".into()));
        }
        let mut samples: Vec<(Vec<f64>, [f64; 1])> = Vec::with_capacity(head.len() + tail.len());
        for item in head.iter().chain(tail) {
            let target = match config.mode {
                DangerMode::Regression => item.target,
                DangerMode::Blend => {
                    blend_toward(self.eval(&item.state)?, item.target, config.alpha)
                }
            };
            samples.push((normalize(&item.state, &self.scales), [target]));
        }

        let batch = if config.batch_size == 0 {
            samples.len()
        } else {
            config.batch_size
        };
        let mut first = None;
        let mut last = 0.0;
        for _ in 0..config.epochs {
            samples.shuffle(rng);
            let mut epoch_loss = 0.0;
            for chunk in samples.chunks(batch) {
                let loss = mse_step(
                    &mut self.network,
                    chunk.iter().map(|(x, y)| (x.as_slice(), y.as_slice())),
                    config.learning_rate,
                )?;
                epoch_loss += loss * chunk.len() as f64;
            }
            last = epoch_loss / samples.len() as f64;
            first.get_or_insert(last);
        }
        Ok(DangerLoss {
            first_epoch: first.unwrap_or(0.0),
            last_epoch: last,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::TransitionRecord;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn failed_episode(final_index: usize) -> EpisodeBuffer {
        let mut ep = EpisodeBuffer::new();
        for t in 0..=final_index {
            ep.push(TransitionRecord {
                state: State::new(vec![t as f64]),
                action: 0,
                next_state: State::new(vec![t as f64 + 1.0]),
                reward: 0.0,
                terminated: t == final_index,
                truncated: false,
            })
            .unwrap();
        }
        ep
    }

    fn training(mode: DangerMode) -> DangerTraining {
        DangerTraining {
            epochs: 500,
            batch_size: 0,
            learning_rate: 1e-2,
            mode,
            alpha: 0.1,
        }
    }

    #[test]
    fn targets_t5_h3_half() {
        let ep = failed_episode(5);
        let targets = compute_targets(&ep, 3, 0.5, &mut rng(0)).unwrap();
        let head: Vec<(f64, f64)> = targets
            .head
            .iter()
            .map(|d| (d.state[0], d.target))
            .collect();
        assert_eq!(
            head,
            vec![(2.0, 0.125), (3.0, 0.25), (4.0, 0.5), (5.0, 1.0)]
        );
        assert!(targets
            .tail
            .iter()
            .all(|d| d.target == 0.0 && d.state[0] < 2.0));
    }

    #[test]
    fn target_arithmetic() {
        let v = reverse_horizon_targets(10, 10, 0.9);
        assert!((v[5] - 0.59049).abs() < 1e-12);
        assert_eq!(v[10], 1.0);
        assert_eq!(reverse_horizon_targets(0, 3, 0.01), vec![1.0]);
    }

    #[test]
    fn truncated_episode_has_no_targets() {
        let mut ep = EpisodeBuffer::new();
        ep.push(TransitionRecord {
            state: State::new(vec![0.0]),
            action: 0,
            next_state: State::new(vec![1.0]),
            reward: 0.0,
            terminated: false,
            truncated: true,
        })
        .unwrap();
        assert!(matches!(
            compute_targets(&ep, 3, 0.9, &mut rng(0)),
            Err(Error::NotTerminated)
        ));
    }

    #[test]
    fn bad_discount_rejected() {
        let ep = failed_episode(3);
        assert!(compute_targets(&ep, 2, 1.0, &mut rng(0)).is_err());
        assert!(compute_targets(&ep, 2, 0.0, &mut rng(0)).is_err());
        assert!(compute_targets(&ep, 0, 0.5, &mut rng(0)).is_err());
    }

    #[test]
    fn soft_blend_examples() {
        assert!((soft_blend(0.5, 0.1) - 0.55).abs() < 1e-15);
        assert_eq!(soft_blend(1.0, 0.37), 1.0);
    }

    #[test]
    fn repeated_blend_matches_closed_form() {
        let (d0, alpha) = (0.2, 0.15);
        let mut d = d0;
        for k in 1..=50 {
            d = soft_blend(d, alpha);
            let closed = 1.0 - (1.0 - d0) * (1.0f64 - alpha).powi(k);
            assert!((d - closed).abs() < 1e-12);
        }
    }

    #[test]
    fn fresh_net_is_optimistic() {
        let net = DangerNet::new(&[64], vec![2.4, 3.0, 0.2094, 3.5], -4.0, &mut rng(0)).unwrap();
        for s in [[0.0; 4], [2.4, 3.0, 0.2, 3.5], [-2.4, -3.0, -0.2, -3.5]] {
            let d = net.eval(&s).unwrap();
            assert!(d > 0.0 && d < 0.05, "{d}");
        }
    }

    #[test]
    fn overfits_single_dangerous_point() {
        let mut net = DangerNet::new(&[16], vec![1.0, 1.0], -4.0, &mut rng(1)).unwrap();
        let s = State::new(vec![0.4, -0.3]);
        let head = vec![
            DangerTarget {
                state: s.clone(),
                target: 1.0
            };
            4
        ];
        net.train(&head, &[], &training(DangerMode::Regression), &mut rng(2))
            .unwrap();
        assert!(net.eval(&s).unwrap() > 0.9);
    }

    #[test]
    fn separates_two_points() {
        let mut net = DangerNet::new(&[16], vec![1.0, 1.0], -4.0, &mut rng(3)).unwrap();
        let a = State::new(vec![0.8, 0.8]);
        let b = State::new(vec![-0.8, -0.8]);
        let head = vec![DangerTarget {
            state: a.clone(),
            target: 1.0,
        }];
        let tail = vec![DangerTarget {
            state: b.clone(),
            target: 0.0,
        }];
        let loss = net
            .train(&head, &tail, &training(DangerMode::Regression), &mut rng(4))
            .unwrap();
        assert!(net.eval(&a).unwrap() > net.eval(&b).unwrap());
        assert!(loss.last_epoch < loss.first_epoch);
    }

    #[test]
    fn blend_mode_moves_toward_targets() {
        let mut net = DangerNet::new(&[16], vec![1.0], -4.0, &mut rng(5)).unwrap();
        let s = State::new(vec![0.5]);
        let before = net.eval(&s).unwrap();
        let head = vec![DangerTarget {
            state: s.clone(),
            target: 1.0,
        }];
        net.train(&head, &[], &training(DangerMode::Blend), &mut rng(6))
            .unwrap();
        let after = net.eval(&s).unwrap();
        let expected = soft_blend(before, 0.1);
        assert!(after > before);
        assert!((after - expected).abs() < 0.02, "{after} vs {expected}");
    }

    #[test]
    fn empty_head_rejected() {
        let mut net = DangerNet::new(&[4], vec![1.0], -4.0, &mut rng(0)).unwrap();
        assert!(net
            .train(&[], &[], &training(DangerMode::Regression), &mut rng(0))
            .is_err());
    }

    #[test]
    fn short_episode_trains_on_head_only() {
        let ep = failed_episode(1);
        let targets = compute_targets(&ep, 20, 0.95, &mut rng(0)).unwrap();
        assert!(targets.tail.is_empty());
        let mut net = DangerNet::new(&[8], vec![4.0], -4.0, &mut rng(0)).unwrap();
        let loss = net
            .train(
                &targets.head,
                &targets.tail,
                &training(DangerMode::Regression),
                &mut rng(1),
            )
            .unwrap();
        assert!(loss.last_epoch.is_finite());
    }

    proptest! {
        #[test]
        fn head_targets_are_geometric(final_index in 0usize..200, horizon in 1usize..50, gamma in 0.01f64..0.99) {
            let v = reverse_horizon_targets(final_index, horizon, gamma);
            let start = head_start(final_index, horizon);
            prop_assert_eq!(v[final_index], 1.0);
            for t in (start + 1)..=final_index {
                prop_assert_eq!(v[t - 1], gamma * v[t]);
            }
            prop_assert!(v[..start].iter().all(|x| *x == 0.0));
        }

        #[test]
        fn soft_blend_monotone_with_unique_fixed_point(a in 0.0f64..1.0, b in 0.0f64..1.0, alpha in 0.001f64..0.999) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(soft_blend(lo, alpha) <= soft_blend(hi, alpha));
            if lo < 1.0 {
                prop_assert!(soft_blend(lo, alpha) != lo);
            }
        }

        #[test]
        fn eval_in_open_unit_interval(seed in any::<u64>(), x in prop::collection::vec(-1e3f64..1e3, 4)) {
            let net = DangerNet::new(&[8], vec![1.0; 4], 30.0, &mut rng(seed)).unwrap();
            let d = net.eval(&x).unwrap();
            prop_assert!(d > 0.0 && d < 1.0);
        }
    }
}
