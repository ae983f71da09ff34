//! Seeded end-to-end runs built from a [`RunConfig`].
//!
//! A single ChaCha stream seeded from `config.seed` drives network
//! initialization, resets, exploration and minibatch sampling, so a run is a
//! pure function of its config.

use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::agent::{EpisodeRecord, EpsilonSchedule, SurviveAgent, SurviveSettings};
use crate::baseline::{DqnAgent, DqnSettings, QNet};
use crate::config::{Algorithm, RunConfig};
use crate::danger::{DangerNet, DangerTraining};
use crate::error::Result;
use crate::export::{write_metrics, write_timing, MetricsRow};
use crate::nn::Network;
use crate::transition::TransitionModels;

pub struct RunArtifacts {
    pub metrics: Vec<MetricsRow>,
    /// Named final networks, e.g. `danger`, `transition_0`, `q`.
    pub checkpoints: Vec<(String, Network)>,
}

impl RunArtifacts {
    /// Writes `metrics.csv`, `timing.csv`, `config.toml` and one `.nn` file per checkpoint.
    pub fn write(&self, config: &RunConfig, dir: &Path) -> Result<()> {
        write_metrics(&self.metrics, &dir.join("metrics.csv"))?;
        write_timing(&self.metrics, &dir.join("timing.csv"))?;
        crate::export::write_atomic(&dir.join("config.toml"), config.to_toml()?.as_bytes())?;
        for (name, net) in &self.checkpoints {
            net.save(&dir.join(format!("{name}.nn")))?;
        }
        Ok(())
    }
}

fn epsilon_schedule(config: &RunConfig) -> EpsilonSchedule {
    EpsilonSchedule {
        start: config.epsilon_start,
        end: config.epsilon_end,
        decay_steps: config.epsilon_decay_steps as u64,
    }
}

fn keep_going(config: &RunConfig, episodes: usize, steps: u64) -> bool {
    episodes < config.max_episodes
        && (config.max_env_steps == 0 || steps < config.max_env_steps as u64)
}

fn to_row(ep: &EpisodeRecord, started: Instant) -> MetricsRow {
    MetricsRow {
        episode: ep.index,
        length: ep.length,
        total_return: ep.total_return,
        total_steps: ep.total_steps,
        epsilon: ep.epsilon,
        wall_ms: started.elapsed().as_millis() as u64,
    }
}

/// Builds a fresh survival agent for `config`.
pub fn survive_agent(config: &RunConfig, rng: &mut ChaCha8Rng) -> Result<SurviveAgent> {
    let env = config.build_env()?;
    let scales = env.normalization_scales();
    let danger = DangerNet::new(
        &config.danger_hidden,
        scales.clone(),
        config.danger_output_bias,
        rng,
    )?;
    let models = TransitionModels::new(
        env.num_actions(),
        &config.transition_hidden,
        scales,
        config.transition_learning_rate,
        rng,
    )?;
    let settings = SurviveSettings {
        horizon: config.horizon(),
        gamma: config.gamma,
        danger: DangerTraining {
            epochs: config.danger_epochs,
            batch_size: config.danger_batch_size,
            learning_rate: config.danger_learning_rate,
            mode: config.danger_mode,
            alpha: config.alpha,
        },
        transition_batch_size: config.transition_batch_size,
        transition_steps: config.transition_steps,
        warmup_episodes: config.warmup_episodes as u64,
        epsilon: epsilon_schedule(config),
        replay_capacity: config.replay_capacity,
    };
    Ok(SurviveAgent::new(danger, models, settings))
}

/// Trains the survival agent and returns it alongside the metrics.
pub fn train_survive(config: &RunConfig) -> Result<(Vec<MetricsRow>, SurviveAgent)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut env = config.build_env()?;
    let mut agent = survive_agent(config, &mut rng)?;
    let started = Instant::now();
    let mut rows = Vec::new();
    while keep_going(config, rows.len(), agent.total_steps()) {
        let ep = agent.run_episode(env.as_mut(), &mut rng)?;
        rows.push(to_row(&ep, started));
    }
    Ok((rows, agent))
}

/// Trains the DQN baseline and returns it alongside the metrics.
pub fn train_dqn(config: &RunConfig) -> Result<(Vec<MetricsRow>, DqnAgent)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut env = config.build_env()?;
    let q = QNet::new(
        env.num_actions(),
        &config.dqn_hidden,
        env.normalization_scales(),
        &mut rng,
    )?;
    let mut agent = DqnAgent::new(
        q,
        DqnSettings {
            gamma: config.dqn_gamma,
            learning_rate: config.dqn_learning_rate,
            batch_size: config.dqn_batch_size,
            target_sync: config.dqn_target_sync as u64,
            train_start: config.dqn_train_start,
            epsilon: epsilon_schedule(config),
            replay_capacity: config.replay_capacity,
        },
    );
    let started = Instant::now();
    let mut rows = Vec::new();
    let mut steps = 0;
    while keep_going(config, rows.len(), steps) {
        let ep = agent.run_episode(env.as_mut(), &mut rng)?;
        steps = ep.total_steps;
        rows.push(to_row(&ep, started));
    }
    Ok((rows, agent))
}

/// Runs the configured algorithm.
pub fn train(config: &RunConfig) -> Result<RunArtifacts> {
    match config.algo {
        Algorithm::Survive => {
            let (metrics, agent) = train_survive(config)?;
            let mut checkpoints = vec![("danger".to_string(), agent.danger().network().clone())];
            for (a, m) in agent.models().models().iter().enumerate() {
                checkpoints.push((format!("transition_{a}"), m.clone()));
            }
            Ok(RunArtifacts {
                metrics,
                checkpoints,
            })
        }
        Algorithm::Dqn => {
            let (metrics, agent) = train_dqn(config)?;
            Ok(RunArtifacts {
                metrics,
                checkpoints: vec![("q".to_string(), agent.online().network().clone())],
            })
        }
    }
}

/// Metrics of one algorithm on one seed, for side-by-side comparison.
pub struct ComparisonRun {
    pub algo: Algorithm,
    pub seed: u64,
    pub metrics: Vec<MetricsRow>,
}

/// Runs survive and dqn on every seed, each run on its own thread.
pub fn compare(config: &RunConfig, seeds: &[u64]) -> Result<Vec<ComparisonRun>> {
    let jobs: Vec<(Algorithm, u64)> = seeds
        .iter()
        .flat_map(|&s| [(Algorithm::Survive, s), (Algorithm::Dqn, s)])
        .collect();
    let results: Vec<Result<ComparisonRun>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|&(algo, seed)| {
                let cfg = RunConfig {
                    algo,
                    seed,
                    ..config.clone()
                };
                scope.spawn(move || {
                    let metrics = match algo {
                        Algorithm::Survive => train_survive(&cfg)?.0,
                        Algorithm::Dqn => train_dqn(&cfg)?.0,
                    };
                    Ok(ComparisonRun {
                        algo,
                        seed,
                        metrics,
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("training thread panicked"))
            .collect()
    });
    results.into_iter().collect()
}

/// Joined table: `algo,seed,` followed by the metrics columns.
pub fn format_comparison(runs: &[ComparisonRun]) -> String {
    let mut out = format!("algo,seed,{}\n", crate::export::METRICS_HEADER);
    for run in runs {
        let name = match run.algo {
            Algorithm::Survive => "survive",
            Algorithm::Dqn => "dqn",
        };
        let body = crate::export::format_metrics(&run.metrics);
        for line in body.lines().skip(1) {
            out.push_str(&format!("{name},{},{line}\n", run.seed));
        }
    }
    out
}
