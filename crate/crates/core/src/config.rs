//! Run configuration: a flat `key = value` file (TOML subset, no tables).
//!
//! Every key is optional; missing keys take their defaults and unknown keys
//! are rejected. See `docs/config.md` for the full key list.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::danger::DangerMode;
use crate::env::{CartPole, CartPoleParams, Corridor, Environment};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvName {
    Cartpole,
    Corridor,
}

impl std::str::FromStr for EnvName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cartpole" => Ok(EnvName::Cartpole),
            "corridor" => Ok(EnvName::Corridor),
            other => Err(Error::ConfigSchema(format!("unknown env `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Survive,
    Dqn,
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "survive" => Ok(Algorithm::Survive),
            "dqn" => Ok(Algorithm::Dqn),
            other => Err(Error::ConfigSchema(format!("unknown algo `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub env: EnvName,
    pub algo: Algorithm,
    pub seed: u64,
    pub max_episodes: usize,
    /// Stop starting new episodes once this many env steps have run; 0 disables.
    pub max_env_steps: usize,
    pub out_dir: String,

    /// Reverse horizon; defaults to 20 on cartpole and 3 on corridor.
    pub horizon: Option<usize>,
    pub gamma: f64,
    pub alpha: f64,
    pub danger_mode: DangerMode,
    pub danger_epochs: usize,
    /// 0 trains full batch.
    pub danger_batch_size: usize,
    pub danger_learning_rate: f64,
    pub danger_output_bias: f64,
    pub danger_hidden: Vec<usize>,

    pub transition_hidden: Vec<usize>,
    pub transition_batch_size: usize,
    pub transition_steps: usize,
    pub transition_learning_rate: f64,

    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_steps: usize,
    pub warmup_episodes: usize,
    pub replay_capacity: usize,

    pub dqn_gamma: f64,
    pub dqn_learning_rate: f64,
    pub dqn_batch_size: usize,
    pub dqn_target_sync: usize,
    pub dqn_train_start: usize,
    pub dqn_hidden: Vec<usize>,

    pub cartpole_gravity: f64,
    pub cartpole_mass_cart: f64,
    pub cartpole_mass_pole: f64,
    pub cartpole_pole_half_length: f64,
    pub cartpole_force_magnitude: f64,
    pub cartpole_time_step: f64,
    pub cartpole_angle_threshold: f64,
    pub cartpole_position_threshold: f64,
    pub cartpole_max_steps: usize,

    pub corridor_length: usize,
    pub corridor_max_steps: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let cp = CartPoleParams::default();
        Self {
            env: EnvName::Cartpole,
            algo: Algorithm::Survive,
            seed: 0,
            max_episodes: 1000,
            max_env_steps: 50_000,
            out_dir: "runs".into(),

            horizon: None,
            gamma: 0.95,
            alpha: 0.1,
            danger_mode: DangerMode::Regression,
            danger_epochs: 50,
            danger_batch_size: 0,
            danger_learning_rate: 1e-3,
            danger_output_bias: -4.0,
            danger_hidden: vec![64, 64],

            transition_hidden: vec![64],
            transition_batch_size: 64,
            transition_steps: 100,
            transition_learning_rate: 1e-3,

            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_steps: 5_000,
            warmup_episodes: 3,
            replay_capacity: 100_000,

            dqn_gamma: 0.99,
            dqn_learning_rate: 1e-3,
            dqn_batch_size: 64,
            dqn_target_sync: 500,
            dqn_train_start: 1_000,
            dqn_hidden: vec![64],

            cartpole_gravity: cp.gravity,
            cartpole_mass_cart: cp.mass_cart,
            cartpole_mass_pole: cp.mass_pole,
            cartpole_pole_half_length: cp.pole_half_length,
            cartpole_force_magnitude: cp.force_magnitude,
            cartpole_time_step: cp.time_step,
            cartpole_angle_threshold: cp.angle_threshold,
            cartpole_position_threshold: cp.position_threshold,
            cartpole_max_steps: cp.max_steps,

            corridor_length: 5,
            corridor_max_steps: 50,
        }
    }
}

fn range_err(field: &'static str, reason: impl Into<String>) -> Error {
    Error::ConfigRange {
        field,
        reason: reason.into(),
    }
}

fn open_unit(field: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(range_err(field, format!("must lie in (0, 1), got {v}")))
    }
}

fn positive(field: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(range_err(field, format!("must be positive, got {v}")))
    }
}

fn nonzero(field: &'static str, v: usize) -> Result<()> {
    if v > 0 {
        Ok(())
    } else {
        Err(range_err(field, "must be at least 1"))
    }
}

fn layers(field: &'static str, v: &[usize]) -> Result<()> {
    if v.iter().all(|&s| s > 0) {
        Ok(())
    } else {
        Err(range_err(field, "layer sizes must be positive"))
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::ConfigSchema(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::ConfigSchema(e.to_string()))
    }

    pub fn horizon(&self) -> usize {
        self.horizon.unwrap_or(match self.env {
            EnvName::Cartpole => 20,
            EnvName::Corridor => 3,
        })
    }

    pub fn cartpole_params(&self) -> CartPoleParams {
        CartPoleParams {
            gravity: self.cartpole_gravity,
            mass_cart: self.cartpole_mass_cart,
            mass_pole: self.cartpole_mass_pole,
            pole_half_length: self.cartpole_pole_half_length,
            force_magnitude: self.cartpole_force_magnitude,
            time_step: self.cartpole_time_step,
            angle_threshold: self.cartpole_angle_threshold,
            position_threshold: self.cartpole_position_threshold,
            max_steps: self.cartpole_max_steps,
        }
    }

    pub fn build_env(&self) -> Result<Box<dyn Environment>> {
        Ok(match self.env {
            EnvName::Cartpole => Box::new(CartPole::new(self.cartpole_params())),
            EnvName::Corridor => Box::new(Corridor::new(
                self.corridor_length,
                self.corridor_max_steps,
            )?),
        })
    }

    pub fn validate(&self) -> Result<()> {
        open_unit("gamma", self.gamma)?;
        open_unit("alpha", self.alpha)?;
        if let Some(h) = self.horizon {
            nonzero("horizon", h)?;
        }
        nonzero("danger_epochs", self.danger_epochs)?;
        positive("danger_learning_rate", self.danger_learning_rate)?;
        if !self.danger_output_bias.is_finite() {
            return Err(range_err("danger_output_bias", "must be finite"));
        }
        layers("danger_hidden", &self.danger_hidden)?;
        layers("transition_hidden", &self.transition_hidden)?;
        layers("dqn_hidden", &self.dqn_hidden)?;
        nonzero("transition_batch_size", self.transition_batch_size)?;
        positive("transition_learning_rate", self.transition_learning_rate)?;

        for (field, v) in [
            ("epsilon_start", self.epsilon_start),
            ("epsilon_end", self.epsilon_end),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(range_err(field, format!("must lie in [0, 1], got {v}")));
            }
        }
        if self.epsilon_end > self.epsilon_start {
            return Err(range_err("epsilon_end", "must not exceed epsilon_start"));
        }
        nonzero("replay_capacity", self.replay_capacity)?;

        if !(0.0..1.0).contains(&self.dqn_gamma) {
            return Err(range_err(
                "dqn_gamma",
                format!("must lie in [0, 1), got {}", self.dqn_gamma),
            ));
        }
        positive("dqn_learning_rate", self.dqn_learning_rate)?;
        nonzero("dqn_batch_size", self.dqn_batch_size)?;
        nonzero("dqn_target_sync", self.dqn_target_sync)?;

        positive("cartpole_gravity", self.cartpole_gravity)?;
        positive("cartpole_mass_cart", self.cartpole_mass_cart)?;
        positive("cartpole_mass_pole", self.cartpole_mass_pole)?;
        positive("cartpole_pole_half_length", self.cartpole_pole_half_length)?;
        positive("cartpole_force_magnitude", self.cartpole_force_magnitude)?;
        positive("cartpole_time_step", self.cartpole_time_step)?;
        positive("cartpole_angle_threshold", self.cartpole_angle_threshold)?;
        positive(
            "cartpole_position_threshold",
            self.cartpole_position_threshold,
        )?;
        nonzero("cartpole_max_steps", self.cartpole_max_steps)?;

        if self.corridor_length < 2 {
            return Err(range_err("corridor_length", "must be at least 2"));
        }
        nonzero("corridor_max_steps", self.corridor_max_steps)?;
        Ok(())
    }
}

/// Reads and validates a config file.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    if !path.exists() {
        return Err(Error::ConfigMissing(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RunConfig::from_toml(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_is_default() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn gamma_out_of_range_is_named() {
        let err = RunConfig::from_toml("gamma = 1.5").unwrap_err();
        match err {
            Error::ConfigRange { field, .. } => assert_eq!(field, "gamma"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_schema_error() {
        assert!(matches!(
            RunConfig::from_toml("learning_rat = 0.1"),
            Err(Error::ConfigSchema(_))
        ));
    }

    #[test]
    fn wrong_type_is_schema_error() {
        assert!(matches!(
            RunConfig::from_toml("seed = \"seven\""),
            Err(Error::ConfigSchema(_))
        ));
        assert!(matches!(
            RunConfig::from_toml("env = \"pong\""),
            Err(Error::ConfigSchema(_))
        ));
    }

    #[test]
    fn missing_file() {
        assert!(matches!(
            parse_config(Path::new("/definitely/not/here.toml")),
            Err(Error::ConfigMissing(_))
        ));
    }

    #[test]
    fn horizon_defaults_per_env() {
        let mut cfg = RunConfig::default();
        assert_eq!(cfg.horizon(), 20);
        cfg.env = EnvName::Corridor;
        assert_eq!(cfg.horizon(), 3);
        cfg.horizon = Some(7);
        assert_eq!(cfg.horizon(), 7);
    }

    #[test]
    fn overrides_parse() {
        let cfg = RunConfig::from_toml(
            "env = \"corridor\"\nalgo = \"dqn\"\nseed = 9\ndanger_hidden = [16, 16]\ndanger_mode = \"blend\"\n",
        )
        .unwrap();
        assert_eq!(cfg.env, EnvName::Corridor);
        assert_eq!(cfg.algo, Algorithm::Dqn);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.danger_hidden, vec![16, 16]);
        assert_eq!(cfg.danger_mode, DangerMode::Blend);
    }

    #[test]
    fn bad_ranges() {
        for text in [
            "alpha = 0.0",
            "horizon = 0",
            "replay_capacity = 0",
            "epsilon_start = 0.1\nepsilon_end = 0.5",
            "cartpole_mass_pole = -1.0",
            "corridor_length = 1",
            "dqn_gamma = 1.0",
        ] {
            assert!(
                matches!(RunConfig::from_toml(text), Err(Error::ConfigRange { .. })),
                "{text}"
            );
        }
    }

    proptest! {
        #[test]
        fn round_trip(seed in 0u64..(i64::MAX as u64), gamma in 0.01f64..0.99, alpha in 0.01f64..0.99,
                      horizon in prop::option::of(1usize..100), corridor in any::<bool>(), episodes in 0usize..10_000) {
            let cfg = RunConfig {
                seed,
                gamma,
                alpha,
                horizon,
                max_episodes: episodes,
                env: if corridor { EnvName::Corridor } else { EnvName::Cartpole },
                ..RunConfig::default()
            };
            let text = cfg.to_toml().unwrap();
            prop_assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
        }
    }
}
