//! A one-dimensional strip of cells with an absorbing failure cell at 0.
//!
//! Small enough that every transition can be enumerated, which makes it
//! useful for checking learned models against ground truth.

use rand::RngCore;

use super::{Environment, State, StepResult};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Corridor {
    length: usize,
    max_steps: usize,
    cell: usize,
    steps: usize,
    done: bool,
}

impl Corridor {
    /// `length` cells numbered `0..length`; cell 0 is the failure cell.
    pub fn new(length: usize, max_steps: usize) -> Result<Self> {
        if length < 2 {
            return Err(Error::InvalidLayout(format!(
                "corridor needs at least 2 cells, got {length}"
            )));
        }
        Ok(Self {
            length,
            max_steps,
            cell: (length - 1) / 2,
            steps: 0,
            done: true,
        })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn start_cell(&self) -> usize {
        (self.length - 1) / 2
    }

    /// Deterministic dynamics: 0 moves left, 1 moves right, walls clamp.
    pub fn next_cell(&self, cell: usize, action: usize) -> Result<usize> {
        match action {
            0 => Ok(cell.saturating_sub(1)),
            1 => Ok((cell + 1).min(self.length - 1)),
            _ => Err(Error::InvalidAction {
                action,
                num_actions: 2,
            }),
        }
    }

    /// Places the walker on `cell` and starts an episode from there.
    pub fn reset_to(&mut self, cell: usize) -> State {
        self.cell = cell.min(self.length - 1);
        self.steps = 0;
        self.done = false;
        State::new(vec![self.cell as f64])
    }
}

impl Environment for Corridor {
    fn name(&self) -> &'static str {
        "corridor"
    }

    fn state_dim(&self) -> usize {
        1
    }

    fn num_actions(&self) -> usize {
        2
    }

    fn reset(&mut self, _rng: &mut dyn RngCore) -> State {
        self.reset_to(self.start_cell())
    }

    fn step(&mut self, action: usize) -> Result<StepResult> {
        if self.done {
            return Err(Error::EpisodeFinished);
        }
        self.cell = self.next_cell(self.cell, action)?;
        self.steps += 1;
        let terminated = self.cell == 0;
        let truncated = !terminated && self.steps >= self.max_steps;
        self.done = terminated || truncated;
        Ok(StepResult {
            next_state: State::new(vec![self.cell as f64]),
            // Failure costs one unit; value-based learners need it, the danger map ignores it.
            reward: if terminated { -1.0 } else { 0.0 },
            terminated,
            truncated,
        })
    }

    fn is_failure(&self, state: &[f64]) -> bool {
        state[0] <= 0.0
    }

    /// One cell per unit.
    fn normalization_scales(&self) -> Vec<f64> {
        vec![1.0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reset_starts_mid_track() {
        let mut c = Corridor::new(5, 50).unwrap();
        let s = c.reset(&mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(s.values(), &[2.0]);
    }

    #[test]
    fn left_from_one_terminates() {
        let mut c = Corridor::new(5, 50).unwrap();
        c.reset_to(1);
        let r = c.step(0).unwrap();
        assert_eq!(r.next_state.values(), &[0.0]);
        assert!(r.terminated && !r.truncated);
    }

    #[test]
    fn right_from_two_is_safe() {
        let mut c = Corridor::new(5, 50).unwrap();
        c.reset_to(2);
        let r = c.step(1).unwrap();
        assert_eq!(r.next_state.values(), &[3.0]);
        assert!(!r.terminated);
        assert_eq!(r.reward, 0.0);
    }

    #[test]
    fn always_left_terminates_in_k_steps() {
        let mut c = Corridor::new(9, 100).unwrap();
        for k in 1..9 {
            c.reset_to(k);
            let mut steps = 0;
            loop {
                steps += 1;
                if c.step(0).unwrap().terminated {
                    break;
                }
            }
            assert_eq!(steps, k);
        }
    }

    #[test]
    fn right_wall_clamps() {
        let c = Corridor::new(5, 50).unwrap();
        assert_eq!(c.next_cell(4, 1).unwrap(), 4);
        assert_eq!(c.next_cell(0, 0).unwrap(), 0);
    }

    #[test]
    fn too_short_is_rejected() {
        assert!(Corridor::new(1, 10).is_err());
    }
}
