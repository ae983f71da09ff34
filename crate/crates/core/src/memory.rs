//! Transition storage: the cross-episode replay buffer and the single-episode
//! buffer, plus the split of a failed episode into its pre-failure head and a
//! sample of earlier safe states.

use std::collections::VecDeque;

use rand::seq::index;
use rand::{Rng, RngCore};

use crate::env::State;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRecord {
    pub state: State,
    pub action: usize,
    pub next_state: State,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
}

/// Bounded FIFO of transitions. Oldest records are evicted first.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    records: VecDeque<TransitionRecord>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            records: VecDeque::with_capacity(capacity.min(1 << 16)),
        }
    }

    pub fn push(&mut self, record: TransitionRecord) {
        if self.records.len() == self.capacity {
            self.records.pop_front();
        }
        self.records.push_back(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = &TransitionRecord> {
        self.records.iter()
    }

    /// Uniform sampling with replacement.
    pub fn sample(
        &self,
        batch_size: usize,
        rng: &mut dyn RngCore,
    ) -> Result<Vec<&TransitionRecord>> {
        if self.records.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        let n = self.records.len();
        Ok((0..batch_size)
            .map(|_| &self.records[rng.gen_range(0..n)])
            .collect())
    }
}

/// Transitions of the current episode, in order.
#[derive(Debug, Clone, Default)]
pub struct EpisodeBuffer {
    records: Vec<TransitionRecord>,
}

impl EpisodeBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clear(&mut self) {
        self.records.clear();
    }

    /// Appends a record, enforcing that it continues from the previous one
    /// and that nothing follows a terminated record.
    pub fn push(&mut self, record: TransitionRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if last.terminated || last.truncated {
                return Err(Error::EpisodeClosed);
            }
            if last.next_state != record.state {
                return Err(Error::BrokenChain {
                    position: self.records.len(),
                });
            }
        }
        self.records.push(record);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[TransitionRecord] {
        &self.records
    }

    pub fn is_terminated(&self) -> bool {
        self.records.last().is_some_and(|r| r.terminated)
    }

    /// Index of the last state acted from before failure, if the episode failed.
    pub fn final_index(&self) -> Option<usize> {
        self.is_terminated().then(|| self.records.len() - 1)
    }
}

/// A state together with its time index within the episode.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexedState {
    pub t: usize,
    pub state: State,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadTailSplit {
    /// Final index `T` of the episode.
    pub final_index: usize,
    /// States at `T - horizon ..= T`, ascending.
    pub head: Vec<IndexedState>,
    /// Up to `horizon` states drawn without replacement from `t < T - horizon`.
    pub tail: Vec<IndexedState>,
}

/// First time index that belongs to the head.
pub fn head_start(final_index: usize, horizon: usize) -> usize {
    final_index.saturating_sub(horizon)
}

/// Splits a terminated episode into head and tail. Tail indices are sorted
/// ascending after sampling.
pub fn head_tail_split(
    episode: &EpisodeBuffer,
    horizon: usize,
    rng: &mut dyn RngCore,
) -> Result<HeadTailSplit> {
    let final_index = episode.final_index().ok_or(Error::NotTerminated)?;
    let records = episode.records();
    let start = head_start(final_index, horizon);
    let head = (start..=final_index)
        .map(|t| IndexedState {
            t,
            state: records[t].state.clone(),
        })
        .collect();
    let amount = horizon.min(start);
    let mut picks = index::sample(rng, start, amount).into_vec();
    picks.sort_unstable();
    let tail = picks
        .into_iter()
        .map(|t| IndexedState {
            t,
            state: records[t].state.clone(),
        })
        .collect();
    Ok(HeadTailSplit {
        final_index,
        head,
        tail,
    })
}
