//! Memorization enable: when does short-term content get written to
//! long-term memory.
//!
//! Two triggers exist. Rehearsal fires when the same image enters short-term
//! memory twice, `delay ± tolerance` cycles apart. Novelty fires when a cue
//! was presented and nothing matched. Either way at most one word is written
//! per trigger, and an image committed within the last `delay + tolerance`
//! cycles is not written again.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::bits::{digest, FeatureVector};
use crate::memory::{Cycle, MemoryError, MemoryStore, WordId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase", deny_unknown_fields)]
pub struct RehearsalConfig {
    pub delay: u64,
    pub tolerance: u64,
    pub history_depth: usize,
}

impl Default for RehearsalConfig {
    fn default() -> Self {
        Self {
            delay: 20,
            tolerance: 2,
            history_depth: 64,
        }
    }
}

impl RehearsalConfig {
    pub fn window(&self) -> std::ops::RangeInclusive<u64> {
        self.delay.saturating_sub(self.tolerance)..=self.delay.saturating_add(self.tolerance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TriggerReason {
    Novelty,
    Rehearsal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemorizeTrigger {
    pub reason: TriggerReason,
    pub cycle: Cycle,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HistoryEntry {
    pub vector: FeatureVector,
    pub cycle: Cycle,
    /// Already part of a triggering pair; cannot pair again.
    pub consumed: bool,
    #[serde(skip)]
    digest: u64,
}

impl HistoryEntry {
    pub fn new(vector: FeatureVector, cycle: Cycle, consumed: bool) -> Self {
        let digest = digest(&vector);
        Self {
            vector,
            cycle,
            consumed,
            digest,
        }
    }
}

/// Two-tap delay filter over short-term memory entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RehearsalFilter {
    cfg: RehearsalConfig,
    history: VecDeque<HistoryEntry>,
}

impl RehearsalFilter {
    pub fn new(cfg: RehearsalConfig) -> Self {
        Self {
            cfg,
            history: VecDeque::with_capacity(cfg.history_depth + 1),
        }
    }

    pub fn with_history(cfg: RehearsalConfig, history: Vec<HistoryEntry>) -> Self {
        let history = history
            .into_iter()
            .map(|h| HistoryEntry::new(h.vector, h.cycle, h.consumed))
            .collect();
        Self { cfg, history }
    }

    pub fn history(&self) -> impl Iterator<Item = &HistoryEntry> {
        self.history.iter()
    }

    /// Records a short-term entry. Pairs with the oldest unconsumed equal
    /// entry whose distance falls in the delay window; both ends of a pair
    /// are spent.
    pub fn observe(&mut self, vector: &FeatureVector, cycle: Cycle) -> Option<MemorizeTrigger> {
        let d = digest(vector);
        let window = self.cfg.window();
        let partner = self.history.iter_mut().find(|h| {
            !h.consumed
                && h.digest == d
                && window.contains(&cycle.saturating_sub(h.cycle))
                && h.vector == *vector
        });
        let triggered = match partner {
            Some(h) => {
                h.consumed = true;
                true
            }
            None => false,
        };
        self.history.push_back(HistoryEntry {
            vector: vector.clone(),
            cycle,
            consumed: triggered,
            digest: d,
        });
        while self.history.len() > self.cfg.history_depth {
            self.history.pop_front();
        }
        triggered.then_some(MemorizeTrigger {
            reason: TriggerReason::Rehearsal,
            cycle,
        })
    }
}

pub fn novelty_trigger(cue_presented: bool, match_found: bool, cycle: Cycle) -> Option<MemorizeTrigger> {
    (cue_presented && !match_found).then_some(MemorizeTrigger {
        reason: TriggerReason::Novelty,
        cycle,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRecord {
    pub vector: FeatureVector,
    pub cycle: Cycle,
}

/// Single-write guard with an anti-duplication window keyed by vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitGuard {
    window: u64,
    recent: VecDeque<CommitRecord>,
}

impl CommitGuard {
    pub fn new(window: u64) -> Self {
        Self {
            window,
            recent: VecDeque::new(),
        }
    }

    pub fn with_recent(window: u64, recent: Vec<CommitRecord>) -> Self {
        Self {
            window,
            recent: recent.into(),
        }
    }

    pub fn recent(&self) -> impl Iterator<Item = &CommitRecord> {
        self.recent.iter()
    }

    /// Writes `vector` once for `trigger`, unless the same vector was
    /// committed within the window.
    pub fn commit(
        &mut self,
        store: &mut MemoryStore,
        vector: &FeatureVector,
        trigger: MemorizeTrigger,
    ) -> Result<Option<WordId>, MemoryError> {
        let now = trigger.cycle;
        while self
            .recent
            .front()
            .is_some_and(|r| now.saturating_sub(r.cycle) > self.window)
        {
            self.recent.pop_front();
        }
        if self.recent.iter().any(|r| r.vector == *vector) {
            return Ok(None);
        }
        let id = store.write(vector.clone(), now)?;
        self.recent.push_back(CommitRecord {
            vector: vector.clone(),
            cycle: now,
        });
        Ok(Some(id))
    }
}
