//! Unconscious procedures: chains of successor-linked memory words that run
//! without passing through short-term memory.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::memory::{MemoryError, MemoryStore, WordId};

pub const DEFAULT_MAX_STEPS: usize = 1024;

#[derive(Debug, Error)]
pub enum ProcedureError {
    #[error("unknown start word {0}")]
    UnknownStart(WordId),
    #[error("max steps must be at least 1")]
    ZeroSteps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Halt {
    Completed,
    StepLimit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcedureResult {
    pub visited: Vec<WordId>,
    pub halted: Halt,
}

/// Points `from` at `to`, replacing any earlier link.
pub fn link_words(store: &mut MemoryStore, from: WordId, to: WordId) -> Result<(), MemoryError> {
    store.link(from, to)
}

/// An in-flight procedure, advanced one word at a time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProcedureCursor {
    pub start: WordId,
    pub next: WordId,
    pub steps: usize,
    pub max_steps: usize,
}

impl ProcedureCursor {
    pub fn start(store: &MemoryStore, start: WordId, max_steps: usize) -> Result<Self, ProcedureError> {
        if max_steps == 0 {
            return Err(ProcedureError::ZeroSteps);
        }
        if !store.contains(start) {
            return Err(ProcedureError::UnknownStart(start));
        }
        Ok(Self {
            start,
            next: start,
            steps: 0,
            max_steps,
        })
    }

    /// Visits the next word. Returns it with `Some(halt)` when this was the
    /// last step. A link to a word that has since been cleared ends the run
    /// as completed.
    pub fn advance(&mut self, store: &MemoryStore) -> (WordId, Option<Halt>) {
        let here = self.next;
        self.steps += 1;
        let successor = store
            .get(here)
            .and_then(|w| w.successor)
            .filter(|s| store.contains(*s));
        match successor {
            None => (here, Some(Halt::Completed)),
            Some(_) if self.steps >= self.max_steps => (here, Some(Halt::StepLimit)),
            Some(s) => {
                self.next = s;
                (here, None)
            }
        }
    }
}

pub fn run_procedure(
    store: &MemoryStore,
    start: WordId,
    max_steps: usize,
) -> Result<ProcedureResult, ProcedureError> {
    let mut cursor = ProcedureCursor::start(store, start, max_steps)?;
    let mut visited = Vec::new();
    loop {
        let (id, halt) = cursor.advance(store);
        visited.push(id);
        if let Some(halted) = halt {
            return Ok(ProcedureResult { visited, halted });
        }
    }
}
