//! Versioned JSON image of a paused engine.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ConfigError, Engine, EngineConfig, EngineError, StimulusScript};
use crate::analyzer::StmState;
use crate::cue_editor::CueEditor;
use crate::encoder::{CombinationDetector, DetectorImage, SymbolImage, SymbolTable};
use crate::memorizer::{CommitGuard, CommitRecord, HistoryEntry, RehearsalFilter};
use crate::memory::{Cycle, MemoryStore, WordId, WordRecord};
use crate::procedures::ProcedureCursor;

pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("snapshot version {found} is not supported (expected {SNAPSHOT_VERSION})")]
    Version { found: u32 },
    #[error("snapshot was taken under a different configuration")]
    ConfigMismatch,
    #[error("bad snapshot field {field}: {msg}")]
    Field { field: &'static str, msg: String },
    #[error("snapshot parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct StateImage {
    pub schema_version: u32,
    pub config_hash: String,
    pub cycle: Cycle,
    pub next_word_id: WordId,
    pub memory: Vec<WordRecord>,
    pub stm: Option<StmState>,
    pub lfsr_state: String,
    pub rehearsal_history: Vec<HistoryEntry>,
    pub recent_commits: Vec<CommitRecord>,
    pub symbols: SymbolImage,
    pub detector: DetectorImage,
    pub procedure: Option<ProcedureCursor>,
}

impl StateImage {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("state images serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, SnapshotError> {
        Ok(serde_json::from_str(text)?)
    }
}

impl Engine {
    pub fn snapshot(&self) -> StateImage {
        StateImage {
            schema_version: SNAPSHOT_VERSION,
            config_hash: self.config.state_hash(),
            cycle: self.cycle,
            next_word_id: self.store.next_word_id(),
            memory: self.store.dump_records(),
            stm: self.stm.clone(),
            lfsr_state: format!("{:#x}", self.editor.lfsr().state()),
            rehearsal_history: self.rehearsal.history().cloned().collect(),
            recent_commits: self.guard.recent().cloned().collect(),
            symbols: self.symbols.to_image(),
            detector: self.detector.to_image(),
            procedure: self.procedure.clone(),
        }
    }

    /// Rebuilds an engine from `image`. The script is positioned at the
    /// image's cycle; earlier records are ignored.
    pub fn restore(
        image: StateImage,
        config: EngineConfig,
        script: StimulusScript,
    ) -> Result<Self, EngineError> {
        if image.schema_version != SNAPSHOT_VERSION {
            return Err(SnapshotError::Version {
                found: image.schema_version,
            }
            .into());
        }
        config.validate()?;
        if image.config_hash != config.state_hash() {
            return Err(SnapshotError::ConfigMismatch.into());
        }
        let layout = config.layout().map_err(ConfigError::from)?;

        let mut store = MemoryStore::from_records(layout, image.memory).map_err(|e| SnapshotError::Field {
            field: "memory",
            msg: e.to_string(),
        })?;
        store.reserve_ids(image.next_word_id);

        if let Some(stm) = &image.stm {
            if stm.vector.width() != layout.width() {
                return Err(SnapshotError::Field {
                    field: "stm",
                    msg: format!("width {} != {}", stm.vector.width(), layout.width()),
                }
                .into());
            }
        }

        let lfsr_state = image
            .lfsr_state
            .strip_prefix("0x")
            .and_then(|h| u64::from_str_radix(h, 16).ok())
            .ok_or_else(|| SnapshotError::Field {
                field: "lfsrState",
                msg: format!("not a 0x-prefixed hex integer: {:?}", image.lfsr_state),
            })?;
        let mut editor = CueEditor::reset(layout, config.lfsr.width, &config.lfsr.taps, config.lfsr.seed)
            .map_err(ConfigError::from)?;
        editor.set_state(lfsr_state).map_err(|e| SnapshotError::Field {
            field: "lfsrState",
            msg: e.to_string(),
        })?;

        let cursor = script.seek(image.cycle);
        Ok(Engine {
            layout,
            cycle: image.cycle,
            store,
            stm: image.stm,
            editor,
            rehearsal: RehearsalFilter::with_history(config.rehearsal, image.rehearsal_history),
            guard: CommitGuard::with_recent(super::guard_window(&config), image.recent_commits),
            symbols: SymbolTable::from_image(layout, image.symbols),
            detector: CombinationDetector::from_image(config.learn.threshold, image.detector),
            script,
            cursor,
            procedure: image.procedure,
            events: Vec::new(),
            config,
        })
    }
}
