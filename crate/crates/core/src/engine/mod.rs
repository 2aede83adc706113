//! The cycle loop.
//!
//! Even cycles are sensory frames, odd cycles are recall frames. A sensory
//! frame encodes the percept scheduled for that cycle (if any), lets the
//! need-to-learn detector see it, and offers it to the attention gate. A
//! recall frame asks the cue editor for a cue subset of the current
//! short-term contents, probes long-term memory and offers the winner to the
//! gate; a fruitless probe fires the novelty trigger. Directives run after
//! the frame body, then disused words are cleared.

mod config;
mod script;
mod snapshot;
mod trace;

pub use config::{
    ConfigError, EncoderConfig, EngineConfig, LayoutConfig, LearnConfig, LfsrConfig, NoveltyConfig,
    ProcedureConfig, RetentionConfig, SCHEMA_VERSION,
};
pub use script::{RunProcedure, ScriptError, ScriptRecord, Stimulus, StimulusScript};
pub use snapshot::{SnapshotError, StateImage};
pub use trace::{EventBody, Trace, TraceEvent, TraceReadError, EVENT_KINDS};

use thiserror::Error;

use crate::analyzer::{
    attention_gate, importance, recognition_flag, stm_effective_importance, ImportanceIndex, Origin,
    StmSource, StmState,
};
use crate::bits::{FeatureVector, Layout};
use crate::cue_editor::CueEditor;
use crate::encoder::{CombinationDetector, RawPercept, SymbolTable};
use crate::memorizer::{novelty_trigger, CommitGuard, MemorizeTrigger, RehearsalFilter};
use crate::memory::{Cycle, MemoryError, MemoryStore, WordId};
use crate::procedures::{ProcedureCursor, ProcedureError};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error("cannot run to cycle {until}: limit is {max}")]
    BeyondMaxCycles { until: Cycle, max: Cycle },
    #[error("preloaded memory width {found} does not match configured width {expected}")]
    MemoryLayout { expected: usize, found: usize },
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
}

#[derive(Debug, Clone)]
pub struct Engine {
    config: EngineConfig,
    layout: Layout,
    cycle: Cycle,
    store: MemoryStore,
    stm: Option<StmState>,
    editor: CueEditor,
    rehearsal: RehearsalFilter,
    guard: CommitGuard,
    symbols: SymbolTable,
    detector: CombinationDetector,
    script: StimulusScript,
    cursor: usize,
    procedure: Option<ProcedureCursor>,
    events: Vec<TraceEvent>,
}

impl Engine {
    pub fn new(config: EngineConfig, script: StimulusScript) -> Result<Self, EngineError> {
        config.validate()?;
        let layout = config.layout().map_err(ConfigError::from)?;
        Self::with_memory(config, script, MemoryStore::new(layout))
    }

    /// Starts from a preloaded long-term memory.
    pub fn with_memory(
        config: EngineConfig,
        script: StimulusScript,
        store: MemoryStore,
    ) -> Result<Self, EngineError> {
        config.validate()?;
        let layout = config.layout().map_err(ConfigError::from)?;
        if store.layout() != &layout {
            return Err(EngineError::MemoryLayout {
                expected: layout.width(),
                found: store.layout().width(),
            });
        }
        let editor = CueEditor::reset(layout, config.lfsr.width, &config.lfsr.taps, config.lfsr.seed)
            .map_err(ConfigError::from)?;
        Ok(Self {
            layout,
            cycle: 0,
            store,
            stm: None,
            editor,
            rehearsal: RehearsalFilter::new(config.rehearsal),
            guard: CommitGuard::new(guard_window(&config)),
            symbols: SymbolTable::new(layout),
            detector: CombinationDetector::new(config.learn.threshold),
            script,
            cursor: 0,
            procedure: None,
            events: Vec::new(),
            config,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    /// The next cycle to execute.
    pub fn cycle(&self) -> Cycle {
        self.cycle
    }

    pub fn memory(&self) -> &MemoryStore {
        &self.store
    }

    pub fn memory_mut(&mut self) -> &mut MemoryStore {
        &mut self.store
    }

    pub fn stm(&self) -> Option<&StmState> {
        self.stm.as_ref()
    }

    pub fn symbols(&self) -> &SymbolTable {
        &self.symbols
    }

    pub fn script(&self) -> &StimulusScript {
        &self.script
    }

    /// Runs one cycle and returns the events it produced.
    pub fn step(&mut self) -> Vec<TraceEvent> {
        debug_assert!(self.events.is_empty());
        let cycle = self.cycle;

        let mut percept: Option<RawPercept> = None;
        let mut directives = Vec::new();
        while let Some(rec) = self.script.records().get(self.cursor) {
            if rec.cycle > cycle {
                break;
            }
            let rec = rec.clone();
            self.cursor += 1;
            if rec.cycle < cycle {
                continue;
            }
            match rec.stimulus {
                Stimulus::Percept(p) => {
                    if percept.is_some() {
                        self.warn(format!("second percept at cycle {cycle} skipped"));
                    } else {
                        percept = Some(p);
                    }
                }
                Stimulus::RunProcedure(d) => directives.push(d),
                Stimulus::Malformed(why) => self.warn(format!("malformed stimulus skipped: {why}")),
            }
        }

        if self.procedure.is_some() && self.config.procedure.step_per_cycle {
            if percept.is_some() {
                self.warn(format!("percept at cycle {cycle} dropped while a procedure runs"));
            }
            self.procedure_step();
        } else if cycle.is_multiple_of(2) {
            if let Some(p) = percept {
                self.sensory_frame(&p);
            }
        } else {
            if percept.is_some() {
                self.warn(format!("percept at cycle {cycle} falls on a recall frame; skipped"));
            }
            self.recall_frame();
        }

        for d in directives {
            self.start_procedure(d);
        }

        let cleared = self.store.clear_unused(cycle, self.config.memory.retention);
        if !cleared.is_empty() {
            self.emit(EventBody::MemoryCleared { word_ids: cleared });
        }

        self.cycle += 1;
        std::mem::take(&mut self.events)
    }

    /// Steps until the engine reaches `until_cycle`.
    pub fn run(&mut self, until_cycle: Cycle) -> Result<Trace, EngineError> {
        if until_cycle > self.config.max_cycles {
            return Err(EngineError::BeyondMaxCycles {
                until: until_cycle,
                max: self.config.max_cycles,
            });
        }
        let mut trace = Trace::default();
        while self.cycle < until_cycle {
            let mut evs = self.step();
            trace.events.append(&mut evs);
        }
        Ok(trace)
    }

    fn emit(&mut self, body: EventBody) {
        let wall_ms = self.cycle as f64 * 1000.0 / self.config.cycle_rate_hz;
        self.events.push(TraceEvent {
            cycle: self.cycle,
            wall_ms,
            body,
        });
    }

    fn warn(&mut self, message: String) {
        self.emit(EventBody::Warning { message });
    }

    fn stm_effective(&self) -> u32 {
        self.stm
            .as_ref()
            .map_or(0, |s| stm_effective_importance(s, self.cycle, &self.config.analyzer))
    }

    fn sensory_frame(&mut self, percept: &RawPercept) {
        let encoded = match self.symbols.encode(percept, self.config.encoder.auto_register) {
            Ok(e) => e,
            Err(e) => {
                self.warn(format!("percept rejected: {e}"));
                return;
            }
        };
        for w in encoded.warnings {
            self.warn(w);
        }
        let candidate = importance(
            &self.layout,
            &encoded.vector,
            0,
            Origin::Sensory,
            self.cycle,
            &self.config.analyzer,
        );
        let mut features = percept.features.clone();
        features.sort();
        features.dedup();
        self.emit(EventBody::SensoryFrame {
            features,
            vector: encoded.vector.clone(),
            importance: candidate,
        });

        if let Some(proposal) = self.detector.observe(&encoded.named_bits, &self.symbols) {
            match self.symbols.learn_feature(&proposal.definition) {
                Ok(bit) => {
                    let f = self.symbols.learned().last().expect("just learned").clone();
                    let definition = self.symbols.describe(&f.definition);
                    self.emit(EventBody::FeatureLearned {
                        bit,
                        name: f.name,
                        definition,
                    });
                }
                Err(e) => self.warn(format!("learning disabled: {e}")),
            }
        }

        let displaced = self.stm_effective();
        if attention_gate(&candidate, displaced, &self.config.analyzer) {
            self.transfer(encoded.vector, candidate, displaced, StmSource::Sensory, None);
        }
    }

    fn recall_frame(&mut self) {
        let Some(stm) = &self.stm else { return };
        let stm_vector = stm.vector.clone();
        let Some(cue) = self.editor.next_cue(&stm_vector) else {
            return;
        };
        self.emit(EventBody::RecallAttempt {
            mask: cue.mask().clone(),
            cue_count: cue.cue_count(),
        });
        let result = self
            .store
            .recall(&cue, self.cycle)
            .expect("editor cues always fit the store layout");

        match result {
            Some(r) => {
                let cfg = &self.config.analyzer;
                let candidate = importance(
                    &self.layout,
                    &r.vector,
                    r.cue_count,
                    Origin::Recall {
                        write_cycle: Some(r.write_cycle),
                    },
                    self.cycle,
                    cfg,
                );
                let recognition = recognition_flag(&r, cfg);
                let displaced = self.stm_effective();
                // replacing short-term contents with an identical image is a no-op
                let transferred =
                    r.vector != stm_vector && attention_gate(&candidate, displaced, &self.config.analyzer);
                self.emit(EventBody::Match {
                    word_id: r.word_id,
                    match_count: r.match_count as u64,
                    cue_count: r.cue_count,
                    importance: candidate,
                    stm_effective: displaced,
                    recognition,
                    transferred,
                });
                if transferred {
                    self.transfer(r.vector, candidate, displaced, StmSource::Recall, Some(r.word_id));
                }
            }
            None => {
                self.emit(EventBody::NoMatch {
                    mask: cue.mask().clone(),
                });
                if self.config.novelty.enabled {
                    if let Some(t) = novelty_trigger(true, false, self.cycle) {
                        self.memorize(&stm_vector, t);
                    }
                }
            }
        }
    }

    fn transfer(
        &mut self,
        vector: FeatureVector,
        candidate: ImportanceIndex,
        displaced: u32,
        source: StmSource,
        word_id: Option<WordId>,
    ) {
        let trigger = self.rehearsal.observe(&vector, self.cycle);
        self.emit(EventBody::AttentionTransfer {
            source,
            word_id,
            vector: vector.clone(),
            candidate,
            displaced,
            margin: self.config.analyzer.margin,
            rehearsal: trigger.is_some(),
        });
        self.stm = Some(StmState {
            vector: vector.clone(),
            entry_cycle: self.cycle,
            entry_importance: candidate,
            source,
            source_word_id: word_id,
        });
        if let Some(t) = trigger {
            self.memorize(&vector, t);
        }
    }

    fn memorize(&mut self, vector: &FeatureVector, trigger: MemorizeTrigger) {
        let written = self
            .guard
            .commit(&mut self.store, vector, trigger)
            .expect("short-term vectors share the store layout");
        if let Some(word_id) = written {
            self.emit(EventBody::MemorizationWrite {
                reason: trigger.reason,
                word_id,
                vector: vector.clone(),
            });
        }
    }

    fn start_procedure(&mut self, d: RunProcedure) {
        if self.procedure.is_some() {
            self.warn(format!(
                "procedure from word {} ignored; another is running",
                d.start_word_id
            ));
            return;
        }
        let max_steps = d.max_steps.unwrap_or(self.config.procedure.max_steps);
        match ProcedureCursor::start(&self.store, d.start_word_id, max_steps) {
            Ok(cursor) => {
                self.procedure = Some(cursor);
                if self.config.procedure.step_per_cycle {
                    self.procedure_step();
                } else {
                    while self.procedure.is_some() {
                        self.procedure_step();
                    }
                }
            }
            Err(e @ (ProcedureError::UnknownStart(_) | ProcedureError::ZeroSteps)) => {
                self.warn(format!("procedure not started: {e}"));
            }
        }
    }

    fn procedure_step(&mut self) {
        let Some(cursor) = self.procedure.as_mut() else {
            return;
        };
        let (word_id, halted) = cursor.advance(&self.store);
        let (start, step) = (cursor.start, cursor.steps - 1);
        if halted.is_some() {
            self.procedure = None;
        }
        self.emit(EventBody::ProcedureStep {
            start_word_id: start,
            step,
            word_id,
            halted,
        });
    }

    pub fn procedure_running(&self) -> bool {
        self.procedure.is_some()
    }

    /// Learned features recorded so far, with their definitions spelled out.
    pub fn learned_summary(&self) -> Vec<(usize, String, Vec<String>)> {
        self.symbols
            .learned()
            .iter()
            .map(|f| (f.bit, f.name.clone(), self.symbols.describe(&f.definition)))
            .collect()
    }
}

fn guard_window(config: &EngineConfig) -> u64 {
    config.rehearsal.delay.saturating_add(config.rehearsal.tolerance)
}
