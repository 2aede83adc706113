//! Deterministic cycle simulator of an attention architecture built on
//! subliminal associative memory searches.
//!
//! A pseudorandom cue editor keeps probing long-term memory with subsets of
//! whatever is in short-term memory. Each recall, like each percept, is scored
//! for importance; images that come close enough to the fading short-term
//! contents replace them. Rehearsal and novelty commit images to long-term
//! memory, recurring percept combinations become new AND features, and
//! successor-linked words run as procedures that bypass short-term memory.
//!
//! ```
//! use subliminal_core::encoder::RawPercept;
//! use subliminal_core::engine::{Engine, EngineConfig, StimulusScript};
//!
//! let script = StimulusScript::from_percepts([RawPercept {
//!     cycle: 0,
//!     features: vec!["yellow".into(), "green".into()],
//!     brightness: 5,
//!     emotion: 2,
//! }]);
//! let mut engine = Engine::new(EngineConfig::default(), script).unwrap();
//! let trace = engine.run(4).unwrap();
//! assert_eq!(trace.count("AttentionTransfer"), 1);
//! assert_eq!(engine.memory().len(), 1);
//! ```

pub mod analyzer;
pub mod bits;
pub mod cue_editor;
pub mod encoder;
pub mod engine;
pub mod memorizer;
pub mod memory;
pub mod procedures;
pub mod report;

pub use bits::{FeatureVector, Layout};
pub use engine::{Engine, EngineConfig, EngineError, StimulusScript, Trace, TraceEvent};
pub use memory::{CueQuery, MemoryStore, RecallResult, WordId};
