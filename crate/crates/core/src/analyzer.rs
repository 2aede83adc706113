//! Importance scoring and the attention gate.
//!
//! Every subliminal image, sensed or recalled, goes through the same
//! encoder: a weighted saturating sum of brightness, emotion, matched cues and
//! recency. Short-term memory holds its entry score and loses one point every
//! `fade_period` cycles; a candidate that comes within `margin` of the faded
//! score takes over.

use serde::{Deserialize, Serialize};

use crate::bits::{FeatureVector, Layout};
use crate::memory::{Cycle, RecallResult, WordId};

pub const IMPORTANCE_CAP: u32 = u16::MAX as u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Weights {
    pub brightness: u32,
    pub emotion: u32,
    #[serde(rename = "match")]
    pub matched: u32,
    pub recency: u32,
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            brightness: 1,
            emotion: 1,
            matched: 1,
            recency: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase", deny_unknown_fields)]
pub struct AnalyzerConfig {
    pub weights: Weights,
    pub match_cap: u32,
    pub recency_max: u32,
    pub recency_scale: u64,
    pub fade_period: u64,
    pub margin: u32,
    pub recognition_cues: u32,
}

impl Default for AnalyzerConfig {
    fn default() -> Self {
        Self {
            weights: Weights::default(),
            match_cap: 15,
            recency_max: 15,
            recency_scale: 100,
            fade_period: 8,
            margin: 0,
            recognition_cues: 8,
        }
    }
}

/// Importance score with the weighted contribution of each factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ImportanceIndex {
    pub total: u32,
    pub brightness: u64,
    pub emotion: u64,
    pub matched_cues: u64,
    pub recency: u64,
}

impl ImportanceIndex {
    pub fn from_components(brightness: u64, emotion: u64, matched_cues: u64, recency: u64) -> Self {
        let sum = brightness
            .saturating_add(emotion)
            .saturating_add(matched_cues)
            .saturating_add(recency);
        Self {
            total: sum.min(IMPORTANCE_CAP as u64) as u32,
            brightness,
            emotion,
            matched_cues,
            recency,
        }
    }

    pub const ZERO: ImportanceIndex = ImportanceIndex {
        total: 0,
        brightness: 0,
        emotion: 0,
        matched_cues: 0,
        recency: 0,
    };
}

/// Where an image under evaluation came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    /// A live percept: maximally recent, no cue match involved.
    Sensory,
    Recall { write_cycle: Option<Cycle> },
}

pub fn importance(
    layout: &Layout,
    vector: &FeatureVector,
    matched_cues: u32,
    origin: Origin,
    current_cycle: Cycle,
    cfg: &AnalyzerConfig,
) -> ImportanceIndex {
    let w = &cfg.weights;
    let b = layout.brightness(vector) as u64;
    let e = layout.emotion(vector) as u64;
    let (m, r) = match origin {
        Origin::Sensory => (0, cfg.recency_max as u64),
        Origin::Recall { write_cycle } => {
            let m = matched_cues.min(cfg.match_cap) as u64;
            let r = match write_cycle {
                None => 0,
                Some(written) => {
                    let age = current_cycle.saturating_sub(written) / cfg.recency_scale.max(1);
                    (cfg.recency_max as u64).saturating_sub(age)
                }
            };
            (m, r)
        }
    };
    ImportanceIndex::from_components(
        (w.brightness as u64).saturating_mul(b),
        (w.emotion as u64).saturating_mul(e),
        (w.matched as u64).saturating_mul(m),
        (w.recency as u64).saturating_mul(r),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StmSource {
    Sensory,
    Recall,
}

/// Current contents of short-term memory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StmState {
    pub vector: FeatureVector,
    pub entry_cycle: Cycle,
    pub entry_importance: ImportanceIndex,
    pub source: StmSource,
    pub source_word_id: Option<WordId>,
}

/// Entry importance minus one point per elapsed fade period, floored at 0.
pub fn stm_effective_importance(stm: &StmState, current_cycle: Cycle, cfg: &AnalyzerConfig) -> u32 {
    let faded = current_cycle.saturating_sub(stm.entry_cycle) / cfg.fade_period.max(1);
    (stm.entry_importance.total as u64).saturating_sub(faded) as u32
}

/// Whether `candidate` may replace the current short-term contents.
pub fn attention_gate(candidate: &ImportanceIndex, stm_effective: u32, cfg: &AnalyzerConfig) -> bool {
    candidate.total as u64 + cfg.margin as u64 >= stm_effective as u64
}

pub fn recognition_flag(result: &RecallResult, cfg: &AnalyzerConfig) -> bool {
    result.cue_count >= cfg.recognition_cues
}
