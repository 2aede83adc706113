//! Run summaries computed from a trace.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::engine::{EventBody, Trace, EVENT_KINDS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LearnedEntry {
    pub bit: usize,
    pub name: String,
    pub definition: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunReport {
    pub cycles: u64,
    pub totals: BTreeMap<String, u64>,
    pub final_ltm_size: u64,
    pub transfers_per_1000_cycles: f64,
    /// Mean cue size over successful recalls.
    pub mean_matched_cues: f64,
    pub learned_features: Vec<LearnedEntry>,
}

impl RunReport {
    /// `initial_ltm` is the number of words present before the first cycle.
    pub fn from_trace(trace: &Trace, cycles: u64, initial_ltm: u64) -> Self {
        let mut totals: BTreeMap<String, u64> = EVENT_KINDS.iter().map(|k| (k.to_string(), 0)).collect();
        let mut cleared = 0u64;
        let mut matched_cues = 0u64;
        let mut learned_features = Vec::new();
        for ev in &trace.events {
            *totals.entry(ev.body.kind().to_string()).or_default() += 1;
            match &ev.body {
                EventBody::MemoryCleared { word_ids } => cleared += word_ids.len() as u64,
                EventBody::Match { cue_count, .. } => matched_cues += *cue_count as u64,
                EventBody::FeatureLearned { bit, name, definition } => learned_features.push(LearnedEntry {
                    bit: *bit,
                    name: name.clone(),
                    definition: definition.clone(),
                }),
                _ => {}
            }
        }
        let writes = totals["MemorizationWrite"];
        let matches = totals["Match"];
        let transfers = totals["AttentionTransfer"];
        Self {
            cycles,
            final_ltm_size: (initial_ltm + writes).saturating_sub(cleared),
            transfers_per_1000_cycles: if cycles == 0 {
                0.0
            } else {
                transfers as f64 * 1000.0 / cycles as f64
            },
            mean_matched_cues: if matches == 0 {
                0.0
            } else {
                matched_cues as f64 / matches as f64
            },
            totals,
            learned_features,
        }
    }
}
