//! Trace events: one JSON object per line, fields in a fixed order.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::analyzer::{ImportanceIndex, StmSource};
use crate::bits::FeatureVector;
use crate::memorizer::TriggerReason;
use crate::memory::{Cycle, WordId};
use crate::procedures::Halt;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TraceEvent {
    pub cycle: Cycle,
    pub wall_ms: f64,
    #[serde(flatten)]
    pub body: EventBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all_fields = "camelCase")]
pub enum EventBody {
    SensoryFrame {
        features: Vec<String>,
        vector: FeatureVector,
        importance: ImportanceIndex,
    },
    RecallAttempt {
        mask: FeatureVector,
        cue_count: u32,
    },
    Match {
        word_id: WordId,
        match_count: u64,
        cue_count: u32,
        importance: ImportanceIndex,
        stm_effective: u32,
        recognition: bool,
        transferred: bool,
    },
    NoMatch {
        mask: FeatureVector,
    },
    AttentionTransfer {
        source: StmSource,
        word_id: Option<WordId>,
        vector: FeatureVector,
        candidate: ImportanceIndex,
        displaced: u32,
        margin: u32,
        rehearsal: bool,
    },
    MemorizationWrite {
        reason: TriggerReason,
        word_id: WordId,
        vector: FeatureVector,
    },
    FeatureLearned {
        bit: usize,
        name: String,
        definition: Vec<String>,
    },
    ProcedureStep {
        start_word_id: WordId,
        step: usize,
        word_id: WordId,
        halted: Option<Halt>,
    },
    MemoryCleared {
        word_ids: Vec<WordId>,
    },
    Warning {
        message: String,
    },
}

impl EventBody {
    pub fn kind(&self) -> &'static str {
        match self {
            EventBody::SensoryFrame { .. } => "SensoryFrame",
            EventBody::RecallAttempt { .. } => "RecallAttempt",
            EventBody::Match { .. } => "Match",
            EventBody::NoMatch { .. } => "NoMatch",
            EventBody::AttentionTransfer { .. } => "AttentionTransfer",
            EventBody::MemorizationWrite { .. } => "MemorizationWrite",
            EventBody::FeatureLearned { .. } => "FeatureLearned",
            EventBody::ProcedureStep { .. } => "ProcedureStep",
            EventBody::MemoryCleared { .. } => "MemoryCleared",
            EventBody::Warning { .. } => "Warning",
        }
    }
}

pub const EVENT_KINDS: [&str; 10] = [
    "SensoryFrame",
    "RecallAttempt",
    "Match",
    "NoMatch",
    "AttentionTransfer",
    "MemorizationWrite",
    "FeatureLearned",
    "ProcedureStep",
    "MemoryCleared",
    "Warning",
];

impl TraceEvent {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("trace events serialize")
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub events: Vec<TraceEvent>,
}

impl Trace {
    pub fn lines(&self) -> impl Iterator<Item = String> + '_ {
        self.events.iter().map(TraceEvent::to_line)
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for line in self.lines() {
            out.write_all(line.as_bytes())?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self, TraceReadError> {
        let mut events = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line.map_err(|e| TraceReadError { line: i + 1, msg: e.to_string() })?;
            if line.trim().is_empty() {
                continue;
            }
            let ev = serde_json::from_str(&line).map_err(|e| TraceReadError {
                line: i + 1,
                msg: e.to_string(),
            })?;
            events.push(ev);
        }
        Ok(Self { events })
    }

    pub fn extend(&mut self, other: Trace) {
        self.events.extend(other.events);
    }

    pub fn count(&self, kind: &str) -> usize {
        self.events.iter().filter(|e| e.body.kind() == kind).count()
    }
}

#[derive(Debug, thiserror::Error)]
#[error("trace line {line}: {msg}")]
pub struct TraceReadError {
    pub line: usize,
    pub msg: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_order_is_stable() {
        let ev = TraceEvent {
            cycle: 3,
            wall_ms: 75.0,
            body: EventBody::NoMatch {
                mask: FeatureVector::from_bits(8, [4]),
            },
        };
        assert_eq!(ev.to_line(), r#"{"cycle":3,"wallMs":75.0,"kind":"NoMatch","mask":"10"}"#);
        let back: TraceEvent = serde_json::from_str(&ev.to_line()).unwrap();
        assert_eq!(back, ev);
    }

    #[test]
    fn nested_payload_round_trips() {
        let ev = TraceEvent {
            cycle: 9,
            wall_ms: 225.0,
            body: EventBody::AttentionTransfer {
                source: StmSource::Recall,
                word_id: Some(4),
                vector: FeatureVector::from_bits(16, [9]),
                candidate: ImportanceIndex::from_components(1, 2, 3, 4),
                displaced: 7,
                margin: 0,
                rehearsal: false,
            },
        };
        let line = ev.to_line();
        assert!(line.starts_with(r#"{"cycle":9,"wallMs":225.0,"kind":"AttentionTransfer","source":"recall","wordId":4"#));
        let back: TraceEvent = serde_json::from_str(&line).unwrap();
        assert_eq!(back, ev);
    }
}
