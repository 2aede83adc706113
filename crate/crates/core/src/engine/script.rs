//! Stimulus scripts: JSON Lines of percepts and directives keyed by cycle.
//!
//! ```text
//! {"cycle":0,"features":["yellow","green"],"brightness":3,"emotion":1}
//! {"cycle":41,"runProcedure":{"startWordId":0}}
//! ```

use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoder::RawPercept;
use crate::memory::{Cycle, WordId};

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("script line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("script line {line}: cycle {cycle} precedes previous cycle {previous}")]
    OutOfOrder { line: usize, cycle: Cycle, previous: Cycle },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RunProcedure {
    pub start_word_id: WordId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct DirectiveLine {
    cycle: Cycle,
    run_procedure: RunProcedure,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stimulus {
    Percept(RawPercept),
    RunProcedure(RunProcedure),
    /// Has a cycle but nothing else usable; surfaces as a warning.
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptRecord {
    pub cycle: Cycle,
    pub stimulus: Stimulus,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StimulusScript {
    records: Vec<ScriptRecord>,
}

impl StimulusScript {
    pub fn new(records: Vec<ScriptRecord>) -> Self {
        let mut records = records;
        records.sort_by_key(|r| r.cycle);
        Self { records }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_percepts(percepts: impl IntoIterator<Item = RawPercept>) -> Self {
        Self::new(
            percepts
                .into_iter()
                .map(|p| ScriptRecord {
                    cycle: p.cycle,
                    stimulus: Stimulus::Percept(p),
                })
                .collect(),
        )
    }

    pub fn push(&mut self, record: ScriptRecord) {
        let at = self.records.partition_point(|r| r.cycle <= record.cycle);
        self.records.insert(at, record);
    }

    pub fn records(&self) -> &[ScriptRecord] {
        &self.records
    }

    /// Index of the first record at or after `cycle`.
    pub fn seek(&self, cycle: Cycle) -> usize {
        self.records.partition_point(|r| r.cycle < cycle)
    }

    pub fn parse_jsonl<R: BufRead>(input: R) -> Result<Self, ScriptError> {
        let mut records = Vec::new();
        let mut previous = 0;
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let value: serde_json::Value = serde_json::from_str(&line).map_err(|e| ScriptError::Line {
                line: line_no,
                msg: e.to_string(),
            })?;
            let cycle = value
                .get("cycle")
                .and_then(serde_json::Value::as_u64)
                .ok_or_else(|| ScriptError::Line {
                    line: line_no,
                    msg: "record needs an unsigned \"cycle\"".into(),
                })?;
            if cycle < previous {
                return Err(ScriptError::OutOfOrder {
                    line: line_no,
                    cycle,
                    previous,
                });
            }
            previous = cycle;
            let stimulus = if value.get("runProcedure").is_some() {
                match serde_json::from_value::<DirectiveLine>(value) {
                    Ok(d) => Stimulus::RunProcedure(d.run_procedure),
                    Err(e) => Stimulus::Malformed(format!("line {line_no}: {e}")),
                }
            } else if value.get("features").is_some() {
                match serde_json::from_value::<RawPercept>(value) {
                    Ok(p) => Stimulus::Percept(p),
                    Err(e) => Stimulus::Malformed(format!("line {line_no}: {e}")),
                }
            } else {
                Stimulus::Malformed(format!("line {line_no}: neither percept nor directive"))
            };
            records.push(ScriptRecord { cycle, stimulus });
        }
        Ok(Self { records })
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let line = match &r.stimulus {
                Stimulus::Percept(p) => serde_json::to_string(p),
                Stimulus::RunProcedure(d) => serde_json::to_string(&DirectiveLine {
                    cycle: r.cycle,
                    run_procedure: d.clone(),
                }),
                Stimulus::Malformed(_) => continue,
            }
            .expect("script records serialize");
            out.push_str(&line);
            out.push('\n');
        }
        out
    }
}
