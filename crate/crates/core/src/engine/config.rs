use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analyzer::AnalyzerConfig;
use crate::bits::{Layout, LayoutError};
use crate::cue_editor::{LfsrError, DEFAULT_TAPS, DEFAULT_WIDTH};
use crate::memorizer::RehearsalConfig;
use crate::procedures::DEFAULT_MAX_STEPS;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unsupported schema version {0} (expected {SCHEMA_VERSION})")]
    Schema(u32),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Lfsr(#[from] LfsrError),
    #[error("{0}")]
    Invalid(String),
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase", deny_unknown_fields)]
pub struct LayoutConfig {
    pub width: usize,
    pub brightness_bits: usize,
    pub emotion_bits: usize,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            width: 256,
            brightness_bits: 4,
            emotion_bits: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LfsrConfig {
    pub width: u32,
    pub taps: Vec<u32>,
    pub seed: u64,
}

impl Default for LfsrConfig {
    fn default() -> Self {
        Self {
            width: DEFAULT_WIDTH,
            taps: DEFAULT_TAPS.to_vec(),
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoveltyConfig {
    pub enabled: bool,
}

impl Default for NoveltyConfig {
    fn default() -> Self {
        Self { enabled: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase", deny_unknown_fields)]
pub struct LearnConfig {
    pub threshold: u32,
    pub region_bits: usize,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self {
            threshold: 3,
            region_bits: 32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase", deny_unknown_fields)]
pub struct EncoderConfig {
    pub auto_register: bool,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            auto_register: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase", deny_unknown_fields)]
pub struct ProcedureConfig {
    pub step_per_cycle: bool,
    pub max_steps: usize,
}

impl Default for ProcedureConfig {
    fn default() -> Self {
        Self {
            step_per_cycle: false,
            max_steps: DEFAULT_MAX_STEPS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RetentionConfig {
    /// Cycles a word survives without use; `null` disables clearing.
    pub retention: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase", deny_unknown_fields)]
pub struct EngineConfig {
    pub schema_version: u32,
    pub layout: LayoutConfig,
    pub lfsr: LfsrConfig,
    pub analyzer: AnalyzerConfig,
    pub rehearsal: RehearsalConfig,
    pub novelty: NoveltyConfig,
    pub learn: LearnConfig,
    pub encoder: EncoderConfig,
    pub procedure: ProcedureConfig,
    pub memory: RetentionConfig,
    /// Only scales trace timestamps.
    pub cycle_rate_hz: f64,
    pub max_cycles: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            layout: LayoutConfig::default(),
            lfsr: LfsrConfig::default(),
            analyzer: AnalyzerConfig::default(),
            rehearsal: RehearsalConfig::default(),
            novelty: NoveltyConfig::default(),
            learn: LearnConfig::default(),
            encoder: EncoderConfig::default(),
            procedure: ProcedureConfig::default(),
            memory: RetentionConfig::default(),
            cycle_rate_hz: 40.0,
            max_cycles: 100_000,
        }
    }
}

impl EngineConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn layout(&self) -> Result<Layout, LayoutError> {
        Layout::new(
            self.layout.width,
            self.layout.brightness_bits,
            self.layout.emotion_bits,
            self.learn.region_bits,
        )
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::Schema(self.schema_version));
        }
        self.layout()?;
        crate::cue_editor::Lfsr::new(self.lfsr.width, &self.lfsr.taps, self.lfsr.seed)?;
        let invalid = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if !(self.cycle_rate_hz.is_finite() && self.cycle_rate_hz > 0.0) {
            return invalid("cycleRateHz must be positive");
        }
        if self.analyzer.fade_period == 0 {
            return invalid("analyzer.fadePeriod must be positive");
        }
        if self.analyzer.recency_scale == 0 {
            return invalid("analyzer.recencyScale must be positive");
        }
        if self.rehearsal.history_depth == 0 {
            return invalid("rehearsal.historyDepth must be positive");
        }
        if self.procedure.max_steps == 0 {
            return invalid("procedure.maxSteps must be positive");
        }
        if self.memory.retention == Some(0) {
            return invalid("memory.retention must be positive or null");
        }
        Ok(())
    }

    /// Hash of every setting that shapes the simulation; the run length is
    /// excluded so a resumed run may go further than the original.
    pub fn state_hash(&self) -> String {
        let mut c = self.clone();
        c.max_cycles = 0;
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
