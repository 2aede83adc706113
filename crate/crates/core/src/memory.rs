//! Associative long-term memory.
//!
//! Words latch on write and stay until cleared. Recall is exact masked
//! equality over the general-feature region; when several words match, the
//! most recently written one wins and the rest are only counted.
//!
//! Recall runs against a bit-sliced index (one bitset over word slots per
//! general bit position), so a probe costs one pass over the word slots per
//! cue bit instead of one pass over every stored word. [`MemoryStore::matches_all`]
//! is the plain linear scan and serves as its reference.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::{FeatureVector, HexError, Layout};

pub type WordId = u64;
pub type Cycle = u64;

#[derive(Debug, Error)]
pub enum MemoryError {
    #[error("vector width {found} does not match layout width {expected}")]
    LayoutMismatch { expected: usize, found: usize },
    #[error("cue mask is empty; a cue needs at least one feature")]
    EmptyCue,
    #[error("cue mask selects bits outside the general-feature region")]
    MaskOutsideGeneral,
    #[error("cue values set bits outside the cue mask")]
    ValuesOutsideMask,
    #[error("unknown word id {0}")]
    UnknownWord(WordId),
    #[error("memory dump line {line}: {msg}")]
    Dump { line: usize, msg: String },
    #[error(transparent)]
    Hex(#[from] HexError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An exact-match probe: a word matches when `(bits AND mask) == values`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CueQuery {
    mask: FeatureVector,
    values: FeatureVector,
}

impl CueQuery {
    pub fn new(
        layout: &Layout,
        mask: FeatureVector,
        values: FeatureVector,
    ) -> Result<Self, MemoryError> {
        let cue = Self { mask, values };
        validate_cue(layout, &cue)?;
        Ok(cue)
    }

    /// Cue asking for every masked feature to be present.
    pub fn present(layout: &Layout, mask: FeatureVector) -> Result<Self, MemoryError> {
        let values = mask.clone();
        Self::new(layout, mask, values)
    }

    pub fn mask(&self) -> &FeatureVector {
        &self.mask
    }

    pub fn values(&self) -> &FeatureVector {
        &self.values
    }

    /// Number of features the cue constrains.
    pub fn cue_count(&self) -> u32 {
        self.mask.count_ones()
    }
}

fn check_width(layout: &Layout, v: &FeatureVector) -> Result<(), MemoryError> {
    if v.width() != layout.width() {
        return Err(MemoryError::LayoutMismatch {
            expected: layout.width(),
            found: v.width(),
        });
    }
    Ok(())
}

fn validate_cue(layout: &Layout, cue: &CueQuery) -> Result<(), MemoryError> {
    check_width(layout, &cue.mask)?;
    check_width(layout, &cue.values)?;
    if cue.mask.is_zero() {
        return Err(MemoryError::EmptyCue);
    }
    if cue.mask.iter_ones().any(|p| p < layout.general_range().start) {
        return Err(MemoryError::MaskOutsideGeneral);
    }
    if !cue.values.and_not(&cue.mask).is_zero() {
        return Err(MemoryError::ValuesOutsideMask);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryWord {
    pub word_id: WordId,
    pub vector: FeatureVector,
    pub write_cycle: Cycle,
    /// Equal to `write_cycle` until the word first matches.
    pub last_match_cycle: Cycle,
    pub successor: Option<WordId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecallResult {
    pub word_id: WordId,
    pub vector: FeatureVector,
    pub write_cycle: Cycle,
    /// Number of stored words the cue matched, winner included.
    pub match_count: usize,
    /// Number of features in the cue that produced the match.
    pub cue_count: u32,
}

/// Word retention before clear-on-disuse; `None` keeps words forever.
pub type Retention = Option<u64>;

#[derive(Debug, Clone)]
pub struct MemoryStore {
    layout: Layout,
    // slot index == word id; cleared words leave a hole.
    slots: Vec<Option<MemoryWord>>,
    live: usize,
    alive: Vec<u64>,
    // columns[p - general_start] has bit `slot` set iff that word has bit p.
    columns: Vec<Vec<u64>>,
    scratch: Vec<u64>,
}

impl MemoryStore {
    pub fn new(layout: Layout) -> Self {
        let general = layout.general_range().len();
        Self {
            layout,
            slots: Vec::new(),
            live: 0,
            alive: Vec::new(),
            columns: vec![Vec::new(); general],
            scratch: Vec::new(),
        }
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    /// Number of live words.
    pub fn len(&self) -> usize {
        self.live
    }

    pub fn is_empty(&self) -> bool {
        self.live == 0
    }

    /// Identifier the next write will receive.
    pub fn next_word_id(&self) -> WordId {
        self.slots.len() as WordId
    }

    pub fn get(&self, id: WordId) -> Option<&MemoryWord> {
        self.slots.get(id as usize).and_then(Option::as_ref)
    }

    pub fn contains(&self, id: WordId) -> bool {
        self.get(id).is_some()
    }

    /// Live words in ascending id order.
    pub fn words(&self) -> impl Iterator<Item = &MemoryWord> {
        self.slots.iter().flatten()
    }

    fn grow_to(&mut self, slots: usize) {
        let chunks = slots.div_ceil(64);
        if chunks > self.alive.len() {
            self.alive.resize(chunks, 0);
            for col in &mut self.columns {
                col.resize(chunks, 0);
            }
        }
        if slots > self.slots.len() {
            self.slots.resize(slots, None);
        }
    }

    /// Makes sure future writes never receive an id below `next`.
    pub fn reserve_ids(&mut self, next: WordId) {
        self.grow_to(next as usize);
    }

    fn place(&mut self, word: MemoryWord) {
        let slot = word.word_id as usize;
        self.grow_to(slot + 1);
        let (chunk, bit) = (slot / 64, 1u64 << (slot % 64));
        self.alive[chunk] |= bit;
        let start = self.layout.general_range().start;
        for p in word.vector.ones_in(self.layout.general_range()) {
            self.columns[p - start][chunk] |= bit;
        }
        self.slots[slot] = Some(word);
        self.live += 1;
    }

    /// Latches `vector` into a fresh word, visible to recalls immediately.
    pub fn write(&mut self, vector: FeatureVector, cycle: Cycle) -> Result<WordId, MemoryError> {
        check_width(&self.layout, &vector)?;
        let word_id = self.next_word_id();
        self.place(MemoryWord {
            word_id,
            vector,
            write_cycle: cycle,
            last_match_cycle: cycle,
            successor: None,
        });
        Ok(word_id)
    }

    /// Inserts a fully formed word, e.g. from a dump. Ids must arrive in
    /// increasing order.
    pub fn insert(&mut self, word: MemoryWord) -> Result<(), MemoryError> {
        check_width(&self.layout, &word.vector)?;
        if word.word_id < self.next_word_id() {
            return Err(MemoryError::Dump {
                line: 0,
                msg: format!(
                    "word id {} not above previous ids (next is {})",
                    word.word_id,
                    self.next_word_id()
                ),
            });
        }
        self.place(word);
        Ok(())
    }

    /// Exact recall with most-recent-wins arbitration. Stamps the winner's
    /// `last_match_cycle`.
    pub fn recall(
        &mut self,
        cue: &CueQuery,
        cycle: Cycle,
    ) -> Result<Option<RecallResult>, MemoryError> {
        validate_cue(&self.layout, cue)?;
        let start = self.layout.general_range().start;

        self.scratch.clear();
        self.scratch.extend_from_slice(&self.alive);
        let acc = &mut self.scratch;
        let values = cue.values.words();
        'bits: for (wi, &m) in cue.mask.words().iter().enumerate() {
            let mut rest = m;
            while rest != 0 {
                let tz = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let col = &self.columns[wi * 64 + tz - start];
                let mut any = 0u64;
                if values[wi] >> tz & 1 == 1 {
                    for (a, c) in acc.iter_mut().zip(col) {
                        *a &= c;
                        any |= *a;
                    }
                } else {
                    for (a, c) in acc.iter_mut().zip(col) {
                        *a &= !c;
                        any |= *a;
                    }
                }
                if any == 0 {
                    break 'bits;
                }
            }
        }

        let match_count: usize = acc.iter().map(|c| c.count_ones() as usize).sum();
        if match_count == 0 {
            return Ok(None);
        }
        let (chunk, bits) = acc
            .iter()
            .enumerate()
            .rev()
            .find(|(_, &c)| c != 0)
            .map(|(i, &c)| (i, c))
            .expect("nonzero match count");
        let slot = chunk * 64 + 63 - bits.leading_zeros() as usize;
        let word = self.slots[slot].as_mut().expect("alive slot holds a word");
        word.last_match_cycle = cycle.max(word.write_cycle);
        Ok(Some(RecallResult {
            word_id: word.word_id,
            vector: word.vector.clone(),
            write_cycle: word.write_cycle,
            match_count,
            cue_count: cue.cue_count(),
        }))
    }

    /// Every matching word id, ascending, by exhaustive scan. No side effects.
    pub fn matches_all(&self, cue: &CueQuery) -> Result<Vec<WordId>, MemoryError> {
        validate_cue(&self.layout, cue)?;
        Ok(self
            .words()
            .filter(|w| w.vector.masked_eq(&cue.mask, &cue.values))
            .map(|w| w.word_id)
            .collect())
    }

    /// Removes words idle for longer than `retention`; returns their ids.
    pub fn clear_unused(&mut self, cycle: Cycle, retention: Retention) -> Vec<WordId> {
        let Some(retention) = retention else {
            return Vec::new();
        };
        let stale: Vec<WordId> = self
            .words()
            .filter(|w| {
                w.write_cycle
                    .max(w.last_match_cycle)
                    .saturating_add(retention)
                    < cycle
            })
            .map(|w| w.word_id)
            .collect();
        for &id in &stale {
            let slot = id as usize;
            self.slots[slot] = None;
            self.alive[slot / 64] &= !(1u64 << (slot % 64));
            self.live -= 1;
        }
        stale
    }

    pub fn link(&mut self, from: WordId, to: WordId) -> Result<(), MemoryError> {
        if !self.contains(to) {
            return Err(MemoryError::UnknownWord(to));
        }
        let word = self
            .slots
            .get_mut(from as usize)
            .and_then(Option::as_mut)
            .ok_or(MemoryError::UnknownWord(from))?;
        word.successor = Some(to);
        Ok(())
    }

    pub fn dump_records(&self) -> Vec<WordRecord> {
        self.words().map(WordRecord::from).collect()
    }

    /// One JSON object per live word, ascending id.
    pub fn dump_jsonl<W: Write>(&self, mut out: W) -> Result<(), MemoryError> {
        for rec in self.dump_records() {
            serde_json::to_writer(&mut out, &rec).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn from_records(
        layout: Layout,
        records: impl IntoIterator<Item = WordRecord>,
    ) -> Result<Self, MemoryError> {
        let mut store = Self::new(layout);
        for (i, rec) in records.into_iter().enumerate() {
            store.insert_record(rec).map_err(|e| at_line(e, i + 1))?;
        }
        Ok(store)
    }

    pub fn load_jsonl<R: BufRead>(layout: Layout, input: R) -> Result<Self, MemoryError> {
        let mut store = Self::new(layout);
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: WordRecord = serde_json::from_str(&line).map_err(|e| MemoryError::Dump {
                line: i + 1,
                msg: e.to_string(),
            })?;
            store.insert_record(rec).map_err(|e| at_line(e, i + 1))?;
        }
        Ok(store)
    }

    fn insert_record(&mut self, rec: WordRecord) -> Result<(), MemoryError> {
        let vector = FeatureVector::from_hex(&rec.bits, self.layout.width())?;
        if rec.last_match_cycle < rec.write_cycle {
            return Err(MemoryError::Dump {
                line: 0,
                msg: "lastMatchCycle precedes writeCycle".into(),
            });
        }
        self.insert(MemoryWord {
            word_id: rec.word_id,
            vector,
            write_cycle: rec.write_cycle,
            last_match_cycle: rec.last_match_cycle,
            successor: rec.successor,
        })
    }
}

fn at_line(e: MemoryError, line: usize) -> MemoryError {
    match e {
        MemoryError::Dump { msg, .. } => MemoryError::Dump { line, msg },
        other => MemoryError::Dump {
            line,
            msg: other.to_string(),
        },
    }
}

/// Serialized form of one memory word.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct WordRecord {
    pub word_id: WordId,
    pub bits: String,
    pub write_cycle: Cycle,
    pub last_match_cycle: Cycle,
    pub successor: Option<WordId>,
}

impl From<&MemoryWord> for WordRecord {
    fn from(w: &MemoryWord) -> Self {
        Self {
            word_id: w.word_id,
            bits: w.vector.to_hex(),
            write_cycle: w.write_cycle,
            last_match_cycle: w.last_match_cycle,
            successor: w.successor,
        }
    }
}
