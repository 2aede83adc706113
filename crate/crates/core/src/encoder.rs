//! Sensory encoding and combinational feature learning.
//!
//! Named percept features map to fixed positions in the named region.
//! Learned features live in a reserved slice at the top of the word; each one
//! is the AND of a set of earlier features and is asserted whenever its whole
//! definition is.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::{FeatureVector, Layout};
use crate::memory::Cycle;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("unknown feature {0:?}")]
    UnknownFeature(String),
    #[error("named-feature region is full; cannot register {0:?}")]
    NamedRegionFull(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LearnError {
    #[error("learned-feature region exhausted")]
    RegionExhausted,
    #[error("definition needs at least two features, got {0}")]
    TooSmall(usize),
    #[error("definition references bit {0}, which is not a defined feature")]
    UndefinedBit(usize),
    #[error("definition already learned as bit {0}")]
    Duplicate(usize),
}

/// One stimulus record: a set of named features plus intensity fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPercept {
    pub cycle: Cycle,
    pub features: Vec<String>,
    #[serde(default)]
    pub brightness: u8,
    #[serde(default)]
    pub emotion: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoded {
    pub vector: FeatureVector,
    /// Named bits the percept asserted directly, ascending.
    pub named_bits: Vec<usize>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LearnedFeature {
    pub bit: usize,
    pub name: String,
    pub definition: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolTable {
    layout: Layout,
    name_to_bit: BTreeMap<String, usize>,
    bit_to_name: BTreeMap<usize, String>,
    next_named: usize,
    learned: Vec<LearnedFeature>,
    learning_disabled: bool,
}

impl SymbolTable {
    pub fn new(layout: Layout) -> Self {
        Self {
            layout,
            name_to_bit: BTreeMap::new(),
            bit_to_name: BTreeMap::new(),
            next_named: layout.named_range().start,
            learned: Vec::new(),
            learning_disabled: false,
        }
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn bit_of(&self, name: &str) -> Option<usize> {
        self.name_to_bit.get(name).copied()
    }

    pub fn name_of(&self, bit: usize) -> Option<&str> {
        self.bit_to_name.get(&bit).map(String::as_str)
    }

    pub fn named(&self) -> &BTreeMap<String, usize> {
        &self.name_to_bit
    }

    pub fn learned(&self) -> &[LearnedFeature] {
        &self.learned
    }

    pub fn learning_disabled(&self) -> bool {
        self.learning_disabled
    }

    pub fn register(&mut self, name: &str) -> Result<usize, EncodeError> {
        if let Some(bit) = self.bit_of(name) {
            return Ok(bit);
        }
        if self.next_named >= self.layout.named_range().end {
            return Err(EncodeError::NamedRegionFull(name.to_string()));
        }
        let bit = self.next_named;
        self.next_named += 1;
        self.name_to_bit.insert(name.to_string(), bit);
        self.bit_to_name.insert(bit, name.to_string());
        Ok(bit)
    }

    /// Builds the feature word for `percept`, then closes it under the
    /// learned definitions.
    pub fn encode(&mut self, percept: &RawPercept, auto_register: bool) -> Result<Encoded, EncodeError> {
        let missing: BTreeSet<&str> = percept
            .features
            .iter()
            .map(String::as_str)
            .filter(|n| self.bit_of(n).is_none())
            .collect();
        if let Some(first) = missing.first() {
            if !auto_register {
                return Err(EncodeError::UnknownFeature(first.to_string()));
            }
            let free = self.layout.named_range().end - self.next_named;
            if missing.len() > free {
                let name = missing.iter().nth(free).expect("more missing than free");
                return Err(EncodeError::NamedRegionFull(name.to_string()));
            }
            for name in missing {
                self.register(name)?;
            }
        }

        let mut warnings = Vec::new();
        let mut vector = self.layout.zeros();
        let mut named_bits: Vec<usize> = percept
            .features
            .iter()
            .map(|n| self.name_to_bit[n.as_str()])
            .collect();
        named_bits.sort_unstable();
        named_bits.dedup();
        for &b in &named_bits {
            vector.set(b, true);
        }

        let clamp = |value: u8, max: u32, field: &str, warnings: &mut Vec<String>| {
            if value as u32 > max {
                warnings.push(format!("{field} {value} clamped to {max}"));
                max
            } else {
                value as u32
            }
        };
        let b = clamp(percept.brightness, self.layout.brightness_max(), "brightness", &mut warnings);
        let e = clamp(percept.emotion, self.layout.emotion_max(), "emotion", &mut warnings);
        vector.set_field(self.layout.brightness_range(), b);
        vector.set_field(self.layout.emotion_range(), e);

        self.close(&mut vector);
        Ok(Encoded {
            vector,
            named_bits,
            warnings,
        })
    }

    /// Asserts every learned bit whose definition is fully asserted, until
    /// nothing changes.
    pub fn close(&self, vector: &mut FeatureVector) {
        loop {
            let mut changed = false;
            for f in &self.learned {
                if !vector.get(f.bit) && f.definition.iter().all(|&b| vector.get(b)) {
                    vector.set(f.bit, true);
                    changed = true;
                }
            }
            if !changed {
                return;
            }
        }
    }

    pub fn has_definition(&self, definition: &[usize]) -> Option<usize> {
        self.learned
            .iter()
            .find(|f| f.definition == definition)
            .map(|f| f.bit)
    }

    fn is_defined(&self, bit: usize) -> bool {
        self.bit_to_name.contains_key(&bit) || self.learned.iter().any(|f| f.bit == bit)
    }

    /// Allocates a learned bit for the AND of `definition`. Definitions may
    /// only reference existing features, which keeps them acyclic.
    pub fn learn_feature(&mut self, definition: &[usize]) -> Result<usize, LearnError> {
        let mut def = definition.to_vec();
        def.sort_unstable();
        def.dedup();
        if def.len() < 2 {
            return Err(LearnError::TooSmall(def.len()));
        }
        if let Some(&bad) = def.iter().find(|&&b| !self.is_defined(b)) {
            return Err(LearnError::UndefinedBit(bad));
        }
        if let Some(bit) = self.has_definition(&def) {
            return Err(LearnError::Duplicate(bit));
        }
        let bit = self.layout.learned_range().start + self.learned.len();
        if self.learning_disabled || bit >= self.layout.width() {
            self.learning_disabled = true;
            return Err(LearnError::RegionExhausted);
        }
        let name = format!("L{}", self.learned.len());
        self.bit_to_name.insert(bit, name.clone());
        self.learned.push(LearnedFeature {
            bit,
            name,
            definition: def,
        });
        Ok(bit)
    }

    pub fn describe(&self, definition: &[usize]) -> Vec<String> {
        definition
            .iter()
            .map(|b| self.name_of(*b).map_or_else(|| format!("#{b}"), str::to_string))
            .collect()
    }

    pub fn to_image(&self) -> SymbolImage {
        SymbolImage {
            named: self.name_to_bit.clone(),
            learned: self.learned.clone(),
            learning_disabled: self.learning_disabled,
        }
    }

    pub fn from_image(layout: Layout, image: SymbolImage) -> Self {
        let mut t = Self::new(layout);
        for (name, bit) in image.named {
            t.bit_to_name.insert(bit, name.clone());
            t.name_to_bit.insert(name, bit);
            t.next_named = t.next_named.max(bit + 1);
        }
        for f in image.learned {
            t.bit_to_name.insert(f.bit, f.name.clone());
            t.learned.push(f);
        }
        t.learning_disabled = image.learning_disabled;
        t
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SymbolImage {
    pub named: BTreeMap<String, usize>,
    pub learned: Vec<LearnedFeature>,
    pub learning_disabled: bool,
}

/// Need-to-learn detector: counts exact recurring feature sets.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CombinationDetector {
    threshold: u32,
    counts: BTreeMap<Vec<usize>, u32>,
    proposed: BTreeSet<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LearnProposal {
    pub definition: Vec<usize>,
}

impl CombinationDetector {
    pub fn new(threshold: u32) -> Self {
        Self {
            threshold,
            ..Self::default()
        }
    }

    /// Counts one occurrence of `named_bits` (ascending). Proposes the set
    /// once, when its count reaches the threshold.
    pub fn observe(&mut self, named_bits: &[usize], table: &SymbolTable) -> Option<LearnProposal> {
        if named_bits.len() < 2 {
            return None;
        }
        let count = self.counts.entry(named_bits.to_vec()).or_insert(0);
        *count += 1;
        if *count < self.threshold
            || self.proposed.contains(named_bits)
            || table.has_definition(named_bits).is_some()
        {
            return None;
        }
        self.proposed.insert(named_bits.to_vec());
        Some(LearnProposal {
            definition: named_bits.to_vec(),
        })
    }

    pub fn to_image(&self) -> DetectorImage {
        DetectorImage {
            counts: self.counts.iter().map(|(k, v)| (k.clone(), *v)).collect(),
            proposed: self.proposed.iter().cloned().collect(),
        }
    }

    pub fn from_image(threshold: u32, image: DetectorImage) -> Self {
        Self {
            threshold,
            counts: image.counts.into_iter().collect(),
            proposed: image.proposed.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectorImage {
    pub counts: Vec<(Vec<usize>, u32)>,
    pub proposed: Vec<Vec<usize>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn layout() -> Layout {
        Layout::new(64, 4, 4, 4).unwrap()
    }

    fn percept(features: &[&str]) -> RawPercept {
        RawPercept {
            cycle: 0,
            features: features.iter().map(|s| s.to_string()).collect(),
            brightness: 0,
            emotion: 0,
        }
    }

    #[test]
    fn chartreuse_is_yellow_and_green() {
        let mut t = SymbolTable::new(layout());
        let yg = t.encode(&percept(&["yellow", "green"]), true).unwrap();
        let chartreuse = t.learn_feature(&yg.named_bits).unwrap();
        assert_eq!(chartreuse, 60);
        let v = t.encode(&percept(&["green", "yellow"]), true).unwrap().vector;
        assert!(v.get(chartreuse));
        let v = t.encode(&percept(&["yellow"]), true).unwrap().vector;
        assert!(!v.get(chartreuse));
    }

    #[test]
    fn nested_definitions_close_to_fixpoint() {
        let mut t = SymbolTable::new(layout());
        t.encode(&percept(&["yellow", "green", "x"]), true).unwrap();
        let (y, g, x) = (t.bit_of("yellow").unwrap(), t.bit_of("green").unwrap(), t.bit_of("x").unwrap());
        let chartreuse = t.learn_feature(&[y, g]).unwrap();
        let d = t.learn_feature(&[chartreuse, x]).unwrap();
        let v = t.encode(&percept(&["x", "green", "yellow"]), true).unwrap().vector;
        assert!(v.get(chartreuse) && v.get(d));
        let v = t.encode(&percept(&["x", "yellow"]), true).unwrap().vector;
        assert!(!v.get(chartreuse) && !v.get(d));
    }

    #[test]
    fn unknown_names_without_auto_register() {
        let mut t = SymbolTable::new(layout());
        assert_eq!(
            t.encode(&percept(&["smell"]), false),
            Err(EncodeError::UnknownFeature("smell".into()))
        );
        assert!(t.named().is_empty());
    }

    #[test]
    fn named_region_overflow_rejects_whole_percept() {
        let l = Layout::new(16, 2, 2, 8).unwrap(); // 4 named bits
        let mut t = SymbolTable::new(l);
        t.encode(&percept(&["a", "b", "c"]), true).unwrap();
        let err = t.encode(&percept(&["d", "e"]), true).unwrap_err();
        assert!(matches!(err, EncodeError::NamedRegionFull(_)));
        assert_eq!(t.named().len(), 3);
    }

    #[test]
    fn intensities_are_clamped() {
        let mut t = SymbolTable::new(layout());
        let mut p = percept(&["tone"]);
        p.brightness = 200;
        p.emotion = 3;
        let enc = t.encode(&p, true).unwrap();
        assert_eq!(layout().brightness(&enc.vector), 15);
        assert_eq!(layout().emotion(&enc.vector), 3);
        assert_eq!(enc.warnings.len(), 1);
    }

    #[test]
    fn learning_validations() {
        let mut t = SymbolTable::new(layout());
        t.encode(&percept(&["a", "b", "c", "d", "e", "f"]), true).unwrap();
        let bit = |n: &str| t.bit_of(n).unwrap();
        let (a, b, c, d, e, f) = (bit("a"), bit("b"), bit("c"), bit("d"), bit("e"), bit("f"));
        assert_eq!(t.learn_feature(&[a]), Err(LearnError::TooSmall(1)));
        assert_eq!(t.learn_feature(&[a, 40]), Err(LearnError::UndefinedBit(40)));
        let l0 = t.learn_feature(&[a, b]).unwrap();
        assert_eq!(t.learn_feature(&[b, a]), Err(LearnError::Duplicate(l0)));
        let l1 = t.learn_feature(&[c, d]).unwrap();
        assert_ne!(l0, l1);
        t.learn_feature(&[e, f]).unwrap();
        t.learn_feature(&[a, f]).unwrap();
        assert_eq!(t.learn_feature(&[b, c]), Err(LearnError::RegionExhausted));
        assert!(t.learning_disabled());
    }

    #[test]
    fn detector_counts_exact_sets() {
        let mut t = SymbolTable::new(layout());
        let yg = t.encode(&percept(&["yellow", "green"]), true).unwrap().named_bits;
        let y = vec![t.bit_of("yellow").unwrap()];
        let mut det = CombinationDetector::new(3);
        assert_eq!(det.observe(&yg, &t), None);
        assert_eq!(det.observe(&yg, &t), None);
        assert_eq!(det.observe(&yg, &t).unwrap().definition, yg);
        assert_eq!(det.observe(&yg, &t), None);
        for _ in 0..100 {
            assert_eq!(det.observe(&y, &t), None);
        }
    }

    #[test]
    fn detector_skips_already_learned_sets() {
        let mut t = SymbolTable::new(layout());
        let yg = t.encode(&percept(&["yellow", "green"]), true).unwrap().named_bits;
        t.learn_feature(&yg).unwrap();
        let mut det = CombinationDetector::new(1);
        assert_eq!(det.observe(&yg, &t), None);
    }

    fn arb_table() -> impl Strategy<Value = (SymbolTable, Vec<Vec<usize>>)> {
        proptest::collection::vec(proptest::collection::btree_set(0usize..10, 2..4), 0..6).prop_map(|defs| {
            let l = Layout::new(64, 4, 4, 8).unwrap();
            let mut t = SymbolTable::new(l);
            for i in 0..10 {
                t.register(&format!("f{i}")).unwrap();
            }
            let mut learned = Vec::new();
            for d in defs {
                // indices >= 8 refer to earlier learned bits when available
                let bits: Vec<usize> = d
                    .into_iter()
                    .map(|i| match learned.get(i.saturating_sub(8)) {
                        Some(&lb) if i >= 8 => lb,
                        _ => 8 + i,
                    })
                    .collect();
                if let Ok(b) = t.learn_feature(&bits) {
                    learned.push(b);
                }
            }
            let defs = t.learned().iter().map(|f| f.definition.clone()).collect();
            (t, defs)
        })
    }

    proptest! {
        #[test]
        fn closure_is_conjunction_and_fixpoint((mut t, _defs) in arb_table(),
                                                feats in proptest::collection::btree_set(0usize..10, 0..10)) {
            let names: Vec<String> = feats.iter().map(|i| format!("f{i}")).collect();
            let p = RawPercept { cycle: 0, features: names, brightness: 1, emotion: 2 };
            let v = t.encode(&p, false).unwrap().vector;
            let mut again = v.clone();
            t.close(&mut again);
            prop_assert_eq!(&again, &v);
            for f in t.learned() {
                prop_assert_eq!(v.get(f.bit), f.definition.iter().all(|&b| v.get(b)));
            }
            // named bits are exactly the percept's
            let named: Vec<usize> = v.ones_in(t.layout().named_range()).collect();
            prop_assert_eq!(named, feats.iter().map(|i| 8 + i).collect::<Vec<_>>());
        }
    }
}
