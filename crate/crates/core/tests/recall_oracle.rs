//! Recall against two independent references: the store's linear scan and a
//! per-bit predicate written here.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use subliminal_core::{CueQuery, FeatureVector, Layout, MemoryStore};

const W: usize = 64;

fn layout() -> Layout {
    Layout::new(W, 4, 4, 8).unwrap()
}

/// Bit-by-bit: every masked position agrees with the cue value.
fn per_bit_match(word: &FeatureVector, cue: &CueQuery) -> bool {
    (0..word.width()).all(|i| !cue.mask().get(i) || word.get(i) == cue.values().get(i))
}

fn arb_words() -> impl Strategy<Value = Vec<Vec<bool>>> {
    // narrow general region keeps collisions frequent
    proptest::collection::vec(proptest::collection::vec(any::<bool>(), 6), 0..40)
}

fn to_vector(bits: &[bool]) -> FeatureVector {
    FeatureVector::from_bits(W, bits.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| 8 + i))
}

proptest! {
    #[test]
    fn recall_agrees_with_scan_and_per_bit(words in arb_words(),
                                           mask in 1u8..64, values in 0u8..64) {
        let l = layout();
        let mut store = MemoryStore::new(l);
        for (i, w) in words.iter().enumerate() {
            store.write(to_vector(w), i as u64).unwrap();
        }
        let m = FeatureVector::from_bits(W, (0..6).filter(|i| mask >> i & 1 == 1).map(|i| 8 + i));
        let v = FeatureVector::from_bits(W, (0..6).filter(|i| (mask & values) >> i & 1 == 1).map(|i| 8 + i));
        let cue = CueQuery::new(&l, m, v).unwrap();

        let expected: Vec<u64> = store.words().filter(|w| per_bit_match(&w.vector, &cue)).map(|w| w.word_id).collect();
        let scanned = store.matches_all(&cue).unwrap();
        prop_assert_eq!(&scanned, &expected);

        let recalled = store.recall(&cue, 1000).unwrap();
        prop_assert_eq!(recalled.as_ref().map(|r| r.word_id), expected.last().copied());
        prop_assert_eq!(recalled.map_or(0, |r| r.match_count), expected.len());
        // same state, same answer
        let again = store.recall(&cue, 1000).unwrap();
        prop_assert_eq!(again.map(|r| r.word_id), expected.last().copied());
    }

    #[test]
    fn write_is_visible_immediately(words in arb_words(), extra in proptest::collection::vec(any::<bool>(), 6)) {
        prop_assume!(extra.iter().any(|b| *b));
        let l = layout();
        let mut store = MemoryStore::new(l);
        for w in &words {
            store.write(to_vector(w), 0).unwrap();
        }
        let v = to_vector(&extra);
        let id = store.write(v.clone(), 5).unwrap();
        let cue = CueQuery::present(&l, v.and(&l.general_mask())).unwrap();
        prop_assert_eq!(store.recall(&cue, 5).unwrap().unwrap().word_id, id);
    }

    #[test]
    fn clearing_spares_recently_matched(stamps in proptest::collection::vec((0u64..500, proptest::option::of(0u64..500)), 1..30),
                                        retention in 1u64..200, now in 0u64..800) {
        let l = layout();
        let mut store = MemoryStore::new(l);
        for (i, (written, matched)) in stamps.iter().enumerate() {
            let v = FeatureVector::from_bits(W, [8 + i]);
            store.write(v.clone(), *written).unwrap();
            if let Some(m) = matched {
                store.recall(&CueQuery::present(&l, v).unwrap(), written + m).unwrap();
            }
        }
        let before: Vec<_> = store.words().cloned().collect();
        let cleared = store.clear_unused(now, Some(retention));
        for w in &before {
            let idle_since = w.write_cycle.max(w.last_match_cycle);
            prop_assert_eq!(cleared.contains(&w.word_id), idle_since + retention < now);
        }
        prop_assert_eq!(store.len(), before.len() - cleared.len());
    }
}

#[test]
fn randomized_wide_store_agrees_with_per_bit_reference() {
    let l = Layout::new(256, 4, 4, 32).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut store = MemoryStore::new(l);
    let general = l.general_range();
    for i in 0..2000u64 {
        let v = if i % 10 == 9 {
            // exact duplicates force multi-match arbitration
            store.get(rng.gen_range(0..i)).unwrap().vector.clone()
        } else {
            FeatureVector::from_bits(256, general.clone().filter(|_| rng.gen_bool(0.5)))
        };
        store.write(v, i).unwrap();
    }
    for _ in 0..500 {
        let base = store.get(rng.gen_range(0..2000)).unwrap().vector.clone();
        let picked: Vec<usize> = base.ones_in(general.clone()).filter(|_| rng.gen_bool(0.02)).collect();
        if picked.is_empty() {
            continue;
        }
        let cue = CueQuery::present(&l, FeatureVector::from_bits(256, picked)).unwrap();
        let expected: Vec<u64> = store.words().filter(|w| per_bit_match(&w.vector, &cue)).map(|w| w.word_id).collect();
        assert!(!expected.is_empty());
        assert_eq!(store.matches_all(&cue).unwrap(), expected);
        let r = store.recall(&cue, 5000).unwrap().unwrap();
        assert_eq!(r.word_id, *expected.last().unwrap());
        assert_eq!(r.match_count, expected.len());
    }
}
