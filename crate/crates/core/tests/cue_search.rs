use std::collections::{HashMap, HashSet};

use proptest::prelude::*;
use subliminal_core::cue_editor::{CueEditor, Lfsr, DEFAULT_TAPS};
use subliminal_core::{FeatureVector, Layout};

fn layout() -> Layout {
    Layout::new(128, 4, 4, 16).unwrap()
}

fn stm_with(n: usize) -> FeatureVector {
    // spread the asserted positions over the named region
    FeatureVector::from_bits(128, (0..n).map(|i| 9 + 5 * i))
}

#[test]
fn sixteen_features_one_period_every_subset_once() {
    let stm = stm_with(16);
    let mut ed = CueEditor::reset(layout(), 16, &DEFAULT_TAPS, 0x1234).unwrap();
    let mut seen = HashSet::new();
    for _ in 0..65535 {
        let cue = ed.next_cue(&stm).unwrap();
        assert!(cue.mask().and_not(&stm).is_zero());
        assert!(seen.insert(cue.mask().words().to_vec()));
    }
    assert_eq!(seen.len(), 65535);
}

#[test]
fn fewer_features_cover_each_subset_evenly() {
    // with k < m asserted features each nonempty subset recurs 2^(m-k) times
    // per period, once the zero-selecting states are skipped
    let m = 8;
    let taps = [8, 6, 5, 4];
    let period = (1usize << m) - 1;
    for k in 1..=m {
        let stm = stm_with(k);
        let mut lfsr_probe = Lfsr::new(m as u32, &taps, 1).unwrap();
        let mut ed = CueEditor::reset(layout(), m as u32, &taps, 1).unwrap();
        // count register steps consumed by emitting cues over exactly one period
        let mut counts: HashMap<Vec<u64>, usize> = HashMap::new();
        let low = (1u64 << k) - 1;
        let emitted = (0..period)
            .filter(|_| lfsr_probe.step() & low != 0)
            .count();
        for _ in 0..emitted {
            *counts.entry(ed.next_cue(&stm).unwrap().mask().words().to_vec()).or_default() += 1;
        }
        assert_eq!(counts.len(), (1 << k) - 1, "k = {k}");
        assert!(counts.values().all(|&c| c == 1 << (m - k)), "k = {k}");
    }
}

proptest! {
    #[test]
    fn cues_are_valid_and_reproducible(bits in proptest::collection::btree_set(8usize..128, 1..40),
                                       seed in 1u64..65536, n in 1usize..50) {
        let stm = FeatureVector::from_bits(128, bits.iter().copied());
        let l = layout();
        let mut a = CueEditor::reset(l, 16, &DEFAULT_TAPS, seed).unwrap();
        let mut b = CueEditor::reset(l, 16, &DEFAULT_TAPS, seed).unwrap();
        for _ in 0..n {
            let ca = a.next_cue(&stm).unwrap();
            let cb = b.next_cue(&stm).unwrap();
            prop_assert_eq!(&ca, &cb);
            prop_assert!(!ca.mask().is_zero());
            prop_assert_eq!(ca.values(), ca.mask());
            prop_assert!(ca.mask().and_not(&stm).is_zero());
            prop_assert!(ca.mask().iter_ones().all(|p| p >= 8));
        }
    }

    #[test]
    fn register_never_reaches_zero(seed in 1u64..65536, steps in 1usize..5000) {
        let mut l = Lfsr::new(16, &DEFAULT_TAPS, seed).unwrap();
        for _ in 0..steps {
            prop_assert_ne!(l.step(), 0);
        }
    }
}
