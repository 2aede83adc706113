//! Fixed-width feature words and the region layout every word in a
//! simulation shares.
//!
//! Bit positions are laid out low to high as:
//!
//! ```text
//! [0, b)            brightness field
//! [b, b+e)          emotion field
//! [b+e, W-L)        named features (assigned by the sensory encoder)
//! [W-L, W)          learned features (AND combinations)
//! ```
//!
//! Everything from `b+e` upward is the general-feature region, the only part
//! of a word that may participate in a cue.

use std::fmt;
use std::ops::Range;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LayoutError {
    #[error("vector width must be a positive multiple of 4, got {0}")]
    BadWidth(usize),
    #[error("{name} field of {bits} bits exceeds the 16-bit limit")]
    FieldTooWide { name: &'static str, bits: usize },
    #[error("brightness {brightness} + emotion {emotion} + learned {learned} bits leave no named-feature region in a {width}-bit word")]
    NoNamedRegion {
        width: usize,
        brightness: usize,
        emotion: usize,
        learned: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HexError {
    #[error("expected {expected} hex digits, found {found}")]
    Length { expected: usize, found: usize },
    #[error("invalid hex digit {0:?}")]
    Digit(char),
    #[error("empty hex string")]
    Empty,
}

/// Region boundaries shared by every [`FeatureVector`] of one simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    width: usize,
    brightness_bits: usize,
    emotion_bits: usize,
    learned_bits: usize,
}

impl Layout {
    pub fn new(
        width: usize,
        brightness_bits: usize,
        emotion_bits: usize,
        learned_bits: usize,
    ) -> Result<Self, LayoutError> {
        if width == 0 || !width.is_multiple_of(4) {
            return Err(LayoutError::BadWidth(width));
        }
        if brightness_bits > 16 {
            return Err(LayoutError::FieldTooWide {
                name: "brightness",
                bits: brightness_bits,
            });
        }
        if emotion_bits > 16 {
            return Err(LayoutError::FieldTooWide {
                name: "emotion",
                bits: emotion_bits,
            });
        }
        if brightness_bits + emotion_bits + learned_bits >= width {
            return Err(LayoutError::NoNamedRegion {
                width,
                brightness: brightness_bits,
                emotion: emotion_bits,
                learned: learned_bits,
            });
        }
        Ok(Self {
            width,
            brightness_bits,
            emotion_bits,
            learned_bits,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn brightness_range(&self) -> Range<usize> {
        0..self.brightness_bits
    }

    pub fn emotion_range(&self) -> Range<usize> {
        self.brightness_bits..self.brightness_bits + self.emotion_bits
    }

    pub fn general_range(&self) -> Range<usize> {
        self.brightness_bits + self.emotion_bits..self.width
    }

    pub fn named_range(&self) -> Range<usize> {
        self.brightness_bits + self.emotion_bits..self.width - self.learned_bits
    }

    pub fn learned_range(&self) -> Range<usize> {
        self.width - self.learned_bits..self.width
    }

    pub fn brightness_max(&self) -> u32 {
        field_max(self.brightness_bits)
    }

    pub fn emotion_max(&self) -> u32 {
        field_max(self.emotion_bits)
    }

    pub fn zeros(&self) -> FeatureVector {
        FeatureVector::zeros(self.width)
    }

    pub fn brightness(&self, v: &FeatureVector) -> u32 {
        v.field(self.brightness_range())
    }

    pub fn emotion(&self, v: &FeatureVector) -> u32 {
        v.field(self.emotion_range())
    }

    /// Vector with every general-feature bit set.
    pub fn general_mask(&self) -> FeatureVector {
        let mut m = self.zeros();
        for p in self.general_range() {
            m.set(p, true);
        }
        m
    }
}

fn field_max(bits: usize) -> u32 {
    if bits == 0 {
        0
    } else {
        ((1u64 << bits) - 1) as u32
    }
}

/// A fixed-width bit word. Bit `i` lives in `words[i / 64]` at bit `i % 64`;
/// bits past `width` in the last word are always zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FeatureVector {
    width: usize,
    words: Vec<u64>,
}

impl FeatureVector {
    pub fn zeros(width: usize) -> Self {
        Self {
            width,
            words: vec![0; width.div_ceil(64)],
        }
    }

    pub fn from_bits(width: usize, bits: impl IntoIterator<Item = usize>) -> Self {
        let mut v = Self::zeros(width);
        for b in bits {
            v.set(b, true);
        }
        v
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.width, "bit {i} out of range for width {}", self.width);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, on: bool) {
        assert!(i < self.width, "bit {i} out of range for width {}", self.width);
        let bit = 1u64 << (i % 64);
        if on {
            self.words[i / 64] |= bit;
        } else {
            self.words[i / 64] &= !bit;
        }
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Ascending positions of the set bits.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let tz = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(wi * 64 + tz)
            })
        })
    }

    /// Ascending positions of the set bits that fall inside `range`.
    pub fn ones_in(&self, range: Range<usize>) -> impl Iterator<Item = usize> + '_ {
        self.iter_ones()
            .skip_while(move |&p| p < range.start)
            .take_while(move |&p| p < range.end)
    }

    /// `(self AND mask) == values`, word at a time.
    #[inline]
    pub fn masked_eq(&self, mask: &FeatureVector, values: &FeatureVector) -> bool {
        self.words
            .iter()
            .zip(&mask.words)
            .zip(&values.words)
            .all(|((w, m), v)| w & m == *v)
    }

    pub fn and(&self, other: &FeatureVector) -> FeatureVector {
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a & b)
            .collect();
        FeatureVector {
            width: self.width,
            words,
        }
    }

    pub fn and_not(&self, other: &FeatureVector) -> FeatureVector {
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a & !b)
            .collect();
        FeatureVector {
            width: self.width,
            words,
        }
    }

    /// Unsigned integer stored little-endian in the bits of `range`.
    pub fn field(&self, range: Range<usize>) -> u32 {
        range
            .enumerate()
            .fold(0u32, |acc, (k, p)| acc | (self.get(p) as u32) << k)
    }

    pub fn set_field(&mut self, range: Range<usize>, value: u32) {
        for (k, p) in range.enumerate() {
            self.set(p, value >> k & 1 == 1);
        }
    }

    /// Big-endian hex: `width / 4` digits, bit 0 is the low bit of the last digit.
    pub fn to_hex(&self) -> String {
        let digits = self.width / 4;
        let mut s = String::with_capacity(digits);
        for j in 0..digits {
            let k = digits - 1 - j;
            let nib = (self.words[k * 4 / 64] >> (k * 4 % 64)) & 0xf;
            s.push(char::from_digit(nib as u32, 16).unwrap());
        }
        s
    }

    pub fn from_hex(s: &str, width: usize) -> Result<Self, HexError> {
        let digits = width / 4;
        let n = s.chars().count();
        if n != digits {
            return Err(HexError::Length {
                expected: digits,
                found: n,
            });
        }
        Self::parse_hex(s)
    }

    /// Parses a hex string, taking the width from its length.
    pub fn parse_hex(s: &str) -> Result<Self, HexError> {
        if s.is_empty() {
            return Err(HexError::Empty);
        }
        let digits: Vec<char> = s.chars().collect();
        let width = digits.len() * 4;
        let mut v = Self::zeros(width);
        for (j, c) in digits.iter().enumerate() {
            let nib = c.to_digit(16).ok_or(HexError::Digit(*c))? as u64;
            let k = digits.len() - 1 - j;
            v.words[k * 4 / 64] |= nib << (k * 4 % 64);
        }
        Ok(v)
    }
}

impl fmt::Debug for FeatureVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FeatureVector({})", self.to_hex())
    }
}

impl Serialize for FeatureVector {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for FeatureVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        FeatureVector::parse_hex(&s).map_err(D::Error::custom)
    }
}

/// 64-bit FNV-1a over the vector's words; a cheap prefilter, never a
/// substitute for full equality.
pub fn digest(v: &FeatureVector) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for w in &v.words {
        for b in w.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_layout_regions() {
        let l = Layout::new(256, 4, 4, 32).unwrap();
        assert_eq!(l.brightness_range(), 0..4);
        assert_eq!(l.emotion_range(), 4..8);
        assert_eq!(l.general_range(), 8..256);
        assert_eq!(l.named_range(), 8..224);
        assert_eq!(l.learned_range(), 224..256);
        assert_eq!(l.brightness_max(), 15);
    }

    #[test]
    fn layout_rejects_bad_shapes() {
        assert_eq!(Layout::new(0, 4, 4, 0), Err(LayoutError::BadWidth(0)));
        assert_eq!(Layout::new(30, 4, 4, 0), Err(LayoutError::BadWidth(30)));
        assert!(matches!(
            Layout::new(16, 4, 4, 8),
            Err(LayoutError::NoNamedRegion { .. })
        ));
        assert!(matches!(
            Layout::new(256, 17, 4, 8),
            Err(LayoutError::FieldTooWide { .. })
        ));
    }

    #[test]
    fn hex_is_big_endian() {
        let v = FeatureVector::from_bits(8, [0]);
        assert_eq!(v.to_hex(), "01");
        let v = FeatureVector::from_bits(8, [4, 7]);
        assert_eq!(v.to_hex(), "90");
        let v = FeatureVector::from_bits(256, [255]);
        assert!(v.to_hex().starts_with('8'));
        assert_eq!(v.to_hex().len(), 64);
    }

    #[test]
    fn hex_errors() {
        assert_eq!(
            FeatureVector::from_hex("abc", 8),
            Err(HexError::Length {
                expected: 2,
                found: 3
            })
        );
        assert_eq!(FeatureVector::from_hex("zz", 8), Err(HexError::Digit('z')));
    }

    #[test]
    fn fields_round_trip() {
        let l = Layout::new(64, 4, 4, 8).unwrap();
        let mut v = l.zeros();
        v.set_field(l.brightness_range(), 11);
        v.set_field(l.emotion_range(), 6);
        assert_eq!(l.brightness(&v), 11);
        assert_eq!(l.emotion(&v), 6);
        assert_eq!(v.ones_in(l.general_range()).count(), 0);
    }

    proptest! {
        #[test]
        fn hex_round_trip(bits in proptest::collection::btree_set(0usize..200, 0..50)) {
            let v = FeatureVector::from_bits(200, bits.iter().copied());
            let back = FeatureVector::from_hex(&v.to_hex(), 200).unwrap();
            prop_assert_eq!(&back, &v);
            prop_assert_eq!(v.iter_ones().collect::<Vec<_>>(), bits.into_iter().collect::<Vec<_>>());
        }
    }
}
