//! Pseudorandom cue selection.
//!
//! A Fibonacci shift-register counter walks a maximal-length sequence; each
//! state picks which of the short-term memory's asserted features go on the
//! cue bus. With exactly `m` asserted features one period visits every
//! nonempty subset once.

use thiserror::Error;

use crate::bits::{FeatureVector, Layout};
use crate::memory::CueQuery;

pub const DEFAULT_WIDTH: u32 = 16;
pub const DEFAULT_TAPS: [u32; 4] = [16, 15, 13, 4];

/// Widths up to this bound are validated by walking the whole orbit.
const ENUMERATION_LIMIT: u32 = 20;
const MAX_WIDTH: u32 = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LfsrError {
    #[error("register width {0} outside 2..={MAX_WIDTH}")]
    Width(u32),
    #[error("tap {tap} outside 1..={width}")]
    TapRange { tap: u32, width: u32 },
    #[error("taps must include the register width {0}")]
    MissingTopTap(u32),
    #[error("duplicate tap {0}")]
    DuplicateTap(u32),
    #[error("taps {taps:?} are not maximal-length for width {width}")]
    NotMaximal { width: u32, taps: Vec<u32> },
    #[error("register state must be nonzero")]
    ZeroState,
    #[error("state {state:#x} does not fit in {width} bits")]
    StateTooWide { state: u64, width: u32 },
}

/// Fibonacci linear feedback shift register. Tap `t` reads state bit `m - t`;
/// each step shifts right and feeds the parity of the tapped bits into bit
/// `m - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lfsr {
    width: u32,
    taps: Vec<u32>,
    tap_mask: u64,
    state: u64,
}

impl Lfsr {
    pub fn new(width: u32, taps: &[u32], seed: u64) -> Result<Self, LfsrError> {
        let tap_mask = tap_mask(width, taps)?;
        let mut sorted = taps.to_vec();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        if !is_maximal(width, tap_mask) {
            return Err(LfsrError::NotMaximal {
                width,
                taps: sorted,
            });
        }
        let mut lfsr = Self {
            width,
            taps: sorted,
            tap_mask,
            state: 1,
        };
        lfsr.set_state(seed)?;
        Ok(lfsr)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn taps(&self) -> &[u32] {
        &self.taps
    }

    pub fn state(&self) -> u64 {
        self.state
    }

    pub fn period(&self) -> u64 {
        (1u64 << self.width) - 1
    }

    pub fn set_state(&mut self, state: u64) -> Result<(), LfsrError> {
        if state == 0 {
            return Err(LfsrError::ZeroState);
        }
        if state >> self.width != 0 {
            return Err(LfsrError::StateTooWide {
                state,
                width: self.width,
            });
        }
        self.state = state;
        Ok(())
    }

    #[inline]
    pub fn step(&mut self) -> u64 {
        self.state = next_state(self.width, self.tap_mask, self.state);
        self.state
    }
}

#[inline]
fn next_state(width: u32, tap_mask: u64, state: u64) -> u64 {
    let feedback = (state & tap_mask).count_ones() as u64 & 1;
    (state >> 1) | (feedback << (width - 1))
}

fn tap_mask(width: u32, taps: &[u32]) -> Result<u64, LfsrError> {
    if !(2..=MAX_WIDTH).contains(&width) {
        return Err(LfsrError::Width(width));
    }
    let mut mask = 0u64;
    for &t in taps {
        if t == 0 || t > width {
            return Err(LfsrError::TapRange { tap: t, width });
        }
        let bit = 1u64 << (width - t);
        if mask & bit != 0 {
            return Err(LfsrError::DuplicateTap(t));
        }
        mask |= bit;
    }
    if mask & 1 == 0 {
        return Err(LfsrError::MissingTopTap(width));
    }
    Ok(mask)
}

fn is_maximal(width: u32, tap_mask: u64) -> bool {
    if width <= ENUMERATION_LIMIT {
        orbit_length(width, tap_mask, 1) == (1u64 << width) - 1
    } else {
        primitive::taps_primitive(width, tap_mask)
    }
}

/// Steps from `start` until the state repeats it.
fn orbit_length(width: u32, tap_mask: u64, start: u64) -> u64 {
    let mut s = start;
    let mut n = 0u64;
    let limit = 1u64 << width;
    loop {
        s = next_state(width, tap_mask, s);
        n += 1;
        if s == start || n > limit {
            return n;
        }
    }
}

/// Order-of-x test for the feedback polynomial, used where walking the orbit
/// would be too slow. `x` has order `2^m - 1` modulo the polynomial exactly
/// when the polynomial is primitive.
mod primitive {
    /// Feedback polynomial `1 + sum x^t` for the taps encoded in `tap_mask`
    /// (bit `m - t` set for tap `t`).
    fn polynomial(width: u32, tap_mask: u64) -> u64 {
        let mut p = 1u64;
        for k in 0..width {
            if tap_mask >> k & 1 == 1 {
                p |= 1u64 << (width - k);
            }
        }
        p
    }

    fn mul_mod(a: u64, b: u64, poly: u64, deg: u32) -> u64 {
        let mut acc = 0u64;
        let mut a = a;
        let mut b = b;
        while b != 0 {
            if b & 1 == 1 {
                acc ^= a;
            }
            b >>= 1;
            a <<= 1;
            if a >> deg & 1 == 1 {
                a ^= poly;
            }
        }
        acc
    }

    fn x_pow(exp: u64, poly: u64, deg: u32) -> u64 {
        let mut result = 1u64;
        let mut base = 2u64; // x
        let mut e = exp;
        while e != 0 {
            if e & 1 == 1 {
                result = mul_mod(result, base, poly, deg);
            }
            base = mul_mod(base, base, poly, deg);
            e >>= 1;
        }
        result
    }

    fn prime_factors(mut n: u64) -> Vec<u64> {
        let mut out = Vec::new();
        let mut d = 2u64;
        while d * d <= n {
            if n.is_multiple_of(d) {
                out.push(d);
                while n.is_multiple_of(d) {
                    n /= d;
                }
            }
            d += 1;
        }
        if n > 1 {
            out.push(n);
        }
        out
    }

    pub(super) fn taps_primitive(width: u32, tap_mask: u64) -> bool {
        let poly = polynomial(width, tap_mask);
        let order = (1u64 << width) - 1;
        x_pow(order, poly, width) == 1
            && prime_factors(order)
                .into_iter()
                .all(|q| x_pow(order / q, poly, width) != 1)
    }
}

/// Turns short-term memory contents into a stream of nonempty cue subsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CueEditor {
    lfsr: Lfsr,
    layout: Layout,
}

impl CueEditor {
    /// Fresh editor with the register at `seed`.
    pub fn reset(layout: Layout, width: u32, taps: &[u32], seed: u64) -> Result<Self, LfsrError> {
        Ok(Self {
            lfsr: Lfsr::new(width, taps, seed)?,
            layout,
        })
    }

    pub fn lfsr(&self) -> &Lfsr {
        &self.lfsr
    }

    pub fn set_state(&mut self, state: u64) -> Result<(), LfsrError> {
        self.lfsr.set_state(state)
    }

    /// Next cue drawn from `stm`'s asserted general features, or `None` when
    /// there are none. Position `A[i]` joins the mask iff register bit
    /// `i mod m` is set; register states that select nothing are skipped.
    pub fn next_cue(&mut self, stm: &FeatureVector) -> Option<CueQuery> {
        let asserted: Vec<usize> = stm.ones_in(self.layout.general_range()).collect();
        if asserted.is_empty() {
            return None;
        }
        let m = self.lfsr.width() as usize;
        for _ in 0..self.lfsr.period() {
            let state = self.lfsr.step();
            let mut mask = self.layout.zeros();
            for (i, &p) in asserted.iter().enumerate() {
                if state >> (i % m) & 1 == 1 {
                    mask.set(p, true);
                }
            }
            if !mask.is_zero() {
                return Some(
                    CueQuery::present(&self.layout, mask)
                        .expect("mask is nonzero and inside the general region"),
                );
            }
        }
        unreachable!("a maximal-length register visits state 1 within one period")
    }
}
