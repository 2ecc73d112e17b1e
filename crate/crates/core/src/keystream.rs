//! Running-key generation from a seed key, per-symbol selectors and the
//! Berlekamp–Massey recovery attack.
//!
//! The LFSR is in Fibonacci (external XOR) form. Stage 1 is the output end;
//! the register holds the next `degree` output bits in order, so the seed is
//! also the first `degree` bits of the keystream. With tap set `T` the stream
//! obeys
//!
//! ```text
//! a[n] = XOR_{t in T} a[n - t]
//! ```
//!
//! i.e. the connection polynomial is `1 + Σ_{t∈T} x^t`. Taps `{4, 1}` give
//! `1 + x + x⁴`.

use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest supported register length (state is kept in a `u64`).
pub const MAX_DEGREE: u32 = 64;

/// Primitive connection polynomials, as tap sets, for degrees 2 through 24.
const PRIMITIVE_TAPS: [&[u32]; 23] = [
    &[2, 1],
    &[3, 2],
    &[4, 3],
    &[5, 3],
    &[6, 5],
    &[7, 6],
    &[8, 6, 5, 4],
    &[9, 5],
    &[10, 7],
    &[11, 9],
    &[12, 6, 4, 1],
    &[13, 4, 3, 1],
    &[14, 5, 3, 1],
    &[15, 14],
    &[16, 15, 13, 4],
    &[17, 14],
    &[18, 11],
    &[19, 6, 2, 1],
    &[20, 17],
    &[21, 19],
    &[22, 21],
    &[23, 18],
    &[24, 23, 22, 17],
];

/// Feedback configuration of a Fibonacci LFSR.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LfsrSpec {
    pub degree: u32,
    pub taps: Vec<u32>,
}

impl LfsrSpec {
    pub fn new(degree: u32, taps: &[u32]) -> Result<Self> {
        let mut taps: Vec<u32> = taps.to_vec();
        taps.sort_unstable_by(|a, b| b.cmp(a));
        taps.dedup();
        let spec = Self { degree, taps };
        spec.validate()?;
        Ok(spec)
    }

    /// Bundled primitive polynomial of the given degree (2..=24).
    pub fn primitive(degree: u32) -> Result<Self> {
        let taps = degree
            .checked_sub(2)
            .and_then(|i| PRIMITIVE_TAPS.get(i as usize))
            .ok_or_else(|| {
                Error::InvalidLfsr(alloc::format!("no bundled primitive polynomial of degree {degree}"))
            })?;
        Self::new(degree, taps)
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree < 2 || self.degree > MAX_DEGREE {
            return Err(Error::InvalidLfsr(alloc::format!(
                "degree {} outside [2, {MAX_DEGREE}]",
                self.degree
            )));
        }
        if self.taps.is_empty() {
            return Err(Error::InvalidLfsr("empty tap set".into()));
        }
        if let Some(t) = self.taps.iter().find(|&&t| t == 0 || t > self.degree) {
            return Err(Error::InvalidLfsr(alloc::format!(
                "tap {t} outside [1, {}]",
                self.degree
            )));
        }
        if !self.taps.contains(&self.degree) {
            return Err(Error::InvalidLfsr("degree tap missing".into()));
        }
        Ok(())
    }

    fn feedback_mask(&self) -> u64 {
        self.taps
            .iter()
            .fold(0u64, |m, &t| m | 1u64 << (self.degree - t))
    }

    /// Cycle length starting from `seed`. The degree tap makes the state map
    /// invertible, so every nonzero state lies on a pure cycle.
    pub fn period(&self, seed: &[bool]) -> Result<u64> {
        let mut lfsr = Lfsr::new(self, seed)?;
        let start = lfsr.state;
        let mut steps = 0u64;
        loop {
            lfsr.step();
            steps += 1;
            if lfsr.state == start {
                return Ok(steps);
            }
        }
    }

    /// True iff the polynomial generates a maximum-length sequence. Runs one
    /// full period, so the cost is `2^degree` steps.
    pub fn is_maximal(&self) -> Result<bool> {
        let mut seed = alloc::vec![false; self.degree as usize];
        seed[0] = true;
        let full = if self.degree == 64 {
            u64::MAX
        } else {
            (1u64 << self.degree) - 1
        };
        Ok(self.period(&seed)? == full)
    }
}

/// Bit-serial Fibonacci LFSR; an endless iterator over output bits.
#[derive(Debug, Clone)]
pub struct Lfsr {
    state: u64,
    mask: u64,
    top: u32,
}

impl Lfsr {
    pub fn new(spec: &LfsrSpec, seed: &[bool]) -> Result<Self> {
        spec.validate()?;
        if seed.len() != spec.degree as usize {
            return Err(Error::SeedLength {
                degree: spec.degree,
                got: seed.len(),
            });
        }
        let state = seed
            .iter()
            .enumerate()
            .fold(0u64, |s, (i, &b)| s | (b as u64) << i);
        if state == 0 {
            return Err(Error::DegenerateSeed);
        }
        Ok(Self {
            state,
            mask: spec.feedback_mask(),
            top: spec.degree - 1,
        })
    }

    /// Register contents, stage `i` in bit `i - 1`.
    pub fn state(&self) -> u64 {
        self.state
    }

    #[inline]
    pub fn step(&mut self) -> bool {
        let out = self.state & 1 == 1;
        let fb = (self.state & self.mask).count_ones() as u64 & 1;
        self.state = (self.state >> 1) | (fb << self.top);
        out
    }
}

impl Iterator for Lfsr {
    type Item = bool;

    fn next(&mut self) -> Option<bool> {
        Some(self.step())
    }
}

/// Expanded keystream K′ together with the material that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunningKey {
    pub bits: Vec<bool>,
    pub spec: LfsrSpec,
    pub seed: Vec<bool>,
}

impl RunningKey {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Bits packed MSB-first into bytes, hex encoded. The bit length is not
    /// part of the string; pair it with [`RunningKey::len`].
    pub fn to_hex(&self) -> String {
        bits_to_hex(&self.bits)
    }
}

/// First `length` output bits of the LFSR started at `seed`.
pub fn expand_key(spec: &LfsrSpec, seed: &[bool], length: usize) -> Result<RunningKey> {
    let bits = Lfsr::new(spec, seed)?.take(length).collect();
    Ok(RunningKey {
        bits,
        spec: spec.clone(),
        seed: seed.to_vec(),
    })
}

pub fn bits_to_hex(bits: &[bool]) -> String {
    let bytes: Vec<u8> = bits
        .chunks(8)
        .map(|c| {
            c.iter()
                .enumerate()
                .fold(0u8, |b, (i, &bit)| b | (bit as u8) << (7 - i))
        })
        .collect();
    hex::encode(bytes)
}

pub fn bits_from_hex(s: &str, len: usize) -> Result<Vec<bool>> {
    let bytes = hex::decode(s).map_err(|e| Error::Domain(alloc::format!("bad hex: {e}")))?;
    if bytes.len() * 8 < len {
        return Err(Error::Domain(alloc::format!(
            "hex holds {} bits, {len} requested",
            bytes.len() * 8
        )));
    }
    Ok((0..len)
        .map(|i| bytes[i / 8] >> (7 - i % 8) & 1 == 1)
        .collect())
}

/// Integer `value` as `width` bits, most significant first.
pub fn bits_of(value: u64, width: usize) -> Vec<bool> {
    (0..width).rev().map(|i| value >> i & 1 == 1).collect()
}

/// Big-endian bit string to integer.
pub fn bits_value(bits: &[bool]) -> u64 {
    bits.iter().fold(0u64, |v, &b| v << 1 | b as u64)
}

/// Basis selection (and optional polarity) for one transmitted symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolSelector {
    pub basis_index: usize,
    pub polarity: Option<bool>,
}

impl SymbolSelector {
    pub fn polarity_bit(&self) -> bool {
        self.polarity.unwrap_or(false)
    }

    /// The keystream bits this selector was decoded from.
    pub fn to_bits(&self, m: usize) -> Vec<bool> {
        let width = basis_bits(m).unwrap_or(0);
        let mut out = Vec::with_capacity(width + 1);
        if let Some(p) = self.polarity {
            out.push(p);
        }
        out.extend(bits_of(self.basis_index as u64, width));
        out
    }
}

/// log₂(M/2), rejecting constellations whose bases cannot be addressed by
/// whole keystream bits.
pub fn basis_bits(m: usize) -> Result<usize> {
    if m < 4 || m % 2 != 0 || !(m / 2).is_power_of_two() {
        return Err(Error::UnsupportedConstellation(m));
    }
    Ok((m / 2).trailing_zeros() as usize)
}

pub fn bits_per_symbol(m: usize, polarity: bool) -> Result<usize> {
    Ok(basis_bits(m)? + polarity as usize)
}

/// Split a keystream into consecutive selectors: polarity bit first (when
/// enabled), then log₂(M/2) basis bits, big-endian.
pub fn chunk_running_key(bits: &[bool], m: usize, polarity: bool) -> Result<Vec<SymbolSelector>> {
    let per = bits_per_symbol(m, polarity)?;
    if bits.len() % per != 0 {
        return Err(Error::LengthMismatch {
            len: bits.len(),
            per_symbol: per,
        });
    }
    Ok(bits.chunks(per).map(|c| decode_chunk(c, polarity)).collect())
}

fn decode_chunk(c: &[bool], polarity: bool) -> SymbolSelector {
    let (pol, basis) = if polarity {
        (Some(c[0]), &c[1..])
    } else {
        (None, c)
    };
    SymbolSelector {
        basis_index: bits_value(basis) as usize,
        polarity: pol,
    }
}

/// Lazily chunk any bit iterator into selectors.
pub struct Selectors<I> {
    bits: I,
    per: usize,
    polarity: bool,
    buf: Vec<bool>,
}

impl<I: Iterator<Item = bool>> Selectors<I> {
    pub fn new(bits: I, m: usize, polarity: bool) -> Result<Self> {
        let per = bits_per_symbol(m, polarity)?;
        Ok(Self {
            bits,
            per,
            polarity,
            buf: Vec::with_capacity(per),
        })
    }
}

impl<I: Iterator<Item = bool>> Iterator for Selectors<I> {
    type Item = SymbolSelector;

    fn next(&mut self) -> Option<SymbolSelector> {
        self.buf.clear();
        self.buf.extend(self.bits.by_ref().take(self.per));
        if self.buf.len() < self.per {
            return None;
        }
        Some(decode_chunk(&self.buf, self.polarity))
    }
}

/// Shortest LFSR found by Berlekamp–Massey.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearComplexity {
    pub linear_complexity: usize,
    /// Connection polynomial exponents `t ≥ 1` with nonzero coefficient.
    pub taps: Vec<u32>,
}

impl LinearComplexity {
    /// Continue the recurrence from the first `linear_complexity` bits of
    /// `prefix` out to `len` bits.
    pub fn regenerate(&self, prefix: &[bool], len: usize) -> Vec<bool> {
        let l = self.linear_complexity;
        let mut out: Vec<bool> = prefix.iter().copied().take(l.min(len)).collect();
        while out.len() < len {
            let n = out.len();
            let bit = self
                .taps
                .iter()
                .fold(false, |acc, &t| acc ^ out[n - t as usize]);
            out.push(bit);
        }
        out
    }

    /// As a generator spec, when the result is a proper LFSR of length ≥ 2.
    pub fn to_spec(&self) -> Option<LfsrSpec> {
        LfsrSpec::new(self.linear_complexity as u32, &self.taps).ok()
    }
}

/// Berlekamp–Massey over GF(2).
pub fn berlekamp_massey(bits: &[bool]) -> LinearComplexity {
    let n = bits.len();
    let mut c = alloc::vec![false; n + 1];
    let mut b = alloc::vec![false; n + 1];
    c[0] = true;
    b[0] = true;
    let mut l = 0usize;
    let mut shift = 1usize;
    for i in 0..n {
        let d = (1..=l).fold(bits[i], |acc, j| acc ^ (c[j] & bits[i - j]));
        if !d {
            shift += 1;
            continue;
        }
        let prev = c.clone();
        for j in 0..(n + 1).saturating_sub(shift) {
            if b[j] {
                c[j + shift] ^= true;
            }
        }
        if 2 * l <= i {
            l = i + 1 - l;
            b = prev;
            shift = 1;
        } else {
            shift += 1;
        }
    }
    let taps = (1..=l).filter(|&j| c[j]).map(|j| j as u32).collect();
    LinearComplexity {
        linear_complexity: l,
        taps,
    }
}
