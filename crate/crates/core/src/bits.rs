//! Finite binary strings.

use std::fmt;
use std::ops::Index;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{KlbError, Result};

/// A finite binary string. Bit positions are 1-based in the public API
/// (`bit(1)` is the first bit), matching the `x(1) x(2) ...` convention.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new() -> Self {
        BitString(Vec::new())
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        BitString(bits)
    }

    pub fn zeros(len: usize) -> Self {
        BitString(vec![false; len])
    }

    /// The `len` low bits of `value`, most significant first.
    pub fn from_uint(value: u64, len: usize) -> Self {
        debug_assert!(len <= 64);
        BitString((0..len).rev().map(|i| (value >> i) & 1 == 1).collect())
    }

    /// Interprets the bits as an unsigned integer, most significant first.
    pub fn to_uint(&self) -> u64 {
        debug_assert!(self.0.len() <= 64);
        self.0.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    /// The `rank`-th string in shortlex order (`""`, `0`, `1`, `00`, ...).
    pub fn from_shortlex(rank: u64) -> Self {
        let len = 63 - (rank + 1).leading_zeros() as usize;
        BitString::from_uint(rank + 1 - (1u64 << len), len)
    }

    pub fn shortlex_rank(&self) -> u64 {
        (1u64 << self.len()) - 1 + self.to_uint()
    }

    /// Standard binary representation without leading zeros; `bin(0)` is empty.
    pub fn binary(n: u64) -> Self {
        let width = 64 - n.leading_zeros() as usize;
        BitString::from_uint(n, width)
    }

    /// All strings of length exactly `len`, in lexicographic order.
    pub fn all_of_len(len: usize) -> impl Iterator<Item = BitString> {
        (0..1u64 << len).map(move |v| BitString::from_uint(v, len))
    }

    /// All strings of length at most `max_len`, in shortlex order.
    pub fn all_up_to(max_len: usize) -> impl Iterator<Item = BitString> {
        (0..=max_len).flat_map(BitString::all_of_len)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// 1-based bit access.
    pub fn bit(&self, i: usize) -> bool {
        assert!(i >= 1 && i <= self.0.len(), "bit index {i} out of 1..={}", self.0.len());
        self.0[i - 1]
    }

    /// `x↾n`, defined iff `n <= len`.
    pub fn prefix(&self, n: usize) -> Result<BitString> {
        if n > self.0.len() {
            return Err(KlbError::HorizonExceeded {
                requested: n,
                horizon: self.0.len(),
            });
        }
        Ok(BitString(self.0[..n].to_vec()))
    }

    pub fn push(&mut self, b: bool) {
        self.0.push(b);
    }

    pub fn extend_from(&mut self, other: &BitString) {
        self.0.extend_from_slice(&other.0);
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        BitString(v)
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.0.iter().copied()
    }

    pub fn into_vec(self) -> Vec<bool> {
        self.0
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// Packs the bits MSB-first into bytes, zero-padding the last byte,
    /// and returns them as lowercase hex.
    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes_msb())
    }

    pub fn to_bytes_msb(&self) -> Vec<u8> {
        self.0
            .chunks(8)
            .map(|c| c.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | ((b as u8) << (7 - i))))
            .collect()
    }

    pub fn from_bytes_msb(bytes: &[u8], len: usize) -> Result<Self> {
        if len > bytes.len() * 8 {
            return Err(KlbError::Format(format!(
                "{} bytes cannot hold {len} bits",
                bytes.len()
            )));
        }
        Ok(BitString((0..len).map(|i| (bytes[i / 8] >> (7 - i % 8)) & 1 == 1).collect()))
    }
}

impl Index<usize> for BitString {
    type Output = bool;

    /// 0-based indexing for internal loops; see [`BitString::bit`] for 1-based access.
    fn index(&self, i: usize) -> &bool {
        &self.0[i]
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        BitString(iter.into_iter().collect())
    }
}

impl From<Vec<bool>> for BitString {
    fn from(v: Vec<bool>) -> Self {
        BitString(v)
    }
}

impl FromStr for BitString {
    type Err = KlbError;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(KlbError::Format(format!("not a bit: {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(BitString)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `ceil(log2(n + 1))`, the total log convention used for every log-sized allowance.
pub fn clog(n: usize) -> usize {
    (usize::BITS - n.leading_zeros()) as usize
}
