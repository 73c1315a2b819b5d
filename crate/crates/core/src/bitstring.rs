//! Fixed-length bitstrings, the OneMax objective and uniform crossover.
//!
//! Bits are packed little-endian into `u64` words: position `i` lives in bit
//! `i % 64` of word `i / 64`. Unused high bits of the last word are always
//! zero, so word-wise equality, hashing and popcounts are exact.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

const WORD: usize = 64;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    words: Vec<u64>,
    len: usize,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(WORD)],
            len,
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut v = Self {
            words: vec![u64::MAX; len.div_ceil(WORD)],
            len,
        };
        v.clear_tail();
        v
    }

    /// Uniformly random bitstring of the given length.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut v = Self {
            words: (0..len.div_ceil(WORD)).map(|_| rng.random()).collect(),
            len,
        };
        v.clear_tail();
        v
    }

    /// Uniformly random bitstring with exactly `ones` one-bits.
    pub fn random_with_ones<R: Rng + ?Sized>(len: usize, ones: usize, rng: &mut R) -> Self {
        assert!(ones <= len, "cannot place {ones} ones in {len} bits");
        let mut v = Self::zeros(len);
        for i in rand::seq::index::sample(rng, len, ones) {
            v.set(i, true);
        }
        v
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            v.set(i, b);
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn complement(&self) -> Self {
        let mut v = Self {
            words: self.words.iter().map(|w| !w).collect(),
            len: self.len,
        };
        v.clear_tail();
        v
    }

    pub fn hamming(&self, other: &Self) -> Result<usize> {
        check_len(self, other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum())
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    fn clear_tail(&mut self) {
        let rem = self.len % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

/// Lexicographic order over the bit sequence, position 0 first, `0 < 1`.
impl Ord for BitVector {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.words.iter().zip(&other.words) {
            let diff = a ^ b;
            if diff != 0 {
                let pos = diff.trailing_zeros();
                return if (a >> pos) & 1 == 0 {
                    Ordering::Less
                } else {
                    Ordering::Greater
                };
            }
        }
        self.len.cmp(&other.len)
    }
}

impl PartialOrd for BitVector {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

impl FromStr for BitVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidConfig(format!(
                    "bitstring may only contain 0 and 1, found {other:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_bools(&bits))
    }
}

/// Serialized as a `"0101"` string.
impl serde::Serialize for BitVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for BitVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn check_len(x: &BitVector, y: &BitVector) -> Result<()> {
    if x.len != y.len {
        return Err(Error::LengthMismatch {
            left: x.len,
            right: y.len,
        });
    }
    Ok(())
}

/// Number of positions on which `x` agrees with the target `z`.
pub fn onemax(x: &BitVector, z: &BitVector) -> Result<usize> {
    Ok(x.len - x.hamming(z)?)
}

/// Each output bit is taken from `x` or `y` with probability 1/2.
pub fn uniform_crossover<R: Rng + ?Sized>(
    x: &BitVector,
    y: &BitVector,
    rng: &mut R,
) -> Result<BitVector> {
    check_len(x, y)?;
    let mut child = BitVector {
        words: x
            .words
            .iter()
            .zip(&y.words)
            .map(|(a, b)| {
                let pick: u64 = rng.random();
                (a & pick) | (b & !pick)
            })
            .collect(),
        len: x.len,
    };
    child.clear_tail();
    Ok(child)
}
