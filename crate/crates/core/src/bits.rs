//! Bit-packed strings, most-significant bit first within each byte.

use std::fmt;
use std::ops::BitXorAssign;

use bitvec::prelude::*;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BitsError {
    #[error("{bits} bits need {expected} bytes, got {actual}")]
    ByteCount {
        bits: usize,
        expected: usize,
        actual: usize,
    },
    #[error("padding bits in the final byte are not zero")]
    DirtyPadding,
}

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString(BitVec<u8, Msb0>);

impl BitString {
    pub fn zeros(len: usize) -> Self {
        Self(bitvec![u8, Msb0; 0; len])
    }

    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        Self(bits.into_iter().collect())
    }

    /// Parses a string of `0`/`1` characters; anything else is skipped.
    pub fn from_bit_str(s: &str) -> Self {
        Self::from_bits(s.chars().filter_map(|c| match c {
            '0' => Some(false),
            '1' => Some(true),
            _ => None,
        }))
    }

    /// Lowest `len` bits of `value`, most significant first.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= 64);
        Self::from_bits((0..len).rev().map(|i| (value >> i) & 1 == 1))
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Self::from_bits((0..len).map(|_| rng.gen::<bool>()))
    }

    /// Rebuilds a string from its packed bytes. Padding bits must be zero so
    /// that every bit string has exactly one encoding.
    pub fn from_packed(bytes: &[u8], len: usize) -> Result<Self, BitsError> {
        let expected = len.div_ceil(8);
        if bytes.len() != expected {
            return Err(BitsError::ByteCount {
                bits: len,
                expected,
                actual: bytes.len(),
            });
        }
        let mut bv = BitVec::<u8, Msb0>::from_slice(bytes);
        if bv[len..].any() {
            return Err(BitsError::DirtyPadding);
        }
        bv.truncate(len);
        Ok(Self(bv))
    }

    /// Packed bytes with zeroed padding.
    pub fn to_packed(&self) -> Vec<u8> {
        let mut bv = self.0.clone();
        bv.set_uninitialized(false);
        bv.into_vec()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<bool> {
        self.0.get(index).map(|b| *b)
    }

    pub fn count_ones(&self) -> usize {
        self.0.count_ones()
    }

    pub fn slice(&self, offset: usize, len: usize) -> Self {
        Self::from_bits(self.0[offset..offset + len].iter().by_vals())
    }

    pub fn extend_from(&mut self, other: &BitString) {
        self.0.extend_from_bitslice(&other.0);
    }

    pub fn concat<'a, I: IntoIterator<Item = &'a BitString>>(parts: I) -> Self {
        let mut out = Self::new();
        for p in parts {
            out.extend_from(p);
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.0.iter().by_vals()
    }

    /// Value of a string of at most 64 bits.
    pub fn to_u64(&self) -> u64 {
        assert!(self.len() <= 64);
        self.iter().fold(0, |acc, b| (acc << 1) | b as u64)
    }
}

impl BitXorAssign<&BitString> for BitString {
    /// Panics if lengths differ.
    fn bitxor_assign(&mut self, rhs: &BitString) {
        assert_eq!(self.len(), rhs.len(), "xor of bit strings of different length");
        self.0 ^= rhs.0.as_bitslice();
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString(\"{self}\")")
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}
