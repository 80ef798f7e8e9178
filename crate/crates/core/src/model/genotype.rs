use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// Binary location decision: bit `j` is set when candidate site `j` is opened.
///
/// Equality and hashing are over the exact bit sequence, so genotypes can key
/// hash sets directly. Serialized as a `'0'`/`'1'` string, site 0 first.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Genotype {
    bits: FixedBitSet,
}

impl Genotype {
    pub fn zeros(len: usize) -> Self {
        Self {
            bits: FixedBitSet::with_capacity(len),
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut g = Self::zeros(bits.len());
        for (j, &b) in bits.iter().enumerate() {
            g.bits.set(j, b);
        }
        g
    }

    /// Bit `j` of `mask` becomes site `j`. Requires `len <= 64`.
    pub fn from_mask(len: usize, mask: u64) -> Self {
        debug_assert!(len <= 64);
        let mut g = Self::zeros(len);
        for j in 0..len {
            if mask >> j & 1 == 1 {
                g.bits.insert(j);
            }
        }
        g
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.len() == 0
    }

    #[inline]
    pub fn get(&self, j: usize) -> bool {
        self.bits.contains(j)
    }

    pub fn set(&mut self, j: usize, value: bool) {
        self.bits.set(j, value);
    }

    pub fn flip(&mut self, j: usize) {
        self.bits.toggle(j);
    }

    /// Copy with bit `j` flipped.
    pub fn flipped(&self, j: usize) -> Self {
        let mut g = self.clone();
        g.flip(j);
        g
    }

    /// Number of opened sites.
    pub fn count_ones(&self) -> usize {
        self.bits.count_ones(..)
    }

    /// Indices of opened sites in ascending order.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len()).map(|j| self.get(j)).collect()
    }

    /// Number of positions where the two genotypes differ. Panics on length mismatch.
    pub fn hamming(&self, other: &Genotype) -> usize {
        assert_eq!(self.len(), other.len(), "hamming distance needs equal lengths");
        self.bits.symmetric_difference_count(&other.bits)
    }

    /// True when every site open in `self` is also open in `other`.
    pub fn is_subset_of(&self, other: &Genotype) -> bool {
        self.bits.is_subset(&other.bits)
    }

    /// Lexicographic order over the bit sequence (site 0 first, `0 < 1`).
    pub fn lex_cmp(&self, other: &Genotype) -> Ordering {
        for j in 0..self.len().min(other.len()) {
            match (self.get(j), other.get(j)) {
                (false, true) => return Ordering::Less,
                (true, false) => return Ordering::Greater,
                _ => {}
            }
        }
        self.len().cmp(&other.len())
    }
}

impl fmt::Display for Genotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = (0..self.len())
            .map(|j| if self.get(j) { '1' } else { '0' })
            .collect();
        f.write_str(&s)
    }
}

impl fmt::Debug for Genotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Genotype({self})")
    }
}

impl FromStr for Genotype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut bits = Vec::with_capacity(s.len());
        for (k, c) in s.chars().enumerate() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                other => {
                    return Err(Error::Parse {
                        source_name: "genotype".into(),
                        message: format!("character {k} is {other:?}, expected '0' or '1'"),
                    })
                }
            }
        }
        Ok(Self::from_bools(&bits))
    }
}

impl Serialize for Genotype {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Genotype {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
