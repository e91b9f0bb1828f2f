use std::fmt;

use crate::error::{Error, Result};

/// Largest number of redundant channels a link may carry.
pub const MAX_CHANNELS: usize = 64;

/// A set of channel indices (zero-based internally).
///
/// Displayed one-based and `|`-joined, `-` when empty, e.g. `{0, 2}` → `1|3`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ChannelSet(u64);

impl ChannelSet {
    pub const EMPTY: Self = Self(0);

    /// `{0, …, n−1}`.
    pub fn all(n: usize) -> Self {
        assert!(n <= MAX_CHANNELS);
        if n == MAX_CHANNELS {
            Self(u64::MAX)
        } else {
            Self((1u64 << n) - 1)
        }
    }

    pub fn singleton(j: usize) -> Self {
        assert!(j < MAX_CHANNELS);
        Self(1u64 << j)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Result<Self> {
        let mut bits = 0u64;
        for j in indices {
            if j >= MAX_CHANNELS {
                return Err(Error::InvalidParameter(format!(
                    "channel index {j} exceeds the {MAX_CHANNELS}-channel limit"
                )));
            }
            bits |= 1u64 << j;
        }
        Ok(Self(bits))
    }

    /// Parses the one-based `1|3` form (`-` for empty).
    pub fn parse_one_based(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "-" || s.is_empty() {
            return Ok(Self::EMPTY);
        }
        let mut out = Vec::new();
        for tok in s.split(['|', ',']) {
            let j: usize = tok.trim().parse().map_err(|_| {
                Error::InvalidParameter(format!("bad channel index '{tok}' in '{s}'"))
            })?;
            if j == 0 {
                return Err(Error::InvalidParameter(format!(
                    "channel indices are one-based, got 0 in '{s}'"
                )));
            }
            out.push(j - 1);
        }
        Self::from_indices(out)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, j: usize) -> bool {
        j < MAX_CHANNELS && self.0 & (1u64 << j) != 0
    }

    pub fn insert(&mut self, j: usize) {
        assert!(j < MAX_CHANNELS);
        self.0 |= 1u64 << j;
    }

    pub fn union(self, other: Self) -> Self {
        Self(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        Self(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        Self(self.0 & !other.0)
    }

    pub fn is_subset_of(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// Smallest member.
    pub fn first(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    /// Largest member plus one (0 when empty).
    pub fn upper_bound(self) -> usize {
        MAX_CHANNELS - self.0.leading_zeros() as usize
    }

    /// Members in ascending order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let j = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(j)
            }
        })
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl fmt::Display for ChannelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("-");
        }
        for (n, j) in self.iter().enumerate() {
            if n > 0 {
                f.write_str("|")?;
            }
            write!(f, "{}", j + 1)?;
        }
        Ok(())
    }
}

impl fmt::Debug for ChannelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// All `k`-element subsets of `{0, …, n−1}` in lexicographic order of their
/// sorted index lists.
pub fn combinations(n: usize, k: usize) -> Combinations {
    Combinations {
        n,
        idx: (k <= n).then(|| (0..k).collect()),
    }
}

pub struct Combinations {
    n: usize,
    idx: Option<Vec<usize>>,
}

impl Iterator for Combinations {
    type Item = ChannelSet;

    fn next(&mut self) -> Option<ChannelSet> {
        let idx = self.idx.as_mut()?;
        let out = ChannelSet::from_indices(idx.iter().copied()).expect("index in range");
        let k = idx.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.idx = None;
                break;
            }
            i -= 1;
            if idx[i] < self.n - k + i {
                idx[i] += 1;
                for t in i + 1..k {
                    idx[t] = idx[t - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}
