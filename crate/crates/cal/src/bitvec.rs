//! Sparse binary vectors and dense excitation buffers.
//!
//! Every activity pattern in the network — encoded sensor values, winning
//! mini-columns, cell and segment activity — is a [`SparseBitVector`]: a
//! declared bit length plus a strictly increasing list of active indices.
//! Dendrite excitations, which are real-valued, travel as
//! [`DenseExcitation`].

use std::fmt;
use std::str::FromStr;

use crate::error::{CalError, Result};

/// A binary vector stored as its sorted active indices.
///
/// Invariants: indices are strictly increasing, unique and all below
/// `length`. The type is immutable after construction and cheap to share.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SparseBitVector {
    length: usize,
    active: Vec<usize>,
}

impl SparseBitVector {
    /// All-zero vector of the given length.
    pub fn empty(length: usize) -> Self {
        Self {
            length,
            active: Vec::new(),
        }
    }

    /// Builds from indices that must already be strictly increasing.
    pub fn from_active(length: usize, active: Vec<usize>) -> Result<Self> {
        for pair in active.windows(2) {
            if pair[1] <= pair[0] {
                return Err(CalError::InvalidParameter(format!(
                    "active indices not strictly increasing: {} then {}",
                    pair[0], pair[1]
                )));
            }
        }
        if let Some(&last) = active.last() {
            if last >= length {
                return Err(CalError::IndexOutOfBounds {
                    index: last,
                    length,
                });
            }
        }
        Ok(Self { length, active })
    }

    /// Builds from indices in any order; duplicates collapse.
    pub fn from_unsorted(length: usize, mut active: Vec<usize>) -> Result<Self> {
        active.sort_unstable();
        active.dedup();
        Self::from_active(length, active)
    }

    pub fn len(&self) -> usize {
        self.length
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    /// Number of active bits ("pop-count").
    pub fn cardinality(&self) -> usize {
        self.active.len()
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn contains(&self, index: usize) -> bool {
        self.active.binary_search(&index).is_ok()
    }

    /// Count of active bits in the half-open index range `[start, end)`.
    pub fn count_in_range(&self, start: usize, end: usize) -> usize {
        let lo = self.active.partition_point(|&i| i < start);
        let hi = self.active.partition_point(|&i| i < end);
        hi - lo
    }

    /// Size of the intersection with another vector of the same length.
    pub fn overlap(&self, other: &Self) -> Result<usize> {
        self.check_len(other, "overlap")?;
        let mut count = 0;
        let (mut i, mut j) = (0, 0);
        while i < self.active.len() && j < other.active.len() {
            match self.active[i].cmp(&other.active[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    count += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        Ok(count)
    }

    /// Jaccard similarity `|a ∩ b| / |a ∪ b|`.
    ///
    /// Defined as 1.0 when both vectors are empty so that the persistence
    /// of a silent layer reads as "unchanged".
    pub fn jaccard(&self, other: &Self) -> Result<f64> {
        self.check_len(other, "jaccard")?;
        let inter = self.overlap(other)?;
        let union = self.cardinality() + other.cardinality() - inter;
        if union == 0 {
            Ok(1.0)
        } else {
            Ok(inter as f64 / union as f64)
        }
    }

    /// Logical OR with another vector of the same length.
    pub fn union(&self, other: &Self) -> Result<Self> {
        self.check_len(other, "union")?;
        let mut merged = Vec::with_capacity(self.active.len() + other.active.len());
        let (mut i, mut j) = (0, 0);
        while i < self.active.len() && j < other.active.len() {
            match self.active[i].cmp(&other.active[j]) {
                std::cmp::Ordering::Less => {
                    merged.push(self.active[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    merged.push(other.active[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    merged.push(self.active[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        merged.extend_from_slice(&self.active[i..]);
        merged.extend_from_slice(&other.active[j..]);
        Ok(Self {
            length: self.length,
            active: merged,
        })
    }

    /// Logical AND with another vector of the same length.
    pub fn intersect(&self, other: &Self) -> Result<Self> {
        self.check_len(other, "intersect")?;
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.active.len() && j < other.active.len() {
            match self.active[i].cmp(&other.active[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    out.push(self.active[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        Ok(Self {
            length: self.length,
            active: out,
        })
    }

    /// Bits active in `self` but not in `other`.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        self.check_len(other, "difference")?;
        let out = self
            .active
            .iter()
            .copied()
            .filter(|&i| !other.contains(i))
            .collect();
        Ok(Self {
            length: self.length,
            active: out,
        })
    }

    /// Extracts the window `[start, start + width)` as a standalone vector;
    /// indices shift down by `start`. Used to split concatenated channels.
    pub fn window(&self, start: usize, width: usize) -> Result<Self> {
        if start + width > self.length {
            return Err(CalError::IndexOutOfBounds {
                index: start + width,
                length: self.length,
            });
        }
        let lo = self.active.partition_point(|&i| i < start);
        let hi = self.active.partition_point(|&i| i < start + width);
        let active = self.active[lo..hi].iter().map(|&i| i - start).collect();
        Ok(Self {
            length: width,
            active,
        })
    }

    /// Splits the vector at the offsets defined by consecutive widths.
    /// Inverse of [`concat`] when the widths match the originals.
    pub fn split(&self, widths: &[usize]) -> Result<Vec<Self>> {
        let total: usize = widths.iter().sum();
        if total != self.length {
            return Err(CalError::LengthMismatch {
                context: "split",
                expected: self.length,
                got: total,
            });
        }
        let mut out = Vec::with_capacity(widths.len());
        let mut offset = 0;
        for &w in widths {
            out.push(self.window(offset, w)?);
            offset += w;
        }
        Ok(out)
    }

    fn check_len(&self, other: &Self, context: &'static str) -> Result<()> {
        if self.length != other.length {
            return Err(CalError::LengthMismatch {
                context,
                expected: self.length,
                got: other.length,
            });
        }
        Ok(())
    }
}

/// Concatenates vectors in order; indices are offset by the cumulative
/// lengths of the preceding vectors.
pub fn concat(vs: &[SparseBitVector]) -> Result<SparseBitVector> {
    if vs.is_empty() {
        return Err(CalError::EmptyInput("concat of zero vectors"));
    }
    let length = vs.iter().map(|v| v.len()).sum();
    let mut active = Vec::with_capacity(vs.iter().map(|v| v.cardinality()).sum());
    let mut offset = 0;
    for v in vs {
        active.extend(v.active().iter().map(|&i| i + offset));
        offset += v.len();
    }
    Ok(SparseBitVector { length, active })
}

/// Logical OR of equally sized vectors (temporal pooling).
pub fn union_window(vs: &[SparseBitVector]) -> Result<SparseBitVector> {
    let first = vs.first().ok_or(CalError::EmptyInput("union of zero vectors"))?;
    let mut acc = first.clone();
    for v in &vs[1..] {
        acc = acc.union(v)?;
    }
    Ok(acc)
}

impl fmt::Display for SparseBitVector {
    /// Stable textual form used in logs and golden tests:
    /// `len:N;idx:i1,i2,...`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "len:{};idx:", self.length)?;
        for (n, i) in self.active.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        Ok(())
    }
}

impl FromStr for SparseBitVector {
    type Err = CalError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |m: &str| CalError::Parse(format!("bad bit vector `{s}`: {m}"));
        let rest = s.strip_prefix("len:").ok_or_else(|| bad("missing len:"))?;
        let (len_str, idx_str) = rest
            .split_once(";idx:")
            .ok_or_else(|| bad("missing ;idx:"))?;
        let length: usize = len_str
            .parse()
            .map_err(|_| bad("length is not an integer"))?;
        let mut active = Vec::new();
        if !idx_str.is_empty() {
            for tok in idx_str.split(',') {
                active.push(tok.parse().map_err(|_| bad("index is not an integer"))?);
            }
        }
        Self::from_active(length, active)
    }
}

/// Real-valued excitation levels, one per dendrite or gain slot.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseExcitation {
    values: Vec<f64>,
}

impl DenseExcitation {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(CalError::EmptyInput("excitation of zero length"));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(CalError::InvalidParameter(format!(
                "non-finite excitation value {v}"
            )));
        }
        Ok(Self { values })
    }

    /// Uniform excitation of 1.0 — the neutral gain.
    pub fn ones(length: usize) -> Self {
        Self {
            values: vec![1.0; length],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, index: usize) -> f64 {
        self.values[index]
    }
}
