//! Sequence aligners between a reference `C` and a dysfluent transcription `τ`.
//!
//! All indices crossing this module's boundary are 1-based.

mod csa;
mod downstream;
mod dtw;
mod gamma;
mod lcs;

pub use csa::{
    csa_backward, csa_forward, csa_grad, csa_loss, emission_matrix, CsaGradient, EmissionMatrix, LatticeTables,
    TransitionTable, DEFAULT_DELTA,
};
pub use downstream::{align_for_downstream, DownstreamItem, Embeddings};
pub use dtw::{dtw_align, dtw_align_symbols, unit_cost};
pub use gamma::{extract_gamma, extract_gamma_with, Attachment};
pub use lcs::{lcs_align, lcs_length};

use serde::ser::SerializeTuple;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlignError {
    #[error("empty sequence")]
    EmptySequence,
    #[error("alignment invariant violated: {0}")]
    InvariantViolation(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("discount must lie in (0, 1], got {0}")]
    BadDiscount(f64),
    #[error("transition probabilities must lie in (0, 1]")]
    BadTransition,
    #[error("invalid emission matrix: {0}")]
    BadEmission(String),
    /// 1-based cell.
    #[error("zero emission at ({0}, {1}) on a reachable cell")]
    ZeroEmission(usize, usize),
}

/// One aligned (τ index, reference index) pair, both 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MatchedPair {
    pub tau: usize,
    pub reference: usize,
}

impl MatchedPair {
    pub fn new(tau: usize, reference: usize) -> Self {
        MatchedPair { tau, reference }
    }
}

impl Serialize for MatchedPair {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut t = serializer.serialize_tuple(2)?;
        t.serialize_element(&self.tau)?;
        t.serialize_element(&self.reference)?;
        t.end()
    }
}

impl<'de> Deserialize<'de> for MatchedPair {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let (tau, reference) = <(usize, usize)>::deserialize(deserializer)?;
        Ok(MatchedPair { tau, reference })
    }
}

/// Pairs ordered by strictly increasing τ index and non-decreasing reference index.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatchedPairs(pub Vec<MatchedPair>);

impl MatchedPairs {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &MatchedPair> {
        self.0.iter()
    }

    /// Checks ordering and bounds against sequence lengths.
    pub fn check(&self, ref_len: usize, hyp_len: usize) -> Result<(), AlignError> {
        let mut prev: Option<MatchedPair> = None;
        for p in &self.0 {
            if p.tau == 0 || p.reference == 0 {
                return Err(AlignError::InvariantViolation("index 0 in a 1-based pair".into()));
            }
            if p.tau > hyp_len || p.reference > ref_len {
                return Err(AlignError::InvariantViolation(format!(
                    "pair ({}, {}) outside {}x{}",
                    p.tau, p.reference, hyp_len, ref_len
                )));
            }
            if let Some(q) = prev {
                if p.tau <= q.tau || p.reference < q.reference {
                    return Err(AlignError::InvariantViolation(format!(
                        "pairs out of order: ({}, {}) after ({}, {})",
                        p.tau, p.reference, q.tau, q.reference
                    )));
                }
            }
            prev = Some(*p);
        }
        Ok(())
    }

    /// True when the pairs are one-to-one (strictly increasing in both indices).
    pub fn is_one_to_one(&self) -> bool {
        self.0.windows(2).all(|w| w[1].reference > w[0].reference && w[1].tau > w[0].tau)
    }
}

/// A 1-based inclusive range of τ indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end < self.start
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }
}

impl Serialize for Span {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut t = serializer.serialize_tuple(2)?;
        t.serialize_element(&self.start)?;
        t.serialize_element(&self.end)?;
        t.end()
    }
}

impl<'de> Deserialize<'de> for Span {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let (start, end) = <(usize, usize)>::deserialize(deserializer)?;
        Ok(Span { start, end })
    }
}

/// γ: one optional span of τ per reference token, plus the pairs it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub spans: Vec<Option<Span>>,
    pub matched: MatchedPairs,
}

impl AlignmentResult {
    /// γ(C_i) for 1-based `i`.
    pub fn span(&self, ref_index: usize) -> Option<Span> {
        ref_index.checked_sub(1).and_then(|i| self.spans.get(i).copied().flatten())
    }

    /// Non-empty spans must be ordered, disjoint, and within `[1, hyp_len]`.
    pub fn check(&self, hyp_len: usize) -> Result<(), AlignError> {
        let mut last_end = 0;
        for s in self.spans.iter().flatten() {
            if s.start == 0 || s.start > s.end || s.end > hyp_len {
                return Err(AlignError::InvariantViolation(format!("bad span [{}, {}]", s.start, s.end)));
            }
            if s.start <= last_end {
                return Err(AlignError::InvariantViolation(format!(
                    "span [{}, {}] overlaps previous end {}",
                    s.start, s.end, last_end
                )));
            }
            last_end = s.end;
        }
        Ok(())
    }
}
