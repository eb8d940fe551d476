//! Dysfluency-aware phoneme alignment.
//!
//! - [`phoneme`], [`utterance`], [`corpus`]: domain types and JSONL corpora.
//! - [`align`]: LCS and DTW aligners, per-reference spans γ, and the
//!   differentiable connectionist subsequence aligner (CSA).
//! - [`gestural`]: convolutive matrix factorization and gestural-score kernels.
//! - [`simulate`]: rule-based dysfluency injection.
//! - [`detect`]: rule-based dysfluency classification over alignment spans.
//! - [`metrics`]: framewise F1, dPER, detection F1, matching score, scaling factors.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod align;
pub mod corpus;
pub mod detect;
pub mod gestural;
pub mod metrics;
pub mod phoneme;
pub mod simulate;
pub mod utterance;

pub use phoneme::{parse_phoneme_seq, Phoneme, PhonemeSeq};
pub use utterance::{AnnotatedUtterance, DysfluencyEvent, DysfluencyKind, TimedPhoneme, WordSpan};
