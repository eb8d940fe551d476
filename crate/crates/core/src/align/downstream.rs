use crate::phoneme::{Phoneme, PhonemeSeq};

use super::{extract_gamma, lcs_align, AlignError, AlignmentResult, Span};

/// Optional embeddings carried alongside the symbols.
#[derive(Debug, Clone, Copy)]
pub struct Embeddings<'a> {
    pub reference: &'a [Vec<f64>],
    pub tau: &'a [Vec<f64>],
}

/// One `(C_i, γ(C_i))` entry.
#[derive(Debug, Clone, PartialEq)]
pub struct DownstreamItem {
    /// 1-based.
    pub ref_index: usize,
    pub symbol: Phoneme,
    pub span: Option<Span>,
    pub span_symbols: Vec<Phoneme>,
    pub ref_embedding: Option<Vec<f64>>,
    pub span_embeddings: Vec<Vec<f64>>,
}

/// LCS on the symbols, γ extraction, then pairing each reference token with
/// its span tokens (and embeddings when supplied).
pub fn align_for_downstream(
    embeddings: Option<Embeddings<'_>>,
    reference: &PhonemeSeq,
    hyp: &PhonemeSeq,
) -> Result<(AlignmentResult, Vec<DownstreamItem>), AlignError> {
    if let Some(e) = embeddings {
        if e.reference.len() != reference.len() || e.tau.len() != hyp.len() {
            return Err(AlignError::DimensionMismatch(format!(
                "embeddings {}x{} for sequences {}x{}",
                e.reference.len(),
                e.tau.len(),
                reference.len(),
                hyp.len()
            )));
        }
    }
    let matched = lcs_align(reference.as_slice(), hyp.as_slice())?;
    let gamma = extract_gamma(&matched, reference.len(), hyp.len())?;
    let items = reference
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, &symbol)| {
            let span = gamma.spans[i];
            let idx: Vec<usize> = span.map(|s| s.indices().collect()).unwrap_or_default();
            DownstreamItem {
                ref_index: i + 1,
                symbol,
                span,
                span_symbols: idx.iter().map(|&t| hyp.as_slice()[t - 1]).collect(),
                ref_embedding: embeddings.map(|e| e.reference[i].clone()),
                span_embeddings: embeddings
                    .map(|e| idx.iter().map(|&t| e.tau[t - 1].clone()).collect())
                    .unwrap_or_default(),
            }
        })
        .collect();
    Ok((gamma, items))
}
