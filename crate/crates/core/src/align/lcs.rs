use super::{AlignError, MatchedPair, MatchedPairs};

/// Prefix LCS-length table, `(ref.len() + 1) x (hyp.len() + 1)`.
fn length_table<T: PartialEq>(reference: &[T], hyp: &[T]) -> Vec<Vec<usize>> {
    let mut lengths = vec![vec![0usize; hyp.len() + 1]; reference.len() + 1];
    for (i, r) in reference.iter().enumerate() {
        for (j, h) in hyp.iter().enumerate() {
            lengths[i + 1][j + 1] = if r == h { lengths[i][j] + 1 } else { lengths[i + 1][j].max(lengths[i][j + 1]) };
        }
    }
    lengths
}

pub fn lcs_length<T: PartialEq>(reference: &[T], hyp: &[T]) -> usize {
    length_table(reference, hyp)[reference.len()][hyp.len()]
}

/// Longest-common-subsequence alignment of `hyp` (τ) against `reference` (C).
///
/// The backtrace walks from the bottom-right corner and, on ties, first drops
/// the current reference token, then the current τ token, and only otherwise
/// takes the diagonal match. Only diagonal steps are returned, so the pairs
/// are one-to-one. With that preference each reference token binds to the
/// earliest τ occurrence compatible with the later matches.
pub fn lcs_align<T: PartialEq>(reference: &[T], hyp: &[T]) -> Result<MatchedPairs, AlignError> {
    if reference.is_empty() || hyp.is_empty() {
        return Err(AlignError::EmptySequence);
    }
    let lengths = length_table(reference, hyp);
    let (mut x, mut y) = (reference.len(), hyp.len());
    let mut pairs = Vec::with_capacity(lengths[x][y]);
    while x != 0 && y != 0 {
        if lengths[x][y] == lengths[x - 1][y] {
            x -= 1;
        } else if lengths[x][y] == lengths[x][y - 1] {
            y -= 1;
        } else {
            pairs.push(MatchedPair::new(y, x));
            x -= 1;
            y -= 1;
        }
    }
    pairs.reverse();
    Ok(MatchedPairs(pairs))
}
