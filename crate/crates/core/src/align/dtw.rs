use super::{AlignError, MatchedPair, MatchedPairs};

/// 0/1 symbol mismatch cost.
pub fn unit_cost<T: PartialEq>(a: &T, b: &T) -> f64 {
    if a == b {
        0.0
    } else {
        1.0
    }
}

/// DTW alignment with the default 0/1 symbol cost.
pub fn dtw_align_symbols<T: PartialEq>(reference: &[T], hyp: &[T]) -> Result<MatchedPairs, AlignError> {
    dtw_align(reference, hyp, unit_cost)
}

/// Dynamic time warping alignment of `hyp` (τ) onto `reference` (C).
///
/// The backtrace takes a diagonal step whenever the two symbols are equal,
/// otherwise follows the cheapest predecessor preferring up (drop reference),
/// then left (emit τ), then diagonal. When the reference is exhausted the
/// remaining τ tokens are flushed onto the first reference token. Every τ
/// index appears in exactly one pair.
pub fn dtw_align<T, F>(reference: &[T], hyp: &[T], dist: F) -> Result<MatchedPairs, AlignError>
where
    T: PartialEq,
    F: Fn(&T, &T) -> f64,
{
    if reference.is_empty() || hyp.is_empty() {
        return Err(AlignError::EmptySequence);
    }
    let (n, m) = (reference.len(), hyp.len());
    let mut cost = vec![vec![f64::INFINITY; m + 1]; n + 1];
    cost[0][0] = 0.0;
    for i in 1..=n {
        for j in 1..=m {
            let c = dist(&reference[i - 1], &hyp[j - 1]);
            cost[i][j] = c + cost[i - 1][j].min(cost[i][j - 1]).min(cost[i - 1][j - 1]);
        }
    }

    let mut out = Vec::with_capacity(m);
    let (mut i, mut j) = (n, m);
    while i > 0 && j > 0 {
        if reference[i - 1] == hyp[j - 1] {
            out.push(MatchedPair::new(j, i));
            i -= 1;
            j -= 1;
        } else {
            let up = cost[i - 1][j];
            let left = cost[i][j - 1];
            let diag = cost[i - 1][j - 1];
            let best = up.min(left).min(diag);
            if up == best {
                i -= 1;
            } else if left == best {
                out.push(MatchedPair::new(j, i));
                j -= 1;
            } else {
                out.push(MatchedPair::new(j, i));
                i -= 1;
                j -= 1;
            }
        }
        if i == 0 && j > 0 {
            while j > 0 {
                out.push(MatchedPair::new(j, 1));
                j -= 1;
            }
            break;
        }
        // When τ runs out first the first τ token has already been emitted;
        // it is not paired a second time with the first reference token.
        if i > 0 && j == 0 {
            break;
        }
    }
    out.reverse();
    Ok(MatchedPairs(out))
}
