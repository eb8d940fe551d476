use super::{AlignError, AlignmentResult, MatchedPairs, Span};

/// Where unmatched τ tokens between two matched reference tokens go.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Attachment {
    /// To the preceding matched reference token, e.g. γ(EH) = [EH, S, R, EH].
    #[default]
    Previous,
    /// To the following matched reference token.
    Next,
}

/// γ with the default [`Attachment::Previous`] rule.
pub fn extract_gamma(matched: &MatchedPairs, ref_len: usize, hyp_len: usize) -> Result<AlignmentResult, AlignError> {
    extract_gamma_with(matched, ref_len, hyp_len, Attachment::Previous)
}

/// Turns matched pairs into per-reference spans.
///
/// Matched reference tokens partition `1..=hyp_len` into consecutive spans.
/// Leading unmatched τ tokens go to the first matched reference token and
/// trailing ones to the last; the gaps in between follow `rule`. Reference
/// tokens without any pair get `None`.
pub fn extract_gamma_with(
    matched: &MatchedPairs,
    ref_len: usize,
    hyp_len: usize,
    rule: Attachment,
) -> Result<AlignmentResult, AlignError> {
    matched.check(ref_len, hyp_len)?;

    // (reference, first tau, last tau) per matched reference token, in order
    let mut groups: Vec<(usize, usize, usize)> = Vec::new();
    for p in matched.iter() {
        match groups.last_mut() {
            Some(g) if g.0 == p.reference => g.2 = p.tau,
            _ => groups.push((p.reference, p.tau, p.tau)),
        }
    }

    let mut spans = vec![None; ref_len];
    let n = groups.len();
    for (g, &(reference, first, last)) in groups.iter().enumerate() {
        let (start, end) = match rule {
            Attachment::Previous => {
                let start = if g == 0 { 1 } else { first };
                let end = if g + 1 == n { hyp_len } else { groups[g + 1].1 - 1 };
                (start, end)
            }
            Attachment::Next => {
                let start = if g == 0 { 1 } else { groups[g - 1].2 + 1 };
                let end = if g + 1 == n { hyp_len } else { last };
                (start, end)
            }
        };
        spans[reference - 1] = Some(Span::new(start, end));
    }

    let result = AlignmentResult { spans, matched: matched.clone() };
    result.check(hyp_len)?;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::align::MatchedPair;

    fn pairs(v: &[(usize, usize)]) -> MatchedPairs {
        MatchedPairs(v.iter().map(|&(t, r)| MatchedPair::new(t, r)).collect())
    }

    #[test]
    fn leading_token_attaches_to_first_match() {
        let g = extract_gamma(&pairs(&[(2, 1)]), 2, 2).unwrap();
        assert_eq!(g.spans, vec![Some(Span::new(1, 2)), None]);
    }

    #[test]
    fn previous_vs_next_rule() {
        // tau: a x y b, ref: a b ; x, y unmatched
        let m = pairs(&[(1, 1), (4, 2)]);
        let prev = extract_gamma_with(&m, 2, 4, Attachment::Previous).unwrap();
        assert_eq!(prev.spans, vec![Some(Span::new(1, 3)), Some(Span::new(4, 4))]);
        let next = extract_gamma_with(&m, 2, 4, Attachment::Next).unwrap();
        assert_eq!(next.spans, vec![Some(Span::new(1, 1)), Some(Span::new(2, 4))]);
    }

    #[test]
    fn no_matches_gives_all_empty() {
        let g = extract_gamma(&MatchedPairs::default(), 3, 2).unwrap();
        assert!(g.spans.iter().all(Option::is_none));
    }

    #[test]
    fn many_to_one_pairs_group() {
        let m = pairs(&[(1, 1), (2, 1), (3, 3), (4, 3)]);
        let g = extract_gamma(&m, 3, 5).unwrap();
        assert_eq!(g.spans, vec![Some(Span::new(1, 2)), None, Some(Span::new(3, 5))]);
    }

    #[test]
    fn malformed_input_rejected() {
        let m = pairs(&[(2, 2), (1, 1)]);
        assert!(matches!(extract_gamma(&m, 2, 2), Err(AlignError::InvariantViolation(_))));
    }
}
