//! Template-matching dysfluency detection over per-reference spans γ.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::align::{extract_gamma, lcs_align, lcs_length, AlignError, AlignmentResult, MatchedPair, MatchedPairs};
use crate::phoneme::{Phoneme, PhonemeSeq};
use crate::utterance::{AnnotatedUtterance, DysfluencyEvent, DysfluencyKind, TimedPhoneme, WordSpan};

#[derive(Debug, Error, PartialEq)]
pub enum DetectError {
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("invalid detector config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Align(#[from] AlignError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExpectedDuration {
    Fixed(f64),
    /// Per-phoneme means with a fallback for unlisted symbols.
    Table {
        means: BTreeMap<Phoneme, f64>,
        fallback: f64,
    },
}

impl ExpectedDuration {
    pub fn of(&self, p: Phoneme) -> f64 {
        match self {
            ExpectedDuration::Fixed(d) => *d,
            ExpectedDuration::Table { means, fallback } => *means.get(&p).unwrap_or(fallback),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    pub filler_set: Vec<Phoneme>,
    pub block_min_s: f64,
    pub prolong_factor_min: f64,
    pub expected_dur: ExpectedDuration,
    /// Emit word-level repetition and missing-word events.
    pub word_level: bool,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            filler_set: vec![Phoneme::FILLER_UH],
            block_min_s: 0.5,
            prolong_factor_min: 5.0,
            expected_dur: ExpectedDuration::Fixed(0.08),
            word_level: true,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<(), DetectError> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        let durations_ok = match &self.expected_dur {
            ExpectedDuration::Fixed(d) => positive(*d),
            ExpectedDuration::Table { means, fallback } => positive(*fallback) && means.values().all(|&d| positive(d)),
        };
        if !positive(self.block_min_s) || !positive(self.prolong_factor_min) || !durations_ok {
            return Err(DetectError::InvalidConfig("thresholds must be positive".into()));
        }
        Ok(())
    }

    fn is_filler(&self, p: Phoneme) -> bool {
        self.filler_set.contains(&p)
    }
}

struct Ctx<'a> {
    reference: &'a [Phoneme],
    hyp: &'a [TimedPhoneme],
    alignment: &'a AlignmentResult,
    cfg: &'a DetectorConfig,
    /// τ tokens consumed by replacement pairing.
    claimed: BTreeSet<usize>,
}

/// Unclaimed non-pause, non-filler τ tokens strictly between `lo` and `hi`.
fn gap_tokens(
    hyp: &[TimedPhoneme],
    cfg: &DetectorConfig,
    lo: usize,
    hi: usize,
    claimed: &BTreeSet<usize>,
) -> Vec<usize> {
    (lo + 1..hi)
        .filter(|&t| {
            let p = hyp[t - 1].phoneme;
            !p.is_pause() && !cfg.is_filler(p) && !claimed.contains(&t)
        })
        .collect()
}

/// Pairs each run of unmatched reference tokens with equally many unmatched
/// τ tokens between the neighbouring matches. When the counts differ, a
/// match held by an identical neighbour of the run is moved across it and
/// the pairing retried, since either token could have been the one left
/// unmatched. Returns the pairing and whether any match moved.
fn pair_replacements(
    reference: &[Phoneme],
    hyp: &[TimedPhoneme],
    cfg: &DetectorConfig,
    matched_tau: &mut [Option<usize>],
    claimed: &mut BTreeSet<usize>,
) -> (BTreeMap<usize, usize>, bool) {
    let n = reference.len();
    let mut out = BTreeMap::new();
    let mut moved = false;
    let mut i = 1;
    while i <= n {
        if matched_tau[i - 1].is_some() {
            i += 1;
            continue;
        }
        let run_start = i;
        while i <= n && matched_tau[i - 1].is_none() {
            i += 1;
        }
        let run_end = i - 1;
        let bounds = |mt: &[Option<usize>], a: usize, b: usize| {
            let lo = (1..a).rev().find_map(|j| mt[j - 1]).unwrap_or(0);
            let hi = (b + 1..=n).find_map(|j| mt[j - 1]).unwrap_or(hyp.len() + 1);
            (lo, hi)
        };

        let mut attempt = |mt: &mut [Option<usize>], a: usize, b: usize| -> bool {
            let (lo, hi) = bounds(mt, a, b);
            let cands = gap_tokens(hyp, cfg, lo, hi, claimed);
            if cands.len() != b + 1 - a {
                return false;
            }
            for (r, &t) in (a..=b).zip(&cands) {
                out.insert(r, t);
                claimed.insert(t);
            }
            true
        };

        if attempt(matched_tau, run_start, run_end) {
            continue;
        }
        // slide the run left: the match of run_start-1 moves to run_end
        let mut trial = matched_tau.to_vec();
        let (mut a, mut b) = (run_start, run_end);
        let mut done = false;
        while a > 1 && trial[a - 2].is_some() && reference[a - 2] == reference[b - 1] {
            trial[b - 1] = trial[a - 2].take();
            a -= 1;
            b -= 1;
            if attempt(&mut trial, a, b) {
                done = true;
                break;
            }
        }
        if !done {
            trial = matched_tau.to_vec();
            let (mut a, mut b) = (run_start, run_end);
            while b < n && trial[b].is_some() && reference[b] == reference[a - 1] {
                trial[a - 1] = trial[b].take();
                a += 1;
                b += 1;
                if attempt(&mut trial, a, b) {
                    done = true;
                    break;
                }
            }
        }
        if done {
            matched_tau.copy_from_slice(&trial);
            moved = true;
        }
    }
    (out, moved)
}

/// Moves each unpaired run of unmatched reference tokens as far left as
/// identical neighbours allow. Deletions target word-final consonants and
/// non-initial syllables, so the earlier of two equivalent placements is
/// preferred.
/// Runs touching `frozen` stay put.
fn shift_gaps_left(
    reference: &[Phoneme],
    matched_tau: &mut [Option<usize>],
    replaced: &BTreeMap<usize, usize>,
    frozen: &BTreeSet<usize>,
) -> bool {
    let mut moved = false;
    let mut i = 1;
    while i <= reference.len() {
        if matched_tau[i - 1].is_some() || replaced.contains_key(&i) {
            i += 1;
            continue;
        }
        let (mut a, mut b) = (i, i);
        while b < reference.len() && matched_tau[b].is_none() && !replaced.contains_key(&(b + 1)) {
            b += 1;
        }
        let next = b + 1;
        if (a..=b).any(|r| frozen.contains(&r)) {
            i = next;
            continue;
        }
        while a > 1
            && matched_tau[a - 2].is_some()
            && !replaced.contains_key(&(a - 1))
            && reference[a - 2] == reference[b - 1]
        {
            matched_tau[b - 1] = matched_tau[a - 2].take();
            a -= 1;
            b -= 1;
            moved = true;
        }
        i = next;
    }
    moved
}

impl Ctx<'_> {
    fn tok(&self, t: usize) -> &TimedPhoneme {
        &self.hyp[t - 1]
    }

    fn interval(&self, taus: impl IntoIterator<Item = usize>) -> Option<(f64, f64)> {
        taus.into_iter().fold(None, |acc, t| {
            let tok = self.tok(t);
            Some(match acc {
                None => (tok.start_s, tok.end_s),
                Some((s, e)) => (f64::min(s, tok.start_s), f64::max(e, tok.end_s)),
            })
        })
    }

    /// Unclaimed τ indices of γ(C_i), 1-based `i`.
    fn span_taus(&self, i: usize) -> Vec<usize> {
        self.alignment.span(i).map(|s| s.indices().filter(|t| !self.claimed.contains(t)).collect()).unwrap_or_default()
    }

    /// Previous-start to next-end around the place where an unmatched
    /// reference token would sit in τ.
    fn gap_interval(&self, i: usize) -> Option<(f64, f64)> {
        let next = (i + 1..=self.reference.len()).find_map(|j| self.alignment.span(j).map(|s| s.start));
        let pos = next.unwrap_or(self.hyp.len() + 1);
        let prev = pos.checked_sub(1).filter(|&t| t >= 1);
        let next = Some(pos).filter(|&t| t <= self.hyp.len());
        match (prev, next) {
            (Some(p), Some(n)) => self.interval([p, n]),
            (Some(t), None) | (None, Some(t)) => self.interval([t]),
            (None, None) => None,
        }
    }

    fn long_pauses(&self, taus: &[usize]) -> Vec<usize> {
        taus.iter()
            .copied()
            .filter(|&t| {
                let tok = self.tok(t);
                tok.phoneme.is_pause() && tok.duration() >= self.cfg.block_min_s
            })
            .collect()
    }

    /// Highest-priority event for one reference token, plus a separate
    /// block event when a long pause rides along with a weaker finding.
    fn classify(&self, i: usize, replaced: Option<usize>) -> Vec<DysfluencyEvent> {
        use DysfluencyKind::*;
        let c = self.reference[i - 1];
        let taus = self.span_taus(i);
        let mut events = Vec::new();
        let ev = |kind, (s, e): (f64, f64)| DysfluencyEvent::new(kind, s, e, Some(i));

        if self.alignment.span(i).is_none() && replaced.is_none() {
            if let Some(iv) = self.gap_interval(i) {
                events.push(ev(MissingPhoneme, iv));
            }
            return events;
        }

        let hits: Vec<usize> = taus.iter().copied().filter(|&t| self.tok(t).phoneme == c).collect();
        let others: Vec<usize> = taus
            .iter()
            .copied()
            .filter(|&t| {
                let p = self.tok(t).phoneme;
                p != c && !p.is_pause()
            })
            .collect();
        let pauses = self.long_pauses(&taus);

        if hits.len() >= 2 {
            let iv = self.interval([hits[0], hits[hits.len() - 1]]).expect("hits");
            events.push(ev(RepetitionPhoneme, iv));
            return events;
        }

        let weaker = if let Some(t) = replaced {
            Some(ev(Replacement, self.interval([t]).expect("token")))
        } else if hits.is_empty() && others.len() == 1 {
            Some(ev(Replacement, self.interval(others.iter().copied()).expect("token")))
        } else if hits.len() == 1 && !others.is_empty() {
            let iv = self.interval(hits.iter().chain(&others).copied()).expect("tokens");
            Some(ev(Insertion, iv))
        } else {
            None
        };
        if let Some(w) = weaker {
            events.push(w);
            if let Some(iv) = self.interval(pauses) {
                events.push(DysfluencyEvent::new(Block, iv.0, iv.1, Some(i)));
            }
            return events;
        }
        if let Some(iv) = self.interval(pauses) {
            events.push(ev(Block, iv));
            return events;
        }
        if let Some(&t) = hits.first() {
            let tok = self.tok(t);
            if tok.duration() >= self.cfg.prolong_factor_min * self.cfg.expected_dur.of(c) {
                events.push(ev(Prolongation, (tok.start_s, tok.end_s)));
            }
        }
        events
    }

    /// The word, with pauses removed, spelled out whole at least twice.
    fn word_repetition(&self, w: &WordSpan) -> Option<DysfluencyEvent> {
        if w.len() < 2 {
            return None;
        }
        let taus: Vec<usize> =
            (w.start..=w.end).flat_map(|i| self.span_taus(i)).filter(|&t| !self.tok(t).phoneme.is_pause()).collect();
        let word = &self.reference[w.start - 1..w.end];
        let spoken: Vec<Phoneme> = taus.iter().map(|&t| self.tok(t).phoneme).collect();
        let repeated = spoken.len() >= 2 * word.len()
            && spoken.len().is_multiple_of(word.len())
            && spoken.chunks(word.len()).all(|ch| ch == word);
        if !repeated {
            return None;
        }
        let (s, e) = self.interval(taus)?;
        Some(DysfluencyEvent::new(DysfluencyKind::RepetitionWord, s, e, Some(w.start)))
    }
}

fn check_inputs(alignment: &AlignmentResult, reference: &PhonemeSeq, hyp: &[TimedPhoneme]) -> Result<(), DetectError> {
    if alignment.spans.len() != reference.len() {
        return Err(DetectError::LengthMismatch(format!(
            "{} spans for {} reference tokens",
            alignment.spans.len(),
            reference.len()
        )));
    }
    alignment.matched.check(reference.len(), hyp.len()).map_err(|e| DetectError::LengthMismatch(e.to_string()))?;
    alignment.check(hyp.len()).map_err(|e| DetectError::LengthMismatch(e.to_string()))?;
    Ok(())
}

fn run(
    alignment: &AlignmentResult,
    reference: &PhonemeSeq,
    hyp: &[TimedPhoneme],
    words: Option<&[WordSpan]>,
    dropped: &[usize],
    cfg: &DetectorConfig,
) -> Result<Vec<DysfluencyEvent>, DetectError> {
    cfg.validate()?;
    check_inputs(alignment, reference, hyp)?;
    let mut matched_tau = vec![None; reference.len()];
    for p in alignment.matched.iter() {
        matched_tau[p.reference - 1].get_or_insert(p.tau);
    }
    let mut claimed = BTreeSet::new();
    let (replaced, moved) = pair_replacements(reference.as_slice(), hyp, cfg, &mut matched_tau, &mut claimed);
    // whole words already absent are reported at word level and must not move
    let mut frozen = BTreeSet::new();
    if let (true, Some(words)) = (cfg.word_level, words) {
        for (wi, w) in words.iter().enumerate() {
            let absent = (w.start..=w.end).all(|i| matched_tau[i - 1].is_none() && !replaced.contains_key(&i));
            if dropped.contains(&wi) || absent {
                frozen.extend(w.start..=w.end);
            }
        }
    }
    let moved = shift_gaps_left(reference.as_slice(), &mut matched_tau, &replaced, &frozen) || moved;
    let rebuilt;
    let alignment = if moved {
        let pairs = matched_tau.iter().enumerate().filter_map(|(r, t)| t.map(|t| MatchedPair::new(t, r + 1))).collect();
        rebuilt = extract_gamma(&MatchedPairs(pairs), reference.len(), hyp.len())?;
        &rebuilt
    } else {
        alignment
    };
    let ctx = Ctx { reference: reference.as_slice(), hyp, alignment, cfg, claimed };

    let mut events = Vec::new();
    let mut covered = vec![false; reference.len() + 1];
    if let (true, Some(words)) = (cfg.word_level, words) {
        for (wi, w) in words.iter().enumerate() {
            let all_missing = (w.start..=w.end).all(|i| alignment.span(i).is_none() && !replaced.contains_key(&i));
            let event = if dropped.contains(&wi) || all_missing {
                ctx.gap_interval(w.end)
                    .map(|(s, e)| DysfluencyEvent::new(DysfluencyKind::MissingWord, s, e, Some(w.start)))
            } else {
                ctx.word_repetition(w)
            };
            if let Some(ev) = event {
                events.push(ev);
                covered[w.start..=w.end].iter_mut().for_each(|c| *c = true);
            }
        }
    }

    let word_of = |i: usize| words.and_then(|ws| ws.iter().position(|w| w.contains(i)));
    let mut last_missing: Option<(usize, Option<usize>)> = None;
    for (i, &done) in covered.iter().enumerate().skip(1) {
        if done {
            last_missing = None;
            continue;
        }
        for ev in ctx.classify(i, replaced.get(&i).copied()) {
            if ev.kind == DysfluencyKind::MissingPhoneme {
                // one event per run of missing tokens within a word
                if last_missing.is_some_and(|(j, w)| j + 1 == i && w == word_of(i)) {
                    last_missing = Some((i, word_of(i)));
                    continue;
                }
                last_missing = Some((i, word_of(i)));
            }
            events.push(ev);
        }
        if alignment.span(i).is_some() || replaced.contains_key(&i) {
            last_missing = None;
        }
    }
    sort_events(&mut events);
    Ok(events)
}

pub fn sort_events(events: &mut [DysfluencyEvent]) {
    events.sort_by(|a, b| {
        a.start_s
            .total_cmp(&b.start_s)
            .then(a.end_s.total_cmp(&b.end_s))
            .then(a.kind.cmp(&b.kind))
            .then(a.ref_index.cmp(&b.ref_index))
    });
}

/// Classifies each reference token from its span. `words` enables the
/// word-level kinds when `cfg.word_level` is set.
pub fn detect(
    alignment: &AlignmentResult,
    reference: &PhonemeSeq,
    hyp: &[TimedPhoneme],
    words: Option<&[WordSpan]>,
    cfg: &DetectorConfig,
) -> Result<Vec<DysfluencyEvent>, DetectError> {
    run(alignment, reference, hyp, words, &[], cfg)
}

/// Finds a word spoken whole two or more times in a row (pauses allowed
/// between copies) and keeps only the last copy, provided the earlier copies
/// add nothing to the LCS with the reference. Returns the surviving tokens
/// and one event per collapsed run.
fn collapse_word_repetitions(
    reference: &[Phoneme],
    hyp: &[TimedPhoneme],
    words: &[WordSpan],
) -> (Vec<TimedPhoneme>, Vec<DysfluencyEvent>) {
    let mut tokens = hyp.to_vec();
    let mut events = Vec::new();
    for w in words.iter().filter(|w| w.len() >= 2) {
        let word = &reference[w.start - 1..w.end];
        let mut p = 0;
        while p + word.len() <= tokens.len() {
            let copy_at = |q: usize| {
                tokens.get(q..q + word.len()).is_some_and(|s| s.iter().map(|t| t.phoneme).eq(word.iter().copied()))
            };
            if !copy_at(p) {
                p += 1;
                continue;
            }
            let mut last = p;
            loop {
                let mut q = last + word.len();
                while tokens.get(q).is_some_and(|t| t.phoneme.is_pause()) {
                    q += 1;
                }
                if copy_at(q) {
                    last = q;
                } else {
                    break;
                }
            }
            if last == p {
                p += 1;
                continue;
            }
            let syms = |ts: &[TimedPhoneme]| ts.iter().map(|t| t.phoneme).collect::<Vec<_>>();
            let mut collapsed = tokens[..p].to_vec();
            collapsed.extend_from_slice(&tokens[last..]);
            if lcs_length(reference, &syms(&collapsed)) == lcs_length(reference, &syms(&tokens)) {
                let (s, e) = (tokens[p].start_s, tokens[last + word.len() - 1].end_s);
                events.push(DysfluencyEvent::new(DysfluencyKind::RepetitionWord, s, e, Some(w.start)));
                tokens = collapsed;
            }
            p += word.len();
        }
    }
    (tokens, events)
}

/// Collapses whole-word repetitions, then aligns the reference to the rest
/// of the transcription with LCS. Words whose removal costs nothing in LCS
/// length are dropped before γ is extracted and reported as missing; the
/// remaining tokens go through [`detect`].
pub fn detect_utterance(u: &AnnotatedUtterance, cfg: &DetectorConfig) -> Result<Vec<DysfluencyEvent>, DetectError> {
    let reference = u.ref_phonemes.as_slice();
    let words = u.words();
    let (timed, mut events) = if cfg.word_level {
        collapse_word_repetitions(reference, &u.dys_phonemes, &words)
    } else {
        (u.dys_phonemes.clone(), Vec::new())
    };
    let hyp: Vec<Phoneme> = timed.iter().map(|t| t.phoneme).collect();
    let mut kept: Vec<usize> = (1..=reference.len()).collect();
    let mut dropped: Vec<usize> = Vec::new();

    let align_kept = |kept: &[usize]| -> Result<MatchedPairs, DetectError> {
        let sub: Vec<Phoneme> = kept.iter().map(|&i| reference[i - 1]).collect();
        let pairs = lcs_align(&sub, &hyp)?;
        Ok(MatchedPairs(pairs.iter().map(|p| MatchedPair::new(p.tau, kept[p.reference - 1])).collect()))
    };

    let mut matched = align_kept(&kept)?;
    if cfg.word_level && words.len() > 1 {
        loop {
            let is_matched: BTreeSet<usize> = matched.iter().map(|p| p.reference).collect();
            let sub: Vec<Phoneme> = kept.iter().map(|&i| reference[i - 1]).collect();
            let base = lcs_length(&sub, &hyp);
            let mut best: Option<(usize, usize)> = None;
            for (wi, w) in words.iter().enumerate() {
                if dropped.contains(&wi) || dropped.len() + 1 >= words.len() {
                    continue;
                }
                let unmatched = (w.start..=w.end).filter(|i| !is_matched.contains(i)).count();
                if unmatched == 0 {
                    continue;
                }
                let without: Vec<Phoneme> =
                    kept.iter().filter(|&&i| !w.contains(i)).map(|&i| reference[i - 1]).collect();
                if lcs_length(&without, &hyp) == base && best.is_none_or(|(_, u)| unmatched > u) {
                    best = Some((wi, unmatched));
                }
            }
            let Some((wi, _)) = best else { break };
            dropped.push(wi);
            kept.retain(|&i| !words[wi].contains(i));
            matched = align_kept(&kept)?;
        }
    }
    let alignment = extract_gamma(&matched, reference.len(), hyp.len())?;
    events.extend(run(&alignment, &u.ref_phonemes, &timed, Some(&words), &dropped, cfg)?);
    sort_events(&mut events);
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::align::Span;
    use crate::phoneme::parse_phoneme_seq;

    fn timed(text: &str) -> Vec<TimedPhoneme> {
        parse_phoneme_seq(text)
            .unwrap()
            .as_slice()
            .iter()
            .enumerate()
            .map(|(i, &p)| TimedPhoneme::new(p, i as f64 * 0.1, (i + 1) as f64 * 0.1))
            .collect()
    }

    fn detect_lcs(reference: &str, hyp: &[TimedPhoneme]) -> Vec<DysfluencyEvent> {
        let c = parse_phoneme_seq(reference).unwrap();
        let t: Vec<Phoneme> = hyp.iter().map(|t| t.phoneme).collect();
        let m = lcs_align(c.as_slice(), &t).unwrap();
        let g = extract_gamma(&m, c.len(), t.len()).unwrap();
        detect(&g, &c, hyp, None, &DetectorConfig::default()).unwrap()
    }

    fn kinds(events: &[DysfluencyEvent]) -> Vec<(DysfluencyKind, Option<usize>)> {
        events.iter().map(|e| (e.kind, e.ref_index)).collect()
    }

    #[test]
    fn worked_example_kinds() {
        let hyp = timed("FILLER-UH R EH S R EH ER AH AH ER AH N S IH IH Z");
        let events = detect_lcs("R EH F ER AH N S IH Z", &hyp);
        let k = kinds(&events);
        assert!(k.contains(&(DysfluencyKind::Insertion, Some(1))));
        assert!(k.contains(&(DysfluencyKind::RepetitionPhoneme, Some(2))));
        assert!(k.contains(&(DysfluencyKind::MissingPhoneme, Some(3))));
        assert!(k.contains(&(DysfluencyKind::RepetitionPhoneme, Some(5))));
        assert!(k.contains(&(DysfluencyKind::RepetitionPhoneme, Some(8))));
    }

    #[test]
    fn fluent_identity_has_no_events() {
        let hyp = timed("HH AH L OW W ER L D");
        assert!(detect_lcs("HH AH L OW W ER L D", &hyp).is_empty());
    }

    #[test]
    fn replacement_gap() {
        let hyp = timed("W AH N");
        let events = detect_lcs("R AH N", &hyp);
        assert_eq!(kinds(&events), vec![(DysfluencyKind::Replacement, Some(1))]);
        assert_eq!((events[0].start_s, events[0].end_s), (0.0, 0.1));
    }

    #[test]
    fn block_and_prolongation() {
        let mut hyp = timed("K AE T");
        let pause = TimedPhoneme::new(Phoneme::PAUSE, 0.2, 1.0);
        hyp.insert(2, pause);
        hyp[3] = TimedPhoneme::new(hyp[3].phoneme, 1.0, 1.1);
        let events = detect_lcs("K AE T", &hyp);
        assert_eq!(kinds(&events), vec![(DysfluencyKind::Block, Some(2))]);
        assert_eq!((events[0].start_s, events[0].end_s), (0.2, 1.0));

        let mut hyp = timed("K AE T");
        hyp[2].end_s = 0.2 + 0.5;
        let events = detect_lcs("K AE T", &hyp);
        assert_eq!(kinds(&events), vec![(DysfluencyKind::Prolongation, Some(3))]);
    }

    #[test]
    fn spec_rule_replacement_on_foreign_span() {
        let c = parse_phoneme_seq("R AH").unwrap();
        let hyp = timed("W AH");
        let g = AlignmentResult {
            spans: vec![Some(Span::new(1, 1)), Some(Span::new(2, 2))],
            matched: MatchedPairs(vec![MatchedPair::new(2, 2)]),
        };
        let events = detect(&g, &c, &hyp, None, &DetectorConfig::default()).unwrap();
        assert_eq!(kinds(&events), vec![(DysfluencyKind::Replacement, Some(1))]);
    }

    #[test]
    fn word_level_repetition_and_missing() {
        let words = [("the", "DH AH"), ("cat", "K AE T"), ("sat", "S AE T")];
        let parsed: Vec<(String, Vec<Phoneme>)> =
            words.iter().map(|(w, p)| (w.to_string(), parse_phoneme_seq(p).unwrap().0)).collect();
        let refs: Vec<(&str, &[Phoneme])> = parsed.iter().map(|(w, p)| (w.as_str(), p.as_slice())).collect();
        let mut u = AnnotatedUtterance::fluent("u", &refs, 0.1);

        u.dys_phonemes = timed("DH AH K AE T PAUSE K AE T S AE T");
        let k = kinds(&detect_utterance(&u, &DetectorConfig::default()).unwrap());
        assert_eq!(k, vec![(DysfluencyKind::RepetitionWord, Some(3))]);

        u.dys_phonemes = timed("DH AH S AE T");
        let events = detect_utterance(&u, &DetectorConfig::default()).unwrap();
        assert_eq!(kinds(&events), vec![(DysfluencyKind::MissingWord, Some(3))]);
        assert_eq!((events[0].start_s, events[0].end_s), (0.1, 0.30000000000000004));
    }

    #[test]
    fn missing_run_merges_within_word() {
        let hyp = timed("B AE");
        let k = kinds(&detect_lcs("B AE N AH", &hyp));
        assert_eq!(k, vec![(DysfluencyKind::MissingPhoneme, Some(3))]);
    }

    #[test]
    fn mismatched_lengths() {
        let c = parse_phoneme_seq("R AH").unwrap();
        let g = AlignmentResult { spans: vec![None], matched: MatchedPairs::default() };
        let r = detect(&g, &c, &timed("R"), None, &DetectorConfig::default());
        assert!(matches!(r, Err(DetectError::LengthMismatch(_))));
    }
}
