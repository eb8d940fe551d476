//! Annotated utterances: timed transcriptions and ground-truth dysfluency events.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::phoneme::{Phoneme, PhonemeSeq};

/// Frame rate used for all time/frame conversions.
pub const FRAME_HZ: f64 = 50.0;

/// Slack for floating-point time comparisons.
pub(crate) const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedPhoneme {
    #[serde(rename = "p")]
    pub phoneme: Phoneme,
    #[serde(rename = "start")]
    pub start_s: f64,
    #[serde(rename = "end")]
    pub end_s: f64,
}

impl TimedPhoneme {
    pub fn new(phoneme: Phoneme, start_s: f64, end_s: f64) -> Self {
        TimedPhoneme { phoneme, start_s, end_s }
    }

    pub fn duration(&self) -> f64 {
        self.end_s - self.start_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DysfluencyKind {
    #[serde(rename = "rep_phoneme")]
    RepetitionPhoneme,
    #[serde(rename = "rep_word")]
    RepetitionWord,
    #[serde(rename = "missing_phoneme")]
    MissingPhoneme,
    #[serde(rename = "missing_word")]
    MissingWord,
    #[serde(rename = "block")]
    Block,
    #[serde(rename = "replacement")]
    Replacement,
    #[serde(rename = "prolongation")]
    Prolongation,
    #[serde(rename = "insertion")]
    Insertion,
}

impl DysfluencyKind {
    pub const ALL: [DysfluencyKind; 8] = [
        DysfluencyKind::RepetitionPhoneme,
        DysfluencyKind::RepetitionWord,
        DysfluencyKind::MissingPhoneme,
        DysfluencyKind::MissingWord,
        DysfluencyKind::Block,
        DysfluencyKind::Replacement,
        DysfluencyKind::Prolongation,
        DysfluencyKind::Insertion,
    ];

    /// The seven kinds the simulator injects (insertion only arises from fillers).
    pub const SIMULATED: [DysfluencyKind; 7] = [
        DysfluencyKind::RepetitionPhoneme,
        DysfluencyKind::RepetitionWord,
        DysfluencyKind::MissingPhoneme,
        DysfluencyKind::MissingWord,
        DysfluencyKind::Block,
        DysfluencyKind::Replacement,
        DysfluencyKind::Prolongation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DysfluencyKind::RepetitionPhoneme => "rep_phoneme",
            DysfluencyKind::RepetitionWord => "rep_word",
            DysfluencyKind::MissingPhoneme => "missing_phoneme",
            DysfluencyKind::MissingWord => "missing_word",
            DysfluencyKind::Block => "block",
            DysfluencyKind::Replacement => "replacement",
            DysfluencyKind::Prolongation => "prolongation",
            DysfluencyKind::Insertion => "insertion",
        }
    }

    pub fn is_word_level(self) -> bool {
        matches!(self, DysfluencyKind::RepetitionWord | DysfluencyKind::MissingWord)
    }
}

impl fmt::Display for DysfluencyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DysfluencyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DysfluencyKind::ALL
            .iter()
            .copied()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown dysfluency kind {s:?}"))
    }
}

/// A typed dysfluency with its time interval in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DysfluencyEvent {
    pub kind: DysfluencyKind,
    #[serde(rename = "start")]
    pub start_s: f64,
    #[serde(rename = "end")]
    pub end_s: f64,
    /// 1-based index into the reference phonemes.
    pub ref_index: Option<usize>,
}

impl DysfluencyEvent {
    pub fn new(kind: DysfluencyKind, start_s: f64, end_s: f64, ref_index: Option<usize>) -> Self {
        DysfluencyEvent { kind, start_s, end_s, ref_index }
    }

    pub fn duration(&self) -> f64 {
        self.end_s - self.start_s
    }
}

/// A reference word and the 1-based inclusive range of its phonemes in `ref_phonemes`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordSpan {
    pub word: String,
    pub start: usize,
    pub end: usize,
    /// Syllable lengths in phonemes; must sum to the word length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub syllables: Option<Vec<usize>>,
    /// Per-syllable stress flags, parallel to `syllables`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stressed: Option<Vec<bool>>,
}

impl WordSpan {
    pub fn new(word: impl Into<String>, start: usize, end: usize) -> Self {
        WordSpan { word: word.into(), start, end, syllables: None, stressed: None }
    }

    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end < self.start
    }

    pub fn contains(&self, ref_index: usize) -> bool {
        (self.start..=self.end).contains(&ref_index)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedUtterance {
    pub id: String,
    #[serde(default)]
    pub ref_text: String,
    pub ref_phonemes: PhonemeSeq,
    pub dys_phonemes: Vec<TimedPhoneme>,
    #[serde(default)]
    pub annotations: Vec<DysfluencyEvent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ref_words: Option<Vec<WordSpan>>,
}

impl AnnotatedUtterance {
    /// A fluent utterance whose transcription is the reference itself, laid out
    /// back to back at `phoneme_dur_s` per token.
    pub fn fluent(id: impl Into<String>, words: &[(&str, &[Phoneme])], phoneme_dur_s: f64) -> Self {
        let mut ref_tokens = Vec::new();
        let mut spans = Vec::new();
        for (word, phones) in words {
            let start = ref_tokens.len() + 1;
            ref_tokens.extend_from_slice(phones);
            spans.push(WordSpan::new(*word, start, ref_tokens.len()));
        }
        let dys = ref_tokens
            .iter()
            .enumerate()
            .map(|(i, p)| TimedPhoneme::new(*p, i as f64 * phoneme_dur_s, (i + 1) as f64 * phoneme_dur_s))
            .collect();
        AnnotatedUtterance {
            id: id.into(),
            ref_text: words.iter().map(|(w, _)| *w).collect::<Vec<_>>().join(" "),
            ref_phonemes: PhonemeSeq(ref_tokens),
            dys_phonemes: dys,
            annotations: Vec::new(),
            ref_words: Some(spans),
        }
    }

    pub fn dys_seq(&self) -> PhonemeSeq {
        PhonemeSeq(self.dys_phonemes.iter().map(|t| t.phoneme).collect())
    }

    /// End of the last transcribed phoneme, or 0 for an empty transcription.
    pub fn audio_end(&self) -> f64 {
        self.dys_phonemes.iter().map(|t| t.end_s).fold(0.0, f64::max)
    }

    /// Word spans, falling back to a single word covering the whole reference.
    pub fn words(&self) -> Vec<WordSpan> {
        match &self.ref_words {
            Some(w) => w.clone(),
            None if self.ref_phonemes.is_empty() => Vec::new(),
            None => vec![WordSpan::new(self.ref_text.clone(), 1, self.ref_phonemes.len())],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NegativeTime { index: usize },
    NonPositiveDuration { index: usize },
    UnsortedIntervals { index: usize },
    OverlappingIntervals { index: usize },
    BadAnnotationInterval { index: usize },
    AnnotationOutOfRange { index: usize },
    RefIndexOutOfRange { index: usize },
    BadWordSpan { index: usize },
}

/// Checks every type invariant; an empty result means the record is well formed.
/// Indices in the returned violations are 0-based positions in the offending list.
pub fn validate_utterance(u: &AnnotatedUtterance) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut overlap_reported = false;
    for (i, t) in u.dys_phonemes.iter().enumerate() {
        if t.start_s < 0.0 || !t.start_s.is_finite() {
            out.push(Violation::NegativeTime { index: i });
        }
        if !(t.end_s > t.start_s) {
            out.push(Violation::NonPositiveDuration { index: i });
        }
        if i > 0 {
            let prev = &u.dys_phonemes[i - 1];
            if t.start_s + TIME_EPS < prev.start_s {
                out.push(Violation::UnsortedIntervals { index: i });
            } else if t.start_s + TIME_EPS < prev.end_s && !overlap_reported {
                out.push(Violation::OverlappingIntervals { index: i });
                overlap_reported = true;
            }
        }
    }

    let audio_end = u.audio_end();
    for (i, a) in u.annotations.iter().enumerate() {
        if !(a.end_s > a.start_s) {
            out.push(Violation::BadAnnotationInterval { index: i });
        }
        if a.start_s < -TIME_EPS || a.end_s > audio_end + TIME_EPS {
            out.push(Violation::AnnotationOutOfRange { index: i });
        }
        if let Some(r) = a.ref_index {
            if r == 0 || r > u.ref_phonemes.len() {
                out.push(Violation::RefIndexOutOfRange { index: i });
            }
        }
    }

    if let Some(words) = &u.ref_words {
        let mut next_start = 1;
        for (i, w) in words.iter().enumerate() {
            let syl_ok =
                w.syllables.as_ref().is_none_or(|s| s.iter().all(|&n| n > 0) && s.iter().sum::<usize>() == w.len());
            let stress_ok = match (&w.syllables, &w.stressed) {
                (_, None) => true,
                (Some(s), Some(f)) => s.len() == f.len(),
                (None, Some(_)) => false,
            };
            if w.start < next_start || w.end < w.start || w.end > u.ref_phonemes.len() || !syl_ok || !stress_ok {
                out.push(Violation::BadWordSpan { index: i });
            } else {
                next_start = w.end + 1;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phoneme::parse_phoneme_seq;

    fn please() -> AnnotatedUtterance {
        let p = parse_phoneme_seq("P L IY Z").unwrap();
        AnnotatedUtterance::fluent("u1", &[("please", p.as_slice())], 0.08)
    }

    #[test]
    fn fluent_fixture_is_valid() {
        let u = please();
        assert!(validate_utterance(&u).is_empty());
        assert!((u.audio_end() - 0.32).abs() < 1e-12);
    }

    #[test]
    fn overlapping_intervals_flagged() {
        let mut u = please();
        u.dys_phonemes[1].start_s = 0.05;
        assert_eq!(validate_utterance(&u), vec![Violation::OverlappingIntervals { index: 1 }]);
    }

    #[test]
    fn annotation_past_end_flagged() {
        let mut u = please();
        u.annotations.push(DysfluencyEvent::new(DysfluencyKind::Block, 0.1, 0.5, None));
        assert_eq!(validate_utterance(&u), vec![Violation::AnnotationOutOfRange { index: 0 }]);
    }

    #[test]
    fn zero_ref_index_flagged() {
        let mut u = please();
        u.annotations.push(DysfluencyEvent::new(DysfluencyKind::Block, 0.1, 0.2, Some(0)));
        assert_eq!(validate_utterance(&u), vec![Violation::RefIndexOutOfRange { index: 0 }]);
    }

    #[test]
    fn word_span_checks() {
        let mut u = please();
        u.ref_words.as_mut().unwrap()[0].syllables = Some(vec![2, 1]);
        assert_eq!(validate_utterance(&u), vec![Violation::BadWordSpan { index: 0 }]);
        u.ref_words.as_mut().unwrap()[0].syllables = Some(vec![1, 3]);
        assert!(validate_utterance(&u).is_empty());
    }

    #[test]
    fn kind_strings_round_trip() {
        for k in DysfluencyKind::ALL {
            assert_eq!(k.as_str().parse::<DysfluencyKind>().unwrap(), k);
        }
    }
}
