//! Text-space dysfluency injection.
//!
//! Each rule edits the timed transcription of a fluent utterance, shifts the
//! downstream tokens, and records one ground-truth event covering the edit.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::phoneme::Phoneme;
use crate::utterance::{AnnotatedUtterance, DysfluencyEvent, DysfluencyKind, TimedPhoneme, WordSpan, FRAME_HZ};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("no eligible site for {0}")]
    NoEligibleSite(DysfluencyKind),
    #[error("base corpus is empty")]
    EmptyBase,
    #[error("utterance {0:?} is not fluent: transcription differs from reference or has annotations")]
    NotFluent(String),
    #[error("utterance {0:?} has no phonemes")]
    EmptyUtterance(String),
    #[error("{0} cannot be simulated")]
    Unsupported(DysfluencyKind),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Process {
    Fronting,
    Stopping,
    Gliding,
    Deaffrication,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplacementRule {
    pub process: Process,
    pub from: Phoneme,
    pub to: Phoneme,
}

/// The default substitution table.
pub fn default_replacement_rules() -> Vec<ReplacementRule> {
    use Process::*;
    let table: [(Process, &str, &str); 12] = [
        (Fronting, "K", "T"),
        (Fronting, "G", "D"),
        (Stopping, "F", "P"),
        (Stopping, "V", "B"),
        (Stopping, "S", "T"),
        (Stopping, "Z", "D"),
        (Stopping, "TH", "T"),
        (Stopping, "DH", "D"),
        (Gliding, "R", "W"),
        (Gliding, "L", "W"),
        (Deaffrication, "CH", "SH"),
        (Deaffrication, "JH", "ZH"),
    ];
    table
        .iter()
        .map(|&(process, from, to)| ReplacementRule {
            process,
            from: Phoneme::from_symbol(from).expect("table symbol"),
            to: Phoneme::from_symbol(to).expect("table symbol"),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    /// Extra copies for repetitions, inclusive.
    pub rep_count: (usize, usize),
    pub pause_range_s: (f64, f64),
    pub block_range_s: (f64, f64),
    pub prolong_factor_range: (f64, f64),
    /// Token duration used when a base record carries no timings.
    pub base_phoneme_dur_s: f64,
    pub replacement_rules: Vec<ReplacementRule>,
    /// Attempts per output record before it is skipped.
    pub max_retries: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            rep_count: (2, 4),
            pause_range_s: (0.5, 2.0),
            block_range_s: (0.5, 2.0),
            prolong_factor_range: (10.0, 15.0),
            base_phoneme_dur_s: 0.08,
            replacement_rules: default_replacement_rules(),
            max_retries: 20,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidConfig(m.to_string()));
        let range_ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi;
        if self.rep_count.0 == 0 || self.rep_count.0 > self.rep_count.1 {
            return bad("rep_count must satisfy 1 <= lo <= hi");
        }
        if !range_ok(self.pause_range_s) || !range_ok(self.block_range_s) {
            return bad("pause ranges must satisfy 0 < lo <= hi");
        }
        if !range_ok(self.prolong_factor_range) || self.prolong_factor_range.0 < 1.0 {
            return bad("prolongation factors must satisfy 1 <= lo <= hi");
        }
        if !(self.base_phoneme_dur_s > 0.0) {
            return bad("base_phoneme_dur_s must be positive");
        }
        if self.replacement_rules.iter().any(|r| r.from == r.to || r.from.is_pause() || r.to.is_pause()) {
            return bad("replacement rules must map a phoneme to a different phoneme");
        }
        Ok(())
    }
}

/// Deterministic per-record stream derived from the corpus seed and a key.
pub fn derive_rng(seed: u64, key: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(key.as_bytes());
    let digest: [u8; 32] = h.finalize().into();
    ChaCha8Rng::from_seed(digest)
}

/// Syllable lengths for a word: the supplied boundaries, or one syllable per
/// vowel with a single-consonant onset taken from the preceding cluster.
pub fn syllables_of(word: &WordSpan, phones: &[Phoneme]) -> Vec<usize> {
    if let Some(s) = &word.syllables {
        return s.clone();
    }
    let nuclei: Vec<usize> = phones.iter().enumerate().filter(|(_, p)| p.is_vowel()).map(|(i, _)| i).collect();
    if nuclei.len() < 2 {
        return vec![phones.len()];
    }
    let mut starts = vec![0];
    for w in nuclei.windows(2) {
        let (prev, next) = (w[0], w[1]);
        let start = if next > prev + 1 && phones[next - 1].is_consonant() { next - 1 } else { next };
        starts.push(start);
    }
    starts.push(phones.len());
    starts.windows(2).map(|w| w[1] - w[0]).collect()
}

fn weak_syllables(word: &WordSpan, n_syl: usize) -> Vec<usize> {
    match &word.stressed {
        Some(flags) if flags.len() == n_syl => (1..n_syl).filter(|&s| !flags[s]).collect(),
        _ => (1..n_syl).collect(),
    }
}

fn frames_to_s(frames: u32) -> f64 {
    frames as f64 / FRAME_HZ
}

fn draw_pause<R: Rng + ?Sized>(range: (f64, f64), rng: &mut R) -> f64 {
    let lo = (range.0 * FRAME_HZ).ceil() as u32;
    let hi = (range.1 * FRAME_HZ).floor() as u32;
    if lo <= hi {
        frames_to_s(rng.random_range(lo..=hi))
    } else {
        rng.random_range(range.0..=range.1)
    }
}

/// Replaces tokens `a..b` with `new` (symbol, duration) laid out from the
/// start of token `a`; later tokens shift by the change in length. Returns
/// the new token list and the time interval of the inserted tokens.
fn splice(tokens: &[TimedPhoneme], a: usize, b: usize, new: &[(Phoneme, f64)]) -> (Vec<TimedPhoneme>, f64, f64) {
    let origin = match tokens.get(a) {
        Some(t) => t.start_s,
        None => tokens.last().map_or(0.0, |t| t.end_s),
    };
    let old_end = if b > a { tokens[b - 1].end_s } else { origin };
    let mut out: Vec<TimedPhoneme> = tokens[..a].to_vec();
    let mut cursor = origin;
    for &(p, d) in new {
        out.push(TimedPhoneme::new(p, cursor, cursor + d));
        cursor += d;
    }
    let shift = cursor - old_end;
    out.extend(tokens[b..].iter().map(|t| TimedPhoneme::new(t.phoneme, t.start_s + shift, t.end_s + shift)));
    (out, origin, cursor)
}

fn durations(tokens: &[TimedPhoneme]) -> Vec<(Phoneme, f64)> {
    tokens.iter().map(|t| (t.phoneme, t.duration())).collect()
}

/// Interval spanning the neighbours of a deletion at output position `pos`.
fn deletion_interval(tokens: &[TimedPhoneme], pos: usize) -> (f64, f64) {
    let prev = pos.checked_sub(1).and_then(|i| tokens.get(i));
    let next = tokens.get(pos);
    match (prev, next) {
        (Some(p), Some(n)) => (p.start_s, n.end_s),
        (Some(p), None) => (p.start_s, p.end_s),
        (None, Some(n)) => (n.start_s, n.end_s),
        (None, None) => (0.0, 0.0),
    }
}

fn prepare(u: &AnnotatedUtterance, cfg: &SimulationConfig) -> Result<Vec<TimedPhoneme>, SimError> {
    if u.ref_phonemes.is_empty() {
        return Err(SimError::EmptyUtterance(u.id.clone()));
    }
    if !u.annotations.is_empty() {
        return Err(SimError::NotFluent(u.id.clone()));
    }
    if u.dys_phonemes.is_empty() {
        let d = cfg.base_phoneme_dur_s;
        return Ok(u
            .ref_phonemes
            .as_slice()
            .iter()
            .enumerate()
            .map(|(i, &p)| TimedPhoneme::new(p, i as f64 * d, (i + 1) as f64 * d))
            .collect());
    }
    if u.dys_seq() != u.ref_phonemes {
        return Err(SimError::NotFluent(u.id.clone()));
    }
    Ok(u.dys_phonemes.clone())
}

/// Injects one dysfluency of `kind` into a fluent utterance.
pub fn inject<R: Rng + ?Sized>(
    u: &AnnotatedUtterance,
    kind: DysfluencyKind,
    cfg: &SimulationConfig,
    rng: &mut R,
) -> Result<AnnotatedUtterance, SimError> {
    let tokens = prepare(u, cfg)?;
    let phones = u.ref_phonemes.as_slice();
    let words = u.words();
    let no_site = || SimError::NoEligibleSite(kind);
    let word_phones = |w: &WordSpan| &phones[w.start - 1..w.end];

    // Token positions are 0-based here; reference indices in events are 1-based.
    let (out, start, end, ref_index) = match kind {
        DysfluencyKind::RepetitionPhoneme => {
            let sites: Vec<(usize, usize)> = words
                .iter()
                .flat_map(|w| {
                    let wp = word_phones(w);
                    let syl = syllables_of(w, wp);
                    let mut units = Vec::new();
                    if wp.len() >= 2 {
                        units.push(1);
                        if syl.len() >= 2 && syl[0] >= 2 {
                            units.push(syl[0]);
                        }
                    }
                    units.into_iter().filter(move |&m| !is_power_of(wp, m)).map(move |m| (w.start - 1, m))
                })
                .collect();
            let &(first, m) = sites.choose(rng).ok_or_else(no_site)?;
            let copies = rng.random_range(cfg.rep_count.0..=cfg.rep_count.1);
            let unit = durations(&tokens[first..first + m]);
            let mut new = Vec::new();
            for _ in 0..copies {
                new.extend_from_slice(&unit);
                new.push((Phoneme::PAUSE, draw_pause(cfg.pause_range_s, rng)));
            }
            new.extend_from_slice(&unit);
            let (out, s, e) = splice(&tokens, first, first + m, &new);
            (out, s, e, first + m)
        }
        DysfluencyKind::RepetitionWord => {
            let eligible: Vec<&WordSpan> = words.iter().filter(|w| w.len() >= 2).collect();
            let w = *eligible.choose(rng).ok_or_else(no_site)?;
            let copies = rng.random_range(cfg.rep_count.0..=cfg.rep_count.1);
            let (a, b) = (w.start - 1, w.end);
            let unit = durations(&tokens[a..b]);
            let mut new = Vec::new();
            for _ in 0..copies {
                new.extend_from_slice(&unit);
                new.push((Phoneme::PAUSE, draw_pause(cfg.pause_range_s, rng)));
            }
            new.extend_from_slice(&unit);
            let (out, s, e) = splice(&tokens, a, b, &new);
            (out, s, e, w.start)
        }
        DysfluencyKind::MissingPhoneme => {
            // (first token, count) of deletable runs
            let mut sites: Vec<(usize, usize)> = Vec::new();
            for w in words.iter().filter(|w| w.len() >= 2) {
                let wp = word_phones(w);
                let syl = syllables_of(w, wp);
                let mut offset = syl[0];
                let weak = weak_syllables(w, syl.len());
                for (s, &len) in syl.iter().enumerate().skip(1) {
                    if weak.contains(&s) {
                        sites.push((w.start - 1 + offset, len));
                    }
                    offset += len;
                }
                if wp[wp.len() - 1].is_consonant() {
                    let last = (w.end - 1, 1);
                    if !sites.contains(&last) {
                        sites.push(last);
                    }
                }
            }
            let &(a, n) = sites.choose(rng).ok_or_else(no_site)?;
            let (out, _, _) = splice(&tokens, a, a + n, &[]);
            let (s, e) = deletion_interval(&out, a);
            (out, s, e, a + 1)
        }
        DysfluencyKind::MissingWord => {
            if words.len() < 2 {
                return Err(no_site());
            }
            let w = words.choose(rng).ok_or_else(no_site)?;
            let a = w.start - 1;
            let (out, _, _) = splice(&tokens, a, w.end, &[]);
            let (s, e) = deletion_interval(&out, a);
            (out, s, e, w.start)
        }
        DysfluencyKind::Block => {
            if words.len() < 2 {
                return Err(no_site());
            }
            let w = &words[rng.random_range(0..words.len() - 1)];
            let pause = draw_pause(cfg.block_range_s, rng);
            let (out, s, e) = splice(&tokens, w.end, w.end, &[(Phoneme::PAUSE, pause)]);
            (out, s, e, w.end)
        }
        DysfluencyKind::Replacement => {
            let sites: Vec<(usize, Phoneme)> = phones
                .iter()
                .enumerate()
                .flat_map(|(i, &p)| cfg.replacement_rules.iter().filter(move |r| r.from == p).map(move |r| (i, r.to)))
                .filter(|&(i, to)| {
                    // a substitute equal to a neighbour reads as a repetition
                    let left = i.checked_sub(1).map(|j| phones[j]);
                    let right = phones.get(i + 1).copied();
                    left != Some(to) && right != Some(to)
                })
                .collect();
            let &(i, to) = sites.choose(rng).ok_or_else(no_site)?;
            let (out, s, e) = splice(&tokens, i, i + 1, &[(to, tokens[i].duration())]);
            (out, s, e, i + 1)
        }
        DysfluencyKind::Prolongation => {
            let i = rng.random_range(0..tokens.len());
            let orig = tokens[i].duration();
            let (lo, hi) = cfg.prolong_factor_range;
            let f_lo = (orig * lo * FRAME_HZ).ceil();
            let f_hi = (orig * hi * FRAME_HZ).floor();
            let dur = if f_lo <= f_hi {
                frames_to_s(rng.random_range(f_lo as u32..=f_hi as u32))
            } else {
                orig * rng.random_range(lo..=hi)
            };
            let (out, s, e) = splice(&tokens, i, i + 1, &[(tokens[i].phoneme, dur)]);
            (out, s, e, i + 1)
        }
        DysfluencyKind::Insertion => return Err(SimError::Unsupported(kind)),
    };

    let mut result = u.clone();
    result.dys_phonemes = out;
    result.annotations = vec![DysfluencyEvent::new(kind, start, end, Some(ref_index))];
    if result.ref_words.is_none() {
        result.ref_words = Some(words);
    }
    Ok(result)
}

/// True when `phones` is its own first `m` tokens repeated.
fn is_power_of(phones: &[Phoneme], m: usize) -> bool {
    phones.len().is_multiple_of(m) && phones.chunks(m).all(|c| c == &phones[..m])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusPlan {
    /// Exactly this many records per requested kind.
    PerKind(usize),
    /// This many records in total, each kind drawn uniformly.
    Auto(usize),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorpusStats {
    pub counts: BTreeMap<DysfluencyKind, usize>,
    pub skipped: usize,
}

impl CorpusStats {
    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn percent(&self, kind: DysfluencyKind) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            100.0 * *self.counts.get(&kind).unwrap_or(&0) as f64 / total as f64
        }
    }

    /// `kind,count,percent` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("kind,count,percent\n");
        for (&kind, &count) in &self.counts {
            let _ = writeln!(s, "{},{},{:.2}", kind, count, self.percent(kind));
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub records: Vec<AnnotatedUtterance>,
    pub stats: CorpusStats,
}

/// One output slot: which record number, and the kind if fixed in advance.
#[derive(Debug, Clone, Copy)]
pub struct Slot {
    pub index: usize,
    pub kind: Option<DysfluencyKind>,
}

pub fn plan_slots(plan: CorpusPlan, kinds: &[DysfluencyKind]) -> Vec<Slot> {
    match plan {
        CorpusPlan::PerKind(n) => kinds
            .iter()
            .flat_map(|&k| std::iter::repeat_n(k, n))
            .enumerate()
            .map(|(index, k)| Slot { index, kind: Some(k) })
            .collect(),
        CorpusPlan::Auto(n) => (0..n).map(|index| Slot { index, kind: None }).collect(),
    }
}

/// Produces one record for a slot, or `None` once retries run out.
pub fn simulate_slot(
    base: &[AnnotatedUtterance],
    kinds: &[DysfluencyKind],
    slot: Slot,
    cfg: &SimulationConfig,
    seed: u64,
) -> Result<Option<AnnotatedUtterance>, SimError> {
    if base.is_empty() {
        return Err(SimError::EmptyBase);
    }
    let mut rng = derive_rng(seed, &format!("record-{}", slot.index));
    let kind = match slot.kind {
        Some(k) => k,
        None => *kinds.choose(&mut rng).ok_or_else(|| SimError::InvalidConfig("no kinds requested".into()))?,
    };
    for _ in 0..cfg.max_retries.max(1) {
        let src = &base[rng.random_range(0..base.len())];
        match inject(src, kind, cfg, &mut rng) {
            Ok(mut u) => {
                u.id = format!("{}-{}-{:06}", src.id, kind.as_str(), slot.index);
                return Ok(Some(u));
            }
            Err(SimError::NoEligibleSite(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(None)
}

/// Builds a simulated corpus. Records that exhaust their retries are counted
/// in `stats.skipped`.
pub fn build_corpus(
    base: &[AnnotatedUtterance],
    kinds: &[DysfluencyKind],
    plan: CorpusPlan,
    cfg: &SimulationConfig,
    seed: u64,
) -> Result<Corpus, SimError> {
    if base.is_empty() {
        return Err(SimError::EmptyBase);
    }
    cfg.validate()?;
    if let Some(&k) = kinds.iter().find(|k| !DysfluencyKind::SIMULATED.contains(k)) {
        return Err(SimError::Unsupported(k));
    }
    let mut records = Vec::new();
    let mut stats = CorpusStats::default();
    for slot in plan_slots(plan, kinds) {
        match simulate_slot(base, kinds, slot, cfg, seed)? {
            Some(u) => {
                *stats.counts.entry(u.annotations[0].kind).or_insert(0) += 1;
                records.push(u);
            }
            None => stats.skipped += 1,
        }
    }
    if stats.skipped > 0 {
        log::warn!("{} records skipped after {} attempts without an eligible site", stats.skipped, cfg.max_retries);
    }
    Ok(Corpus { records, stats })
}
