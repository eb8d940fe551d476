//! Framewise F1, dPER, detection F1 / matching score, and scaling factors.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::detect::sort_events;
use crate::phoneme::{Phoneme, PhonemeSeq};
use crate::utterance::{DysfluencyEvent, DysfluencyKind, TimedPhoneme};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("empty input")]
    EmptyInput,
    #[error("gold sequence is empty")]
    EmptyGold,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Slack absorbing floating-point error in the IoU threshold comparison.
const IOU_EPS: f64 = 1e-12;

/// One label per frame: the symbol covering most of the frame, or PAUSE
/// where uncovered time dominates.
pub fn rasterize(tokens: &[TimedPhoneme], frame_hz: f64, n_frames: usize) -> Vec<Phoneme> {
    let width = 1.0 / frame_hz;
    let mut cover: Vec<Vec<(Phoneme, f64)>> = vec![Vec::new(); n_frames];
    for t in tokens {
        let first = (t.start_s * frame_hz).floor().max(0.0) as usize;
        let last = ((t.end_s * frame_hz).ceil() as usize).min(n_frames);
        for (f, slot) in cover.iter_mut().enumerate().take(last).skip(first) {
            let lo = f as f64 * width;
            let overlap = t.end_s.min(lo + width) - t.start_s.max(lo);
            if overlap > 0.0 {
                match slot.iter_mut().find(|(p, _)| *p == t.phoneme) {
                    Some(e) => e.1 += overlap,
                    None => slot.push((t.phoneme, overlap)),
                }
            }
        }
    }
    cover
        .into_iter()
        .map(|slot| {
            let covered: f64 = slot.iter().map(|(_, o)| o).sum();
            let gap = width - covered;
            let best = slot.into_iter().fold(None::<(Phoneme, f64)>, |acc, (p, o)| match acc {
                Some((_, bo)) if bo >= o => acc,
                _ => Some((p, o)),
            });
            match best {
                Some((p, o)) if o >= gap => p,
                _ => Phoneme::PAUSE,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct FrameCounts {
    pub correct: usize,
    pub pred_frames: usize,
    pub gold_frames: usize,
}

impl FrameCounts {
    pub fn merge(&mut self, other: FrameCounts) {
        self.correct += other.correct;
        self.pred_frames += other.pred_frames;
        self.gold_frames += other.gold_frames;
    }

    /// Micro F1 over non-PAUSE frames; 1 when neither side has any.
    pub fn f1(&self) -> f64 {
        let denom = self.pred_frames + self.gold_frames;
        if denom == 0 {
            1.0
        } else {
            2.0 * self.correct as f64 / denom as f64
        }
    }
}

pub fn frame_counts(pred: &[TimedPhoneme], gold: &[TimedPhoneme], frame_hz: f64) -> Result<FrameCounts, MetricsError> {
    if pred.is_empty() || gold.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    if !(frame_hz > 0.0) || !frame_hz.is_finite() {
        return Err(MetricsError::InvalidParameter(format!("frame rate {frame_hz}")));
    }
    let end = pred.iter().chain(gold).map(|t| t.end_s).fold(0.0, f64::max);
    let n = (end * frame_hz - 1e-9).ceil().max(0.0) as usize;
    let (p, g) = (rasterize(pred, frame_hz, n), rasterize(gold, frame_hz, n));
    let mut c = FrameCounts::default();
    for (a, b) in p.iter().zip(&g) {
        c.pred_frames += usize::from(!a.is_pause());
        c.gold_frames += usize::from(!b.is_pause());
        c.correct += usize::from(!b.is_pause() && a == b);
    }
    Ok(c)
}

pub fn framewise_f1(pred: &[TimedPhoneme], gold: &[TimedPhoneme], frame_hz: f64) -> Result<f64, MetricsError> {
    Ok(frame_counts(pred, gold, frame_hz)?.f1())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EditWeights {
    pub substitution: f64,
    pub insertion: f64,
    pub deletion: f64,
}

impl Default for EditWeights {
    fn default() -> Self {
        EditWeights { substitution: 1.0, insertion: 1.0, deletion: 1.0 }
    }
}

/// Weighted Levenshtein distance turning `gold` into `pred`.
pub fn edit_cost(pred: &[Phoneme], gold: &[Phoneme], w: EditWeights) -> f64 {
    let mut prev: Vec<f64> = (0..=pred.len()).map(|j| j as f64 * w.insertion).collect();
    let mut cur = vec![0.0; pred.len() + 1];
    for (i, g) in gold.iter().enumerate() {
        cur[0] = (i + 1) as f64 * w.deletion;
        for (j, p) in pred.iter().enumerate() {
            let sub = prev[j] + if g == p { 0.0 } else { w.substitution };
            cur[j + 1] = sub.min(prev[j + 1] + w.deletion).min(cur[j] + w.insertion);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[pred.len()]
}

pub fn dper(pred: &PhonemeSeq, gold: &PhonemeSeq, w: EditWeights) -> Result<f64, MetricsError> {
    if gold.is_empty() {
        return Err(MetricsError::EmptyGold);
    }
    if [w.substitution, w.insertion, w.deletion].iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(MetricsError::InvalidParameter("edit weights must be nonnegative".into()));
    }
    Ok(edit_cost(pred.as_slice(), gold.as_slice(), w) / gold.len() as f64)
}

pub fn iou(a: &DysfluencyEvent, b: &DysfluencyEvent) -> f64 {
    let inter = (a.end_s.min(b.end_s) - a.start_s.max(b.start_s)).max(0.0);
    let union = a.end_s.max(b.end_s) - a.start_s.min(b.start_s);
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct KindCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl KindCounts {
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            1.0
        } else {
            2.0 * self.tp as f64 / denom as f64
        }
    }
}

/// Event-level scores, additive across utterances.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct DetectionScores {
    /// Gold events matched by a same-kind prediction with IoU at or above the threshold.
    pub detected: usize,
    pub gold_total: usize,
    pub pred_total: usize,
    pub detected_per_kind: BTreeMap<DysfluencyKind, usize>,
    /// Time-agnostic type-match counts.
    pub per_kind: BTreeMap<DysfluencyKind, KindCounts>,
}

impl DetectionScores {
    pub fn merge(&mut self, other: &DetectionScores) {
        self.detected += other.detected;
        self.gold_total += other.gold_total;
        self.pred_total += other.pred_total;
        for (k, v) in &other.detected_per_kind {
            *self.detected_per_kind.entry(*k).or_insert(0) += v;
        }
        for (k, v) in &other.per_kind {
            let e = self.per_kind.entry(*k).or_default();
            e.tp += v.tp;
            e.fp += v.fp;
            e.fn_ += v.fn_;
        }
    }

    /// Matching score: detected / gold events, 0 without gold events.
    pub fn ms(&self) -> f64 {
        if self.gold_total == 0 {
            0.0
        } else {
            self.detected as f64 / self.gold_total as f64
        }
    }

    pub fn f1_micro(&self) -> f64 {
        let total = self.per_kind.values().fold(KindCounts::default(), |acc, c| KindCounts {
            tp: acc.tp + c.tp,
            fp: acc.fp + c.fp,
            fn_: acc.fn_ + c.fn_,
        });
        total.f1()
    }

    /// Mean per-kind F1 over kinds seen in either list; 1 when none are.
    pub fn f1_macro(&self) -> f64 {
        if self.per_kind.is_empty() {
            return 1.0;
        }
        self.per_kind.values().map(KindCounts::f1).sum::<f64>() / self.per_kind.len() as f64
    }
}

/// Greedy one-to-one matching of same-kind pairs by descending IoU. Inputs
/// are put in canonical order first, so the result ignores list order.
pub fn detection_scores(
    pred: &[DysfluencyEvent],
    gold: &[DysfluencyEvent],
    iou_threshold: f64,
) -> Result<DetectionScores, MetricsError> {
    if !(0.0..=1.0).contains(&iou_threshold) {
        return Err(MetricsError::InvalidParameter(format!("IoU threshold {iou_threshold}")));
    }
    let (mut pred, mut gold) = (pred.to_vec(), gold.to_vec());
    sort_events(&mut pred);
    sort_events(&mut gold);

    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (gi, g) in gold.iter().enumerate() {
        for (pi, p) in pred.iter().enumerate() {
            if g.kind == p.kind {
                let v = iou(g, p);
                if v + IOU_EPS >= iou_threshold && v > 0.0 {
                    pairs.push((v, gi, pi));
                }
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let (mut g_used, mut p_used) = (vec![false; gold.len()], vec![false; pred.len()]);
    let mut scores = DetectionScores { gold_total: gold.len(), pred_total: pred.len(), ..Default::default() };
    for (_, gi, pi) in pairs {
        if !g_used[gi] && !p_used[pi] {
            g_used[gi] = true;
            p_used[pi] = true;
            scores.detected += 1;
            *scores.detected_per_kind.entry(gold[gi].kind).or_insert(0) += 1;
        }
    }

    let count = |events: &[DysfluencyEvent]| {
        let mut m: BTreeMap<DysfluencyKind, usize> = BTreeMap::new();
        for e in events {
            *m.entry(e.kind).or_insert(0) += 1;
        }
        m
    };
    let (pc, gc) = (count(&pred), count(&gold));
    for kind in pc.keys().chain(gc.keys()) {
        let (np, ng) = (*pc.get(kind).unwrap_or(&0), *gc.get(kind).unwrap_or(&0));
        let tp = np.min(ng);
        scores.per_kind.insert(*kind, KindCounts { tp, fp: np - tp, fn_: ng - tp });
    }
    Ok(scores)
}

/// `(c − b)·0.3 + (b − a)·0.4` for scores at 30%, 60% and 100% of the training data.
pub fn scaling_factor(a: f64, b: f64, c: f64) -> f64 {
    (c - b) * 0.3 + (b - a) * 0.4
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct EvalReport {
    pub framewise_f1: Option<f64>,
    pub dper: Option<f64>,
    pub detection: DetectionScores,
}

impl EvalReport {
    /// `(metric, kind, value)` rows; kind is empty for corpus-level values.
    pub fn rows(&self) -> Vec<(String, String, f64)> {
        let mut rows = Vec::new();
        if let Some(v) = self.framewise_f1 {
            rows.push(("framewise_f1".to_string(), String::new(), v));
        }
        if let Some(v) = self.dper {
            rows.push(("dper".to_string(), String::new(), v));
        }
        let d = &self.detection;
        rows.push(("detection_f1_micro".into(), String::new(), d.f1_micro()));
        rows.push(("detection_f1_macro".into(), String::new(), d.f1_macro()));
        rows.push(("ms".into(), String::new(), d.ms()));
        for (kind, c) in &d.per_kind {
            let k = kind.as_str().to_string();
            rows.push(("tp".into(), k.clone(), c.tp as f64));
            rows.push(("fp".into(), k.clone(), c.fp as f64));
            rows.push(("fn".into(), k.clone(), c.fn_ as f64));
            rows.push(("f1".into(), k.clone(), c.f1()));
            rows.push(("detected".into(), k, *d.detected_per_kind.get(kind).unwrap_or(&0) as f64));
        }
        rows
    }
}
