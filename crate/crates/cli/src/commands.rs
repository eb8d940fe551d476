use std::collections::HashMap;
use std::str::FromStr;

use dysalign_core::align::{
    dtw_align_symbols, emission_matrix, extract_gamma, lcs_align, AlignError, LatticeTables, MatchedPairs, Span,
    TransitionTable,
};
use dysalign_core::corpus::{read_corpus, CorpusError};
use dysalign_core::detect::{detect_utterance, DetectError, DetectorConfig, ExpectedDuration};
use dysalign_core::gestural::matrix_io::{read_tensor, write_tensor, MatrixFormat};
use dysalign_core::gestural::{cnmf_fit, CnmfConfig, GesturalError};
use dysalign_core::metrics::{
    detection_scores, edit_cost, frame_counts, DetectionScores, EditWeights, EvalReport, FrameCounts,
};
use dysalign_core::phoneme::Phoneme;
use dysalign_core::simulate::{plan_slots, simulate_slot, CorpusPlan, CorpusStats, SimError, SimulationConfig};
use dysalign_core::utterance::{AnnotatedUtterance, DysfluencyEvent, DysfluencyKind, TimedPhoneme};
use ndarray::Ix2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::args::{Algo, AlignArgs, DetectArgs, EvalArgs, GestureFitArgs, SimulateArgs};
use crate::output::{create, finish, header, ordered_map, parse_value, record_lines, require_input, write_line};
use crate::CliError;

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::InvalidConfig(_) | SimError::Unsupported(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<AlignError> for CliError {
    fn from(e: AlignError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<DetectError> for CliError {
    fn from(e: DetectError) -> Self {
        match e {
            DetectError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<GesturalError> for CliError {
    fn from(e: GesturalError) -> Self {
        match e {
            GesturalError::BadConfig(_) => CliError::Usage(e.to_string()),
            GesturalError::Io(_) => CliError::Internal(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<String, CliError> {
    serde_json::to_string(v).map_err(|e| CliError::Internal(e.to_string()))
}

pub fn parse_kinds(list: &str) -> Result<Vec<DysfluencyKind>, CliError> {
    if list.trim() == "all" {
        return Ok(DysfluencyKind::SIMULATED.to_vec());
    }
    let mut kinds = Vec::new();
    for part in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let k = DysfluencyKind::from_str(part).map_err(CliError::Usage)?;
        if !kinds.contains(&k) {
            kinds.push(k);
        }
    }
    if kinds.is_empty() {
        return Err(CliError::Usage("--kinds is empty".into()));
    }
    Ok(kinds)
}

pub fn simulate(args: &SimulateArgs, seed: u64) -> Result<(), CliError> {
    let kinds = parse_kinds(&args.kinds)?;
    require_input(&args.input)?;
    let base = read_corpus(&args.input)?;
    let cfg = SimulationConfig::default();
    cfg.validate()?;
    if base.is_empty() {
        return Err(SimError::EmptyBase.into());
    }
    if let Some(&k) = kinds.iter().find(|k| !DysfluencyKind::SIMULATED.contains(k)) {
        return Err(SimError::Unsupported(k).into());
    }
    let plan = match (args.per_kind, args.auto) {
        (Some(n), _) => CorpusPlan::PerKind(n),
        (None, Some(n)) => CorpusPlan::Auto(n),
        (None, None) => CorpusPlan::Auto(base.len()),
    };
    let config = json!({
        "command": "simulate",
        "kinds": kinds.iter().map(|k| k.as_str()).collect::<Vec<_>>(),
        "plan": format!("{plan:?}"),
        "simulation": format!("{cfg:?}"),
    });
    let head = header(seed, &config).to_json_line();

    let slots = plan_slots(plan, &kinds);
    let results: Vec<Result<Option<AnnotatedUtterance>, SimError>> =
        slots.into_par_iter().map(|slot| simulate_slot(&base, &kinds, slot, &cfg, seed)).collect();

    let mut out = create(&args.out)?;
    write_line(&mut out, &head)?;
    let mut stats = CorpusStats::default();
    for r in results {
        match r? {
            Some(u) => {
                *stats.counts.entry(u.annotations[0].kind).or_insert(0) += 1;
                write_line(&mut out, &to_json(&u)?)?;
            }
            None => stats.skipped += 1,
        }
    }
    finish(out)?;
    if stats.skipped > 0 {
        log::warn!("{} records skipped without an eligible site", stats.skipped);
    }
    if let Some(path) = &args.stats {
        let mut w = create(path)?;
        write_line(&mut w, &format!("# {head}"))?;
        write_line(&mut w, stats.to_csv().trim_end())?;
        finish(w)?;
    }
    log::info!("simulated {} records", stats.total());
    Ok(())
}

/// A symbol sequence from a record field: a list of symbols, a list of
/// timed objects (`p` or `phoneme` key), or a space-separated string.
fn field_symbols(record: &Value, field: &str) -> Result<Vec<Phoneme>, String> {
    let parse = |s: &str| Phoneme::from_symbol(s).ok_or_else(|| format!("unknown phoneme {s:?} in {field}"));
    match record.get(field) {
        None => Err(format!("missing field {field}")),
        Some(Value::String(s)) => s.split_whitespace().map(parse).collect(),
        Some(Value::Array(items)) => items
            .iter()
            .map(|item| match item {
                Value::String(s) => parse(s),
                Value::Object(m) => match m.get("p").or_else(|| m.get("phoneme")) {
                    Some(Value::String(s)) => parse(s),
                    _ => Err(format!("{field}: object without a phoneme")),
                },
                _ => Err(format!("{field}: unexpected element {item}")),
            })
            .collect(),
        Some(_) => Err(format!("{field} is not a sequence")),
    }
}

fn field_vectors(record: &Value, field: &str) -> Result<Vec<Vec<f64>>, String> {
    Vec::<Vec<f64>>::deserialize(record.get(field).ok_or_else(|| format!("missing field {field}"))?)
        .map_err(|e| format!("{field}: {e}"))
}

fn one_hot(seq: &[Phoneme]) -> Vec<Vec<f64>> {
    let n = Phoneme::inventory().count();
    seq.iter()
        .map(|p| {
            let mut v = vec![0.0; n];
            v[p.id()] = 1.0;
            v
        })
        .collect()
}

/// Per-reference span covering every τ index paired with it.
fn pair_spans(matched: &MatchedPairs, ref_len: usize) -> Vec<Option<Span>> {
    let mut spans: Vec<Option<Span>> = vec![None; ref_len];
    for p in matched.iter() {
        let s = &mut spans[p.reference - 1];
        *s = Some(match *s {
            Some(sp) => Span::new(sp.start.min(p.tau), sp.end.max(p.tau)),
            None => Span::new(p.tau, p.tau),
        });
    }
    spans
}

#[derive(Serialize)]
struct AlignRecord {
    id: Value,
    spans: Vec<Option<Span>>,
    matched: MatchedPairs,
    loss: Option<f64>,
}

#[derive(Serialize)]
struct EventsRecord<'a> {
    id: &'a str,
    annotations: &'a [DysfluencyEvent],
}

fn align_record(args: &AlignArgs, line_no: usize, line: &str) -> Result<String, CliError> {
    let record = parse_value(line_no, line)?;
    let data = |m: String| CliError::Data(format!("line {line_no}: {m}"));
    let id = record.get("id").cloned().unwrap_or(Value::Null);
    let reference = field_symbols(&record, &args.ref_field).map_err(data)?;
    let hyp = field_symbols(&record, &args.hyp_field).map_err(data)?;
    let in_line = |e: AlignError| data(e.to_string());

    let (spans, matched, loss) = match args.algo {
        Algo::Lcs => {
            let m = lcs_align(&reference, &hyp).map_err(in_line)?;
            let g = extract_gamma(&m, reference.len(), hyp.len()).map_err(in_line)?;
            (g.spans, g.matched, None)
        }
        Algo::Dtw => {
            let m = dtw_align_symbols(&reference, &hyp).map_err(in_line)?;
            (pair_spans(&m, reference.len()), m, None)
        }
        Algo::Csa => {
            let (ref_emb, hyp_emb) = match (&args.ref_emb_field, &args.hyp_emb_field) {
                (Some(r), Some(h)) => {
                    (field_vectors(&record, r).map_err(data)?, field_vectors(&record, h).map_err(data)?)
                }
                _ => (one_hot(&reference), one_hot(&hyp)),
            };
            let y = emission_matrix(&hyp_emb, &ref_emb).map_err(in_line)?;
            let trans = TransitionTable::ones(reference.len());
            let loss =
                LatticeTables::compute(y.view(), &trans, args.delta).and_then(|t| t.loss(y.view())).map_err(in_line)?;
            let m = lcs_align(&reference, &hyp).map_err(in_line)?;
            let g = extract_gamma(&m, reference.len(), hyp.len()).map_err(in_line)?;
            (g.spans, g.matched, Some(loss))
        }
    };
    to_json(&AlignRecord { id, spans, matched, loss })
}

pub fn align(args: &AlignArgs, seed: u64) -> Result<(), CliError> {
    if !(args.delta > 0.0 && args.delta <= 1.0) {
        return Err(CliError::Usage(format!("--delta must be in (0, 1], got {}", args.delta)));
    }
    let lines = record_lines(&args.input)?;
    let config = json!({
        "command": "align",
        "algo": format!("{:?}", args.algo),
        "delta": args.delta,
        "ref_field": args.ref_field,
        "hyp_field": args.hyp_field,
        "emb_fields": [args.ref_emb_field, args.hyp_emb_field],
    });
    let mut out = create(&args.dump)?;
    write_line(&mut out, &header(seed, &config).to_json_line())?;
    ordered_map(lines, |(n, l)| align_record(args, n, &l), |s| write_line(&mut out, &s))?;
    finish(out)
}

pub fn detect(args: &DetectArgs, seed: u64) -> Result<(), CliError> {
    let cfg = DetectorConfig {
        block_min_s: args.block_min,
        prolong_factor_min: args.prolong_min,
        expected_dur: ExpectedDuration::Fixed(args.expected_dur),
        word_level: !args.no_word_level,
        ..DetectorConfig::default()
    };
    cfg.validate()?;
    let lines = record_lines(&args.input)?;
    let config = json!({ "command": "detect", "detector": format!("{cfg:?}") });
    let mut out = create(&args.out)?;
    write_line(&mut out, &header(seed, &config).to_json_line())?;
    ordered_map(
        lines,
        |(n, l)| {
            let u = dysalign_core::corpus::parse_record(&l, n)?;
            let events = detect_utterance(&u, &cfg).map_err(|e| CliError::Data(format!("{}: {e}", u.id)))?;
            to_json(&EventsRecord { id: &u.id, annotations: &events })
        },
        |s| write_line(&mut out, &s),
    )?;
    finish(out)
}

/// A predicted record: events, optionally with a predicted transcription.
#[derive(Debug, Deserialize)]
struct PredRecord {
    id: String,
    #[serde(default)]
    annotations: Vec<DysfluencyEvent>,
    #[serde(default)]
    dys_phonemes: Option<Vec<TimedPhoneme>>,
}

fn parse_weights(text: &str) -> Result<EditWeights, CliError> {
    let v: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Usage(format!("--dper-weights: {e}")))?;
    match v.as_slice() {
        &[substitution, insertion, deletion] if v.iter().all(|w| *w >= 0.0 && w.is_finite()) => {
            Ok(EditWeights { substitution, insertion, deletion })
        }
        _ => Err(CliError::Usage("--dper-weights needs three nonnegative numbers".into())),
    }
}

struct UtteranceScores {
    detection: DetectionScores,
    frames: Option<FrameCounts>,
    edits: Option<(f64, usize)>,
}

pub fn eval(args: &EvalArgs, seed: u64) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&args.iou) {
        return Err(CliError::Usage(format!("--iou must be in [0, 1], got {}", args.iou)));
    }
    if !(args.frame_hz > 0.0 && args.frame_hz.is_finite()) {
        return Err(CliError::Usage(format!("--frame-hz must be positive, got {}", args.frame_hz)));
    }
    let weights = parse_weights(&args.dper_weights)?;
    require_input(&args.gold)?;
    let gold = read_corpus(&args.gold)?;

    let mut preds: HashMap<String, PredRecord> = HashMap::new();
    for item in record_lines(&args.pred)? {
        let (n, line) = item?;
        let p: PredRecord = serde_json::from_str(&line).map_err(|e| CliError::Data(format!("line {n}: {e}")))?;
        if preds.insert(p.id.clone(), p).is_some() {
            return Err(CliError::Data(format!("line {n}: duplicate id")));
        }
    }
    let unknown = preds.keys().filter(|id| !gold.iter().any(|g| &g.id == *id)).count();
    if unknown > 0 {
        log::warn!("{unknown} predicted records have no gold counterpart");
    }

    let per_utt: Vec<Result<UtteranceScores, CliError>> = gold
        .par_iter()
        .map(|g| {
            let p = preds.get(&g.id);
            let empty = Vec::new();
            let events = p.map_or(&empty, |p| &p.annotations);
            let detection = detection_scores(events, &g.annotations, args.iou)
                .map_err(|e| CliError::Data(format!("{}: {e}", g.id)))?;
            let transcript = p.and_then(|p| p.dys_phonemes.as_ref());
            let frames = match transcript {
                Some(t) if !t.is_empty() && !g.dys_phonemes.is_empty() => Some(
                    frame_counts(t, &g.dys_phonemes, args.frame_hz)
                        .map_err(|e| CliError::Data(format!("{}: {e}", g.id)))?,
                ),
                _ => None,
            };
            let edits = transcript.filter(|_| !g.dys_phonemes.is_empty()).map(|t| {
                let pred: Vec<Phoneme> = t.iter().map(|x| x.phoneme).collect();
                let gold_seq = g.dys_seq();
                (edit_cost(&pred, gold_seq.as_slice(), weights), gold_seq.len())
            });
            Ok(UtteranceScores { detection, frames, edits })
        })
        .collect();

    let mut detection = DetectionScores::default();
    let mut frames: Option<FrameCounts> = None;
    let mut edits: Option<(f64, usize)> = None;
    for r in per_utt {
        let s = r?;
        detection.merge(&s.detection);
        if let Some(f) = s.frames {
            frames.get_or_insert_with(FrameCounts::default).merge(f);
        }
        if let Some((c, n)) = s.edits {
            let e = edits.get_or_insert((0.0, 0));
            e.0 += c;
            e.1 += n;
        }
    }
    let report = EvalReport {
        framewise_f1: frames.map(|f| f.f1()),
        dper: edits.filter(|e| e.1 > 0).map(|(c, n)| c / n as f64),
        detection,
    };

    let config = json!({
        "command": "eval",
        "iou": args.iou,
        "frame_hz": args.frame_hz,
        "dper_weights": [weights.substitution, weights.insertion, weights.deletion],
    });
    let mut w = create(&args.report)?;
    write_line(&mut w, &format!("# {}", header(seed, &config).to_json_line()))?;
    write_line(&mut w, "metric,kind,value")?;
    for (metric, kind, value) in report.rows() {
        write_line(&mut w, &format!("{metric},{kind},{value}"))?;
    }
    finish(w)?;
    println!(
        "{}",
        json!({
            "utterances": gold.len(),
            "detection_f1": report.detection.f1_micro(),
            "detection_f1_macro": report.detection.f1_macro(),
            "ms": report.detection.ms(),
            "framewise_f1": report.framewise_f1,
            "dper": report.dper,
        })
    );
    Ok(())
}

pub fn gesture_fit(args: &GestureFitArgs, seed: u64) -> Result<(), CliError> {
    require_input(&args.input)?;
    let x = read_tensor(&args.input)?
        .into_dimensionality::<Ix2>()
        .map_err(|_| CliError::Data("input must be a 2-D matrix".into()))?;
    let cfg = CnmfConfig {
        gestures: args.k,
        window: args.t_window,
        iters: args.iters,
        seed,
        restarts: args.restarts,
        ..CnmfConfig::default()
    };
    let fit = cnmf_fit(x.view(), &cfg)?;
    let config = json!({ "command": "gesture fit", "cnmf": format!("{cfg:?}") });
    let mut out = create(&args.out)?;
    write_line(&mut out, &header(seed, &config).to_json_line())?;
    let summary = json!({
        "channels": x.nrows(),
        "frames": x.ncols(),
        "gestures": args.k,
        "window": args.t_window,
        "iterations": fit.errors.len(),
        "final_error": fit.final_error(),
        "errors": fit.errors,
    });
    write_line(&mut out, &to_json(&summary)?)?;
    finish(out)?;
    if let Some(p) = &args.dict {
        write_tensor(p, &fit.dict.kernels().clone().into_dyn(), MatrixFormat::from_path(p))?;
    }
    if let Some(p) = &args.score {
        write_tensor(p, &fit.score.activations.clone().into_dyn(), MatrixFormat::from_path(p))?;
    }
    log::info!("cnmf final relative error {:.3e}", fit.final_error());
    Ok(())
}
