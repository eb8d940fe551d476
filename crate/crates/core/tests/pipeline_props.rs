use std::io::Cursor;
use std::path::Path;

use dysalign_core::corpus::{read_corpus, write_corpus_to, CorpusReader};
use dysalign_core::detect::{detect_utterance, DetectorConfig};
use dysalign_core::metrics::{detection_scores, dper, EditWeights};
use dysalign_core::phoneme::{Phoneme, PhonemeSeq};
use dysalign_core::simulate::{build_corpus, CorpusPlan, SimulationConfig};
use dysalign_core::utterance::{validate_utterance, AnnotatedUtterance, DysfluencyEvent, DysfluencyKind};
use proptest::prelude::*;

fn base() -> Vec<AnnotatedUtterance> {
    read_corpus(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/fluent_base.jsonl")).unwrap()
}

fn phoneme() -> impl Strategy<Value = Phoneme> {
    (0usize..39).prop_map(|i| Phoneme::inventory().nth(i).unwrap())
}

fn event() -> impl Strategy<Value = DysfluencyEvent> {
    (prop::sample::select(DysfluencyKind::SIMULATED.to_vec()), 0.0f64..5.0, 0.05f64..2.0)
        .prop_map(|(k, s, d)| DysfluencyEvent::new(k, s, s + d, None))
}

fn words() -> impl Strategy<Value = Vec<(String, Vec<Phoneme>)>> {
    prop::collection::vec(prop::collection::vec(phoneme(), 1..6), 1..5)
        .prop_map(|ws| ws.into_iter().enumerate().map(|(i, p)| (format!("w{i}"), p)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn simulated_corpora_round_trip_and_validate(seed in any::<u64>()) {
        let corpus = build_corpus(&base(), &DysfluencyKind::SIMULATED, CorpusPlan::PerKind(2), &SimulationConfig::default(), seed)
            .unwrap();
        for u in &corpus.records {
            prop_assert!(validate_utterance(u).is_empty(), "{}: {:?}", u.id, validate_utterance(u));
            prop_assert_eq!(u.annotations.len(), 1);
        }
        let mut bytes = Vec::new();
        write_corpus_to(&mut bytes, &corpus.records).unwrap();
        let back: Vec<AnnotatedUtterance> = CorpusReader::new(Cursor::new(bytes)).collect::<Result<_, _>>().unwrap();
        prop_assert_eq!(back, corpus.records);
    }

    #[test]
    fn fluent_identity_yields_no_events(ws in words()) {
        let refs: Vec<(&str, &[Phoneme])> = ws.iter().map(|(w, p)| (w.as_str(), p.as_slice())).collect();
        let u = AnnotatedUtterance::fluent("u", &refs, 0.08);
        prop_assert_eq!(detect_utterance(&u, &DetectorConfig::default()).unwrap(), vec![]);
    }

    #[test]
    fn detection_is_symmetric(
        pred in prop::collection::vec(event(), 0..6),
        gold in prop::collection::vec(event(), 0..6),
    ) {
        let fwd = detection_scores(&pred, &gold, 0.5).unwrap();
        let back = detection_scores(&gold, &pred, 0.5).unwrap();
        prop_assert_eq!(fwd.detected, back.detected);
        prop_assert!((fwd.f1_micro() - back.f1_micro()).abs() < 1e-12);
        for (k, c) in &fwd.per_kind {
            let r = back.per_kind[k];
            prop_assert_eq!((c.tp, c.fp, c.fn_), (r.tp, r.fn_, r.fp));
        }
    }

    #[test]
    fn detection_is_monotone_in_threshold_and_order_free(
        pred in prop::collection::vec(event(), 0..6),
        gold in prop::collection::vec(event(), 0..6),
        lo in 0.0f64..1.0,
        hi in 0.0f64..1.0,
    ) {
        let (lo, hi) = (lo.min(hi), lo.max(hi));
        let loose = detection_scores(&pred, &gold, lo).unwrap();
        let strict = detection_scores(&pred, &gold, hi).unwrap();
        prop_assert!(strict.detected <= loose.detected);
        prop_assert!(loose.detected <= pred.len().min(gold.len()));
        prop_assert!((0.0..=1.0).contains(&loose.ms()));
        let mut rev = pred.clone();
        rev.reverse();
        prop_assert_eq!(detection_scores(&rev, &gold, lo).unwrap(), loose);
    }

    #[test]
    fn dper_is_bounded(
        pred in prop::collection::vec(phoneme(), 0..10),
        gold in prop::collection::vec(phoneme(), 1..10),
    ) {
        let v = dper(&PhonemeSeq(pred.clone()), &PhonemeSeq(gold.clone()), EditWeights::default()).unwrap();
        prop_assert!(v >= 0.0);
        prop_assert!(v <= pred.len().max(gold.len()) as f64 / gold.len() as f64);
        prop_assert_eq!(v == 0.0, pred == gold);
    }
}
