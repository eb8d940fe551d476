//! Line-delimited JSON corpus files.
//!
//! One `AnnotatedUtterance` per line. A file may start with a header object
//! (`{"tool_version", "seed", "config_hash"}`); readers skip it.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::utterance::AnnotatedUtterance;

#[derive(Debug, Error)]
pub enum CorpusError {
    /// `line` is 1-based.
    #[error("line {line}: {reason}")]
    SchemaViolation { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Provenance header written as the first line of generated files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileHeader {
    pub tool_version: String,
    pub seed: u64,
    pub config_hash: String,
}

impl FileHeader {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("header serializes")
    }
}

/// True if `line` is a provenance header rather than a record.
pub fn is_header_line(line: &str) -> bool {
    match serde_json::from_str::<serde_json::Value>(line) {
        Ok(serde_json::Value::Object(map)) => map.contains_key("tool_version") && !map.contains_key("id"),
        _ => false,
    }
}

/// Parse one record line and check per-item invariants.
pub fn parse_record(line: &str, line_no: usize) -> Result<AnnotatedUtterance, CorpusError> {
    let violation = |reason: String| CorpusError::SchemaViolation { line: line_no, reason };
    let u: AnnotatedUtterance = serde_json::from_str(line).map_err(|e| violation(e.to_string()))?;
    for (i, t) in u.dys_phonemes.iter().enumerate() {
        if !t.start_s.is_finite() || !t.end_s.is_finite() || t.start_s < 0.0 {
            return Err(violation(format!("dys_phonemes[{i}]: invalid time")));
        }
        if t.end_s <= t.start_s {
            return Err(violation(format!("dys_phonemes[{i}]: end {} <= start {}", t.end_s, t.start_s)));
        }
    }
    for (i, a) in u.annotations.iter().enumerate() {
        if !a.start_s.is_finite() || !a.end_s.is_finite() {
            return Err(violation(format!("annotations[{i}]: invalid time")));
        }
        if a.end_s <= a.start_s {
            return Err(violation(format!("annotations[{i}]: end {} <= start {}", a.end_s, a.start_s)));
        }
        if a.ref_index == Some(0) {
            return Err(violation(format!("annotations[{i}]: ref_index is 1-based")));
        }
    }
    Ok(u)
}

/// Streaming reader over a corpus. Blank lines and headers are skipped.
pub struct CorpusReader<R> {
    lines: io::Lines<R>,
    line_no: usize,
}

impl<R: BufRead> CorpusReader<R> {
    pub fn new(reader: R) -> Self {
        CorpusReader { lines: reader.lines(), line_no: 0 }
    }
}

impl<R: BufRead> Iterator for CorpusReader<R> {
    type Item = Result<AnnotatedUtterance, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(e.into())),
            };
            self.line_no += 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || is_header_line(trimmed) {
                continue;
            }
            return Some(parse_record(trimmed, self.line_no));
        }
    }
}

pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<AnnotatedUtterance>, CorpusError> {
    let file = File::open(path)?;
    CorpusReader::new(BufReader::new(file)).collect()
}

pub fn write_record<W: Write>(mut w: W, u: &AnnotatedUtterance) -> io::Result<()> {
    serde_json::to_writer(&mut w, u)?;
    w.write_all(b"\n")
}

pub fn write_corpus_to<W: Write>(mut w: W, utterances: &[AnnotatedUtterance]) -> io::Result<()> {
    for u in utterances {
        write_record(&mut w, u)?;
    }
    w.flush()
}

pub fn write_corpus(utterances: &[AnnotatedUtterance], path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let file = File::create(path)?;
    write_corpus_to(BufWriter::new(file), utterances)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phoneme::parse_phoneme_seq;
    use crate::utterance::{DysfluencyEvent, DysfluencyKind};

    fn sample() -> AnnotatedUtterance {
        let p = parse_phoneme_seq("P L IY Z").unwrap();
        let mut u = AnnotatedUtterance::fluent("u1", &[("please", p.as_slice())], 0.08);
        u.annotations.push(DysfluencyEvent::new(DysfluencyKind::Prolongation, 0.08, 0.16, Some(2)));
        u
    }

    #[test]
    fn write_then_read() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let u = sample();
        write_corpus(std::slice::from_ref(&u), &path).unwrap();
        assert_eq!(read_corpus(&path).unwrap(), vec![u]);
    }

    #[test]
    fn reversed_interval_is_schema_violation() {
        let line = r#"{"id":"x","ref_text":"a","ref_phonemes":["AH"],"dys_phonemes":[{"p":"AH","start":0.5,"end":0.5}],"annotations":[]}"#;
        match parse_record(line, 4) {
            Err(CorpusError::SchemaViolation { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected schema violation, got {other:?}"),
        }
    }

    #[test]
    fn unknown_symbol_and_kind_rejected() {
        let bad_sym = r#"{"id":"x","ref_phonemes":["QX"],"dys_phonemes":[],"annotations":[]}"#;
        assert!(parse_record(bad_sym, 1).is_err());
        let bad_kind = r#"{"id":"x","ref_phonemes":["AH"],"dys_phonemes":[],"annotations":[{"kind":"stutter","start":0,"end":1,"ref_index":null}]}"#;
        assert!(parse_record(bad_kind, 1).is_err());
    }

    #[test]
    fn header_lines_skipped() {
        let header = FileHeader { tool_version: "0.1.0".into(), seed: 7, config_hash: "abc".into() };
        let mut buf = header.to_json_line().into_bytes();
        buf.push(b'\n');
        write_corpus_to(&mut buf, &[sample()]).unwrap();
        let got: Vec<_> = CorpusReader::new(&buf[..]).collect::<Result<_, _>>().unwrap();
        assert_eq!(got, vec![sample()]);
    }
}
