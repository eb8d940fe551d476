use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use dysalign_core::corpus::{is_header_line, FileHeader};
use rayon::prelude::*;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::CliError;

const CHUNK: usize = 512;

pub fn config_hash(config: &Value) -> String {
    let digest = Sha256::digest(config.to_string().as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

pub fn header(seed: u64, config: &Value) -> FileHeader {
    FileHeader { tool_version: env!("CARGO_PKG_VERSION").to_string(), seed, config_hash: config_hash(config) }
}

pub fn require_input(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Data(format!("input not found: {}", path.display())))
    }
}

pub fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))
}

pub fn write_line<W: Write>(w: &mut W, line: &str) -> Result<(), CliError> {
    w.write_all(line.as_bytes()).and_then(|_| w.write_all(b"\n")).map_err(|e| CliError::Internal(e.to_string()))
}

pub fn finish<W: Write>(mut w: W) -> Result<(), CliError> {
    w.flush().map_err(|e| CliError::Internal(e.to_string()))
}

/// Record lines of a JSON-lines file with their 1-based line numbers.
/// Blank lines and provenance headers are skipped.
pub fn record_lines(path: &Path) -> Result<impl Iterator<Item = Result<(usize, String), CliError>>, CliError> {
    require_input(path)?;
    let file = File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(BufReader::new(file).lines().enumerate().filter_map(|(i, line)| match line {
        Err(e) => Some(Err(CliError::Data(e.to_string()))),
        Ok(l) if l.trim().is_empty() || is_header_line(l.trim()) => None,
        Ok(l) => Some(Ok((i + 1, l))),
    }))
}

pub fn parse_value(line_no: usize, line: &str) -> Result<Value, CliError> {
    serde_json::from_str(line).map_err(|e| CliError::Data(format!("line {line_no}: {e}")))
}

/// Maps items in parallel, chunk by chunk, handing results to `sink` in
/// input order.
pub fn ordered_map<T, U, I, F, S>(items: I, f: F, mut sink: S) -> Result<(), CliError>
where
    I: Iterator<Item = Result<T, CliError>>,
    T: Send,
    U: Send,
    F: Fn(T) -> Result<U, CliError> + Sync,
    S: FnMut(U) -> Result<(), CliError>,
{
    let mut items = items.peekable();
    while items.peek().is_some() {
        let chunk: Vec<T> = items.by_ref().take(CHUNK).collect::<Result<_, _>>()?;
        let out: Vec<Result<U, CliError>> = chunk.into_par_iter().map(&f).collect();
        for r in out {
            sink(r?)?;
        }
    }
    Ok(())
}
