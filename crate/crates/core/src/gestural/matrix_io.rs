//! Dense tensor files.
//!
//! JSON: nested arrays, row-major. Binary: the bytes `GSM1`, a little-endian
//! `u32` rank, one `u32` per dimension, then the entries as `f64` LE in
//! row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{ArrayD, IxDyn};
use serde_json::Value;

use super::GesturalError;

pub const MAGIC: &[u8; 4] = b"GSM1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Json,
    Binary,
}

impl MatrixFormat {
    /// `.gsm` and `.bin` are binary, anything else JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("gsm") | Some("bin") => MatrixFormat::Binary,
            _ => MatrixFormat::Json,
        }
    }
}

fn fmt_err(msg: impl Into<String>) -> GesturalError {
    GesturalError::Format(msg.into())
}

pub fn tensor_to_json(x: &ArrayD<f64>) -> Value {
    fn rec(x: &ArrayD<f64>, prefix: &mut Vec<usize>) -> Value {
        let depth = prefix.len();
        if depth == x.ndim() {
            return serde_json::Number::from_f64(x[IxDyn(prefix)]).map_or(Value::Null, Value::Number);
        }
        let mut items = Vec::with_capacity(x.shape()[depth]);
        for i in 0..x.shape()[depth] {
            prefix.push(i);
            items.push(rec(x, prefix));
            prefix.pop();
        }
        Value::Array(items)
    }
    rec(x, &mut Vec::new())
}

pub fn tensor_from_json(v: &Value) -> Result<ArrayD<f64>, GesturalError> {
    let mut shape = Vec::new();
    let mut cur = v;
    while let Value::Array(items) = cur {
        shape.push(items.len());
        match items.first() {
            Some(first) => cur = first,
            None => break,
        }
    }
    if shape.is_empty() {
        return Err(fmt_err("expected a nested array"));
    }
    let mut data = Vec::with_capacity(shape.iter().product());
    fn flatten(v: &Value, shape: &[usize], out: &mut Vec<f64>) -> Result<(), GesturalError> {
        match (shape.split_first(), v) {
            (None, Value::Number(n)) => {
                out.push(n.as_f64().ok_or_else(|| fmt_err("number out of range"))?);
                Ok(())
            }
            (Some((&len, rest)), Value::Array(items)) if items.len() == len => {
                items.iter().try_for_each(|item| flatten(item, rest, out))
            }
            _ => Err(fmt_err("ragged or non-numeric array")),
        }
    }
    flatten(v, &shape, &mut data)?;
    ArrayD::from_shape_vec(IxDyn(&shape), data).map_err(|e| fmt_err(e.to_string()))
}

pub fn write_binary<W: Write>(mut w: W, x: &ArrayD<f64>) -> Result<(), GesturalError> {
    w.write_all(MAGIC)?;
    let rank = u32::try_from(x.ndim()).map_err(|_| fmt_err("rank too large"))?;
    w.write_all(&rank.to_le_bytes())?;
    for &d in x.shape() {
        let d = u32::try_from(d).map_err(|_| fmt_err("dimension too large"))?;
        w.write_all(&d.to_le_bytes())?;
    }
    for v in x.iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<ArrayD<f64>, GesturalError> {
    let mut word = [0u8; 4];
    r.read_exact(&mut word)?;
    if &word != MAGIC {
        return Err(fmt_err("missing GSM1 magic"));
    }
    r.read_exact(&mut word)?;
    let rank = u32::from_le_bytes(word) as usize;
    if rank == 0 || rank > 8 {
        return Err(fmt_err(format!("unsupported rank {rank}")));
    }
    let mut shape = Vec::with_capacity(rank);
    for _ in 0..rank {
        r.read_exact(&mut word)?;
        shape.push(u32::from_le_bytes(word) as usize);
    }
    let count =
        shape.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d)).ok_or_else(|| fmt_err("shape overflows"))?;
    let mut data = Vec::with_capacity(count.min(1 << 24));
    let mut buf = [0u8; 8];
    for _ in 0..count {
        r.read_exact(&mut buf)?;
        data.push(f64::from_le_bytes(buf));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(fmt_err("trailing bytes after data"));
    }
    ArrayD::from_shape_vec(IxDyn(&shape), data).map_err(|e| fmt_err(e.to_string()))
}

/// Reads either format, sniffing the magic bytes.
pub fn read_tensor(path: &Path) -> Result<ArrayD<f64>, GesturalError> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    if bytes.starts_with(MAGIC) {
        read_binary(bytes.as_slice())
    } else {
        let v: Value = serde_json::from_slice(&bytes).map_err(|e| fmt_err(e.to_string()))?;
        tensor_from_json(&v)
    }
}

pub fn write_tensor(path: &Path, x: &ArrayD<f64>, format: MatrixFormat) -> Result<(), GesturalError> {
    let mut w = BufWriter::new(File::create(path)?);
    match format {
        MatrixFormat::Binary => write_binary(&mut w, x)?,
        MatrixFormat::Json => {
            serde_json::to_writer(&mut w, &tensor_to_json(x)).map_err(|e| fmt_err(e.to_string()))?;
            w.write_all(b"\n")?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array3};

    #[test]
    fn json_round_trip() {
        let x = array![[1.0, 2.5], [-3.0, 0.0]].into_dyn();
        let v = tensor_to_json(&x);
        assert_eq!(v.to_string(), "[[1.0,2.5],[-3.0,0.0]]");
        assert_eq!(tensor_from_json(&v).unwrap(), x);
    }

    #[test]
    fn binary_round_trip() {
        let x = Array3::from_shape_fn((2, 3, 4), |(a, b, c)| (a * 12 + b * 4 + c) as f64 * 0.1).into_dyn();
        let mut buf = Vec::new();
        write_binary(&mut buf, &x).unwrap();
        assert_eq!(&buf[..4], b"GSM1");
        assert_eq!(buf.len(), 4 + 4 + 12 + 24 * 8);
        assert_eq!(read_binary(buf.as_slice()).unwrap(), x);
    }

    #[test]
    fn ragged_json_rejected() {
        let v: Value = serde_json::from_str("[[1, 2], [3]]").unwrap();
        assert!(matches!(tensor_from_json(&v), Err(GesturalError::Format(_))));
    }

    #[test]
    fn truncated_binary_rejected() {
        let mut buf = Vec::new();
        write_binary(&mut buf, &array![[1.0, 2.0]].into_dyn()).unwrap();
        buf.pop();
        assert!(read_binary(buf.as_slice()).is_err());
    }

    #[test]
    fn file_sniffing() {
        let dir = tempfile::tempdir().unwrap();
        let x = array![[0.5, 1.5]].into_dyn();
        for (name, fmt) in [("m.json", MatrixFormat::Json), ("m.gsm", MatrixFormat::Binary)] {
            let p = dir.path().join(name);
            assert_eq!(MatrixFormat::from_path(&p), fmt);
            write_tensor(&p, &x, fmt).unwrap();
            assert_eq!(read_tensor(&p).unwrap(), x);
        }
    }
}
