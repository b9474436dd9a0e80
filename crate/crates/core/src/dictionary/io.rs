//! Text dictionary format:
//!
//! ```text
//! UFLDICT 1 <M> <n> <method> <epsilon>
//! <n whitening mean values>
//! <n lines of n whitening matrix values>
//! <M lines of n codeword values>
//! ```
//!
//! Numbers are written with 17 significant digits so they parse back to the
//! same bits.

use std::fmt::Write as _;
use std::path::Path;

use super::{Dictionary, Method};
use crate::error::{Error, Result};
use crate::io_util;
use crate::preprocess::WhiteningTransform;

const MAGIC: &str = "UFLDICT";
const VERSION: u32 = 1;

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn push_row(out: &mut String, row: &[f64]) {
    for (i, v) in row.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&fmt_f64(*v));
    }
    out.push('\n');
}

pub fn encode_dictionary(d: &Dictionary) -> String {
    let n = d.dim();
    let w = d.whitening();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{MAGIC} {VERSION} {} {n} {} {}",
        d.size(),
        d.method(),
        fmt_f64(w.epsilon())
    );
    push_row(&mut out, w.mean());
    for row in w.matrix().chunks_exact(n) {
        push_row(&mut out, row);
    }
    for row in d.codewords().chunks_exact(n) {
        push_row(&mut out, row);
    }
    out
}

fn bad(reason: impl Into<String>) -> Error {
    Error::Format {
        kind: "dictionary",
        reason: reason.into(),
    }
}

fn parse_row(line: Option<&str>, n: usize, what: &str) -> Result<Vec<f64>> {
    let line = line.ok_or_else(|| bad(format!("missing {what} line")))?;
    let values = line
        .split(' ')
        .map(|tok| tok.parse::<f64>().map_err(|_| bad(format!("bad number `{tok}` in {what}"))))
        .collect::<Result<Vec<f64>>>()?;
    if values.len() != n {
        return Err(bad(format!("{what}: expected {n} values, got {}", values.len())));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("dictionary file"));
    }
    Ok(values)
}

pub fn decode_dictionary(text: &str) -> Result<Dictionary> {
    let body = text
        .strip_suffix('\n')
        .ok_or_else(|| bad("missing trailing newline (truncated?)"))?;
    let mut lines = body.split('\n');
    let header = lines.next().unwrap_or_default();
    let fields: Vec<&str> = header.split(' ').collect();
    if fields.len() != 6 || fields[0] != MAGIC {
        return Err(bad("bad magic header"));
    }
    if fields[1] != VERSION.to_string() {
        return Err(bad(format!("unsupported version {}", fields[1])));
    }
    let m: usize = fields[2].parse().map_err(|_| bad("bad dictionary size"))?;
    let n: usize = fields[3].parse().map_err(|_| bad("bad dimension"))?;
    let method: Method = fields[4].parse()?;
    let epsilon: f64 = fields[5].parse().map_err(|_| bad("bad epsilon"))?;
    if m < 2 || n == 0 {
        return Err(bad(format!("invalid shape M={m} n={n}")));
    }
    if !epsilon.is_finite() {
        return Err(Error::NonFinite("dictionary epsilon"));
    }

    let mean = parse_row(lines.next(), n, "mean")?;
    let mut matrix = Vec::with_capacity(n * n);
    for r in 0..n {
        matrix.extend(parse_row(lines.next(), n, &format!("whitening row {r}"))?);
    }
    let mut codewords = Vec::with_capacity(m * n);
    for j in 0..m {
        codewords.extend(parse_row(lines.next(), n, &format!("codeword {j}"))?);
    }
    if lines.next().is_some() {
        return Err(bad("trailing data after last codeword"));
    }
    let whitening = WhiteningTransform::new(mean, matrix, epsilon)?;
    Dictionary::new(n, codewords, method, whitening).map_err(|e| match e {
        Error::InvalidInput(reason) => bad(reason),
        other => other,
    })
}

pub fn save_dictionary(d: &Dictionary, path: impl AsRef<Path>) -> Result<()> {
    io_util::write_atomic(path.as_ref(), encode_dictionary(d).as_bytes())
}

pub fn load_dictionary(path: impl AsRef<Path>) -> Result<Dictionary> {
    let bytes = io_util::read_file(path.as_ref())?;
    let text = String::from_utf8(bytes).map_err(|_| bad("not UTF-8 text"))?;
    decode_dictionary(&text)
}
