//! Plain-text tensor formats.
//!
//! * DTF: header `dtf k n_1 .. n_k`, then `∏ n_i` whitespace-separated
//!   decimal entries in row-major order (last mode fastest).
//! * COO: header `coo k n_1 .. n_k nnz`, then `nnz` lines `i_1 .. i_k value`
//!   with 1-based indices. Unlisted entries are zero; repeated coordinates
//!   are summed.
//!
//! Blank lines and lines starting with `#` are ignored in both formats.

use std::fmt::Write as _;

use super::DenseTensor;
use crate::error::{Error, Result};

/// Upper bound on the number of dense entries a file may declare.
pub const MAX_DENSE_ENTRIES: usize = 1 << 28;

/// Parses a DTF or COO document into a dense tensor.
pub fn parse_tensor(text: &str) -> Result<DenseTensor> {
    let mut lines = content_lines(text);
    let (line_no, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty tensor file"))?;
    let mut tokens = header.split_whitespace();
    let kind = tokens.next().unwrap_or_default();
    let nums: Vec<usize> = tokens
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| Error::parse(line_no, format!("bad header field {t:?}")))
        })
        .collect::<Result<_>>()?;
    let (&k, rest) = nums
        .split_first()
        .ok_or_else(|| Error::parse(line_no, "header is missing the tensor order"))?;
    match kind {
        "dtf" => {
            let shape = header_shape(line_no, k, rest, 0)?;
            parse_dtf_body(lines, shape)
        }
        "coo" => {
            let shape = header_shape(line_no, k, rest, 1)?;
            let nnz = rest[k];
            parse_coo_body(lines, shape, nnz, line_no)
        }
        other => Err(Error::parse(
            line_no,
            format!("unknown tensor format {other:?}; expected \"dtf\" or \"coo\""),
        )),
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn header_shape(line: usize, k: usize, rest: &[usize], extra: usize) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::parse(line, format!("tensor order must be ≥ 2, got {k}")));
    }
    if rest.len().checked_sub(extra) != Some(k) {
        return Err(Error::parse(
            line,
            format!("header declares order {k} but lists {} fields", rest.len()),
        ));
    }
    let shape = rest[..k].to_vec();
    if shape.contains(&0) {
        return Err(Error::parse(line, "tensor dims must be positive"));
    }
    let len = shape
        .iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n))
        .filter(|&n| n <= MAX_DENSE_ENTRIES)
        .ok_or_else(|| {
            Error::parse(
                line,
                format!("shape {shape:?} exceeds {MAX_DENSE_ENTRIES} entries"),
            )
        })?;
    debug_assert!(len > 0);
    Ok(shape)
}

fn parse_value(line: usize, token: &str) -> Result<f64> {
    let v: f64 = token
        .parse()
        .map_err(|_| Error::parse(line, format!("bad number {token:?}")))?;
    if !v.is_finite() || v < 0.0 {
        return Err(Error::parse(
            line,
            format!("entry {token} is not a finite nonnegative number"),
        ));
    }
    Ok(v)
}

fn parse_dtf_body<'a>(
    lines: impl Iterator<Item = (usize, &'a str)>,
    shape: Vec<usize>,
) -> Result<DenseTensor> {
    let len: usize = shape.iter().product();
    let mut values = Vec::with_capacity(len.min(1 << 20));
    let mut last_line = 1;
    for (line_no, line) in lines {
        last_line = line_no;
        for tok in line.split_whitespace() {
            if values.len() == len {
                return Err(Error::parse(
                    line_no,
                    format!("more than the {len} declared entries"),
                ));
            }
            values.push(parse_value(line_no, tok)?);
        }
    }
    if values.len() != len {
        return Err(Error::parse(
            last_line,
            format!("expected {len} entries, found {}", values.len()),
        ));
    }
    DenseTensor::new(shape, values)
}

fn parse_coo_body<'a>(
    lines: impl Iterator<Item = (usize, &'a str)>,
    shape: Vec<usize>,
    nnz: usize,
    header_line: usize,
) -> Result<DenseTensor> {
    let k = shape.len();
    let mut t = DenseTensor::zeros(shape)?;
    let mut seen = 0usize;
    let mut last_line = header_line;
    let mut idx = vec![0usize; k];
    for (line_no, line) in lines {
        last_line = line_no;
        if seen == nnz {
            return Err(Error::parse(
                line_no,
                format!("more than the {nnz} declared coordinate lines"),
            ));
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != k + 1 {
            return Err(Error::parse(
                line_no,
                format!("expected {} fields, found {}", k + 1, toks.len()),
            ));
        }
        for (m, tok) in toks[..k].iter().enumerate() {
            let i: usize = tok
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad index {tok:?}")))?;
            if i == 0 || i > t.shape[m] {
                return Err(Error::parse(
                    line_no,
                    format!("index {i} out of range 1..={} for mode {}", t.shape[m], m + 1),
                ));
            }
            idx[m] = i - 1;
        }
        let v = parse_value(line_no, toks[k])?;
        let off = t.offset(&idx).expect("indices validated");
        t.values[off] += v;
        if !t.values[off].is_finite() {
            return Err(Error::parse(line_no, "accumulated entry overflows"));
        }
        seen += 1;
    }
    if seen != nnz {
        return Err(Error::parse(
            last_line,
            format!("expected {nnz} coordinate lines, found {seen}"),
        ));
    }
    Ok(t)
}

/// Serializes a tensor as DTF, one last-mode fiber per line.
pub fn write_dtf(t: &DenseTensor) -> String {
    let mut out = String::new();
    out.push_str("dtf ");
    out.push_str(&t.order().to_string());
    for n in t.shape() {
        let _ = write!(out, " {n}");
    }
    out.push('\n');
    let fiber = *t.shape().last().expect("order ≥ 2");
    for row in t.values().chunks(fiber) {
        let mut first = true;
        for v in row {
            if !first {
                out.push(' ');
            }
            first = false;
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}
