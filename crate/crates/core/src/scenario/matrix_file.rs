//! Plain-text matrix sequences.
//!
//! ```text
//! N <dim> T <samples>
//! t <value>
//! re,im re,im ...      (N lines of N entries)
//! t <value>
//! ...
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Numbers are written
//! in shortest round-trip form, so a written file reads back bit-exactly.

use std::io::{BufRead, Write};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::numkernel::{CMatrix, C64};
use crate::spectral::StatePath;

/// Time-stamped matrices as read from or written to a file.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixSequence {
    pub times: Vec<f64>,
    pub matrices: Vec<CMatrix>,
}

pub fn write_sequence<W: Write>(mut out: W, times: &[f64], matrices: &[CMatrix]) -> Result<()> {
    let n = matrices.first().map_or(0, |m| m.nrows());
    writeln!(out, "N {n} T {}", times.len())?;
    for (t, m) in times.iter().zip(matrices) {
        writeln!(out, "t {t}")?;
        for row in m.rows() {
            let line: Vec<String> = row.iter().map(|z| format!("{},{}", z.re, z.im)).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
    }
    Ok(())
}

pub fn read_sequence<R: BufRead>(input: R) -> Result<MatrixSequence> {
    let mut lines = input
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty() && !s.trim_start().starts_with('#')));
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((no, Ok(text))) => Ok((no, text)),
            Some((_, Err(e))) => Err(e.into()),
            None => Err(Error::Parse { line: 0, msg: format!("unexpected end of file, expected {what}") }),
        }
    };

    let (no, header) = next("header")?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    let (n, samples) = match parts.as_slice() {
        ["N", n, "T", t] => (parse_count(n, no, "dimension")?, parse_count(t, no, "sample count")?),
        _ => return Err(Error::Parse { line: no, msg: "expected header `N <dim> T <samples>`".into() }),
    };
    if n == 0 {
        return Err(Error::Parse { line: no, msg: "dimension must be positive".into() });
    }

    let mut times = Vec::with_capacity(samples);
    let mut matrices = Vec::with_capacity(samples);
    for _ in 0..samples {
        let (no, line) = next("`t <value>`")?;
        let t = match line.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["t", v] => parse_f64(v, no)?,
            _ => return Err(Error::Parse { line: no, msg: "expected `t <value>`".into() }),
        };
        let mut m = Array2::from_elem((n, n), C64::new(0.0, 0.0));
        for r in 0..n {
            let (no, line) = next("matrix row")?;
            let entries: Vec<&str> = line.split_whitespace().collect();
            if entries.len() != n {
                return Err(Error::Parse { line: no, msg: format!("expected {n} entries, found {}", entries.len()) });
            }
            for (c, e) in entries.iter().enumerate() {
                let (re, im) = e
                    .split_once(',')
                    .ok_or_else(|| Error::Parse { line: no, msg: format!("entry {e:?} is not `re,im`") })?;
                m[[r, c]] = C64::new(parse_f64(re, no)?, parse_f64(im, no)?);
            }
        }
        times.push(t);
        matrices.push(m);
    }
    if let Some((no, _)) = lines.next() {
        return Err(Error::Parse { line: no, msg: format!("trailing content after {samples} samples") });
    }
    Ok(MatrixSequence { times, matrices })
}

fn parse_count(s: &str, line: usize, what: &str) -> Result<usize> {
    s.parse().map_err(|_| Error::Parse { line, msg: format!("invalid {what} {s:?}") })
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse { line, msg: format!("invalid number {s:?}") }),
    }
}

pub fn write_state_path<W: Write>(out: W, path: &StatePath) -> Result<()> {
    write_sequence(out, path.times(), path.states())
}

pub fn read_state_path<R: BufRead>(input: R) -> Result<StatePath> {
    let seq = read_sequence(input)?;
    StatePath::new(seq.times, seq.matrices)
}

pub fn read_state_path_file(path: &std::path::Path) -> Result<StatePath> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Config(format!("path-file: cannot open {}: {e}", path.display())))?;
    read_state_path(std::io::BufReader::new(file))
}
