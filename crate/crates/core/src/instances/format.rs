//! Text formats for instances.
//!
//! * `orlib`: first line `J M`, then one line per job holding `M` pairs
//!   `machine duration` in operation order, machines 0-based.
//! * `taillard`: first line `J M`, then a `J×M` matrix of durations followed
//!   by a `J×M` matrix of 1-based machine indices. Any whitespace separates
//!   tokens.
//!
//! Writers emit single spaces and `\n` line endings, one matrix row per line.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jssp::{Instance, Time};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceFormat {
    Orlib,
    Taillard,
}

impl std::str::FromStr for InstanceFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "orlib" => Ok(Self::Orlib),
            "taillard" => Ok(Self::Taillard),
            other => Err(format!("unknown instance format {other:?}")),
        }
    }
}

impl InstanceFormat {
    /// Guesses the format from the first data line: `2M` tokens means orlib,
    /// `M` tokens means taillard.
    pub fn detect(bytes: &[u8]) -> Option<Self> {
        let text = std::str::from_utf8(bytes).ok()?;
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<usize> = lines
            .next()?
            .split_whitespace()
            .map(|t| t.parse().ok())
            .collect::<Option<_>>()?;
        let &[_, machines] = header.as_slice() else {
            return None;
        };
        let first = lines.next()?.split_whitespace().count();
        if first == 2 * machines {
            Some(Self::Orlib)
        } else if first == machines {
            Some(Self::Taillard)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Encoding,
    MalformedHeader,
    InvalidNumber,
    DimensionMismatch,
    NonPermutation,
    NonPositiveDuration,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    line: usize,
    column: usize,
}

fn err(kind: ParseErrorKind, line: usize, column: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        kind,
        line,
        column,
        message: message.into(),
    }
}

/// Non-empty lines as token lists, with 1-based positions.
fn tokenize(text: &str) -> Vec<Vec<Token<'_>>> {
    text.lines()
        .enumerate()
        .map(|(idx, line)| {
            let mut tokens = Vec::new();
            let mut rest = line;
            let mut offset = 0;
            while let Some(start) = rest.find(|c: char| !c.is_whitespace()) {
                let tail = &rest[start..];
                let len = tail.find(char::is_whitespace).unwrap_or(tail.len());
                tokens.push(Token {
                    text: &tail[..len],
                    line: idx + 1,
                    column: line[..offset + start].chars().count() + 1,
                });
                offset += start + len;
                rest = &tail[len..];
            }
            tokens
        })
        .filter(|t| !t.is_empty())
        .collect()
}

fn number(tok: &Token<'_>) -> Result<i64, ParseError> {
    tok.text.parse().map_err(|_| {
        err(
            ParseErrorKind::InvalidNumber,
            tok.line,
            tok.column,
            format!("expected an integer, found {:?}", tok.text),
        )
    })
}

fn duration(tok: &Token<'_>) -> Result<Time, ParseError> {
    let value = number(tok)?;
    if value < 1 {
        return Err(err(
            ParseErrorKind::NonPositiveDuration,
            tok.line,
            tok.column,
            format!("duration {value} is not positive"),
        ));
    }
    Ok(value)
}

fn header(lines: &[Vec<Token<'_>>]) -> Result<(usize, usize), ParseError> {
    let Some(first) = lines.first() else {
        return Err(err(ParseErrorKind::MalformedHeader, 1, 1, "empty file"));
    };
    let bad = |tok: &Token<'_>| {
        err(
            ParseErrorKind::MalformedHeader,
            tok.line,
            tok.column,
            "header must be two positive integers `J M`",
        )
    };
    if first.len() != 2 {
        return Err(bad(&first[0]));
    }
    let mut dims = [0usize; 2];
    for (slot, tok) in dims.iter_mut().zip(first) {
        *slot = match tok.text.parse::<usize>() {
            Ok(v) if v > 0 => v,
            _ => return Err(bad(tok)),
        };
    }
    Ok((dims[0], dims[1]))
}

/// Checks a machine row is a permutation of `0..machines`; `tokens` carry
/// the source positions of the row's entries.
fn check_permutation(
    row: &[usize],
    tokens: &[Token<'_>],
    machines: usize,
    job: usize,
) -> Result<(), ParseError> {
    let mut seen = vec![false; machines];
    for (&m, tok) in row.iter().zip(tokens) {
        if m >= machines || std::mem::replace(&mut seen[m], true) {
            return Err(err(
                ParseErrorKind::NonPermutation,
                tok.line,
                tok.column,
                format!(
                    "machine row of job {job} is not a permutation (offending entry {:?})",
                    tok.text
                ),
            ));
        }
    }
    Ok(())
}

/// Machine order and processing times.
type Matrices = (Vec<Vec<usize>>, Vec<Vec<Time>>);

fn parse_orlib(lines: &[Vec<Token<'_>>]) -> Result<Matrices, ParseError> {
    let (jobs, machines) = header(lines)?;
    let rows = &lines[1..];
    if rows.len() != jobs {
        let (line, column) = rows
            .get(jobs)
            .map_or((lines[0][0].line, 1), |r| (r[0].line, 1));
        return Err(err(
            ParseErrorKind::DimensionMismatch,
            line,
            column,
            format!("expected {jobs} job lines, found {}", rows.len()),
        ));
    }
    let mut machine_order = Vec::with_capacity(jobs);
    let mut proc_time = Vec::with_capacity(jobs);
    for (job, row) in rows.iter().enumerate() {
        if row.len() != 2 * machines {
            return Err(err(
                ParseErrorKind::DimensionMismatch,
                row[0].line,
                row.get(2 * machines).map_or(1, |t| t.column),
                format!(
                    "expected {} tokens for job {job}, found {}",
                    2 * machines,
                    row.len()
                ),
            ));
        }
        let mut order = Vec::with_capacity(machines);
        let mut times = Vec::with_capacity(machines);
        let mut machine_tokens = Vec::with_capacity(machines);
        for pair in row.chunks(2) {
            let m = number(&pair[0])?;
            order.push(usize::try_from(m).unwrap_or(usize::MAX));
            machine_tokens.push(pair[0]);
            times.push(duration(&pair[1])?);
        }
        check_permutation(&order, &machine_tokens, machines, job)?;
        machine_order.push(order);
        proc_time.push(times);
    }
    Ok((machine_order, proc_time))
}

fn parse_taillard(lines: &[Vec<Token<'_>>]) -> Result<Matrices, ParseError> {
    let (jobs, machines) = header(lines)?;
    let tokens: Vec<Token<'_>> = lines[1..].iter().flatten().copied().collect();
    let cells = jobs * machines;
    if tokens.len() != 2 * cells {
        let (line, column) = tokens
            .get(2 * cells)
            .or(tokens.last())
            .map_or((1, 1), |t| (t.line, t.column));
        return Err(err(
            ParseErrorKind::DimensionMismatch,
            line,
            column,
            format!(
                "expected {} matrix entries, found {}",
                2 * cells,
                tokens.len()
            ),
        ));
    }
    let (time_tokens, machine_tokens) = tokens.split_at(cells);
    let proc_time = time_tokens
        .chunks(machines)
        .map(|row| row.iter().map(duration).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    let mut machine_order = Vec::with_capacity(jobs);
    for (job, row) in machine_tokens.chunks(machines).enumerate() {
        let order = row
            .iter()
            .map(|t| {
                let m = number(t)?;
                // 1-based in the file
                Ok(usize::try_from(m - 1).unwrap_or(usize::MAX))
            })
            .collect::<Result<Vec<_>, ParseError>>()?;
        check_permutation(&order, row, machines, job)?;
        machine_order.push(order);
    }
    Ok((machine_order, proc_time))
}

/// Parses an instance; machine indices are 0-based in the result whatever
/// the source format.
pub fn parse_instance(
    id: impl Into<String>,
    bytes: &[u8],
    format: InstanceFormat,
) -> Result<Instance, ParseError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| err(ParseErrorKind::Encoding, 1, 1, format!("not UTF-8: {e}")))?;
    let lines = tokenize(text);
    let (machine_order, proc_time) = match format {
        InstanceFormat::Orlib => parse_orlib(&lines)?,
        InstanceFormat::Taillard => parse_taillard(&lines)?,
    };
    Ok(Instance::new(id, machine_order, proc_time).expect("parser enforces instance invariants"))
}

/// Serialises an instance in canonical form.
pub fn write_instance(instance: &Instance, format: InstanceFormat) -> String {
    let mut out = format!("{} {}\n", instance.num_jobs(), instance.num_machines());
    let join = |it: &mut dyn Iterator<Item = String>| it.collect::<Vec<_>>().join(" ");
    match format {
        InstanceFormat::Orlib => {
            for (order, times) in instance.machine_order().iter().zip(instance.proc_time()) {
                let line = join(&mut order.iter().zip(times).map(|(m, p)| format!("{m} {p}")));
                writeln!(out, "{line}").unwrap();
            }
        }
        InstanceFormat::Taillard => {
            for times in instance.proc_time() {
                writeln!(out, "{}", join(&mut times.iter().map(|p| p.to_string()))).unwrap();
            }
            for order in instance.machine_order() {
                writeln!(
                    out,
                    "{}",
                    join(&mut order.iter().map(|m| (m + 1).to_string()))
                )
                .unwrap();
            }
        }
    }
    out
}

#[derive(Debug, Error)]
pub enum ReadError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse { path: String, source: ParseError },
    #[error("{path}: cannot determine instance format")]
    UnknownFormat { path: String },
}

/// Reads an instance file, naming the instance after the file stem. With
/// `format = None` the format is detected from the contents.
pub fn read_instance_file(
    path: &Path,
    format: Option<InstanceFormat>,
) -> Result<Instance, ReadError> {
    let shown = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|source| ReadError::Io {
        path: shown.clone(),
        source,
    })?;
    let format = match format.or_else(|| InstanceFormat::detect(&bytes)) {
        Some(f) => f,
        None => return Err(ReadError::UnknownFormat { path: shown }),
    };
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_instance(id, &bytes, format).map_err(|source| ReadError::Parse {
        path: shown,
        source,
    })
}
