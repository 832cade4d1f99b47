//! Line-oriented update traces.
//!
//! ```text
//! # comment
//! H <n> <W>
//! I <u> <v> <w>
//! D <u> <v>
//! C
//! ```

use std::io::{self, BufRead, Write};

use dynmsf::Update;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TraceRecord {
    Header { n: usize, max_weight: f64 },
    Insert { u: usize, v: usize, w: f64 },
    Delete { u: usize, v: usize },
    Checkpoint,
}

impl TraceRecord {
    pub fn as_update(&self) -> Option<Update> {
        match *self {
            TraceRecord::Insert { u, v, w } => Some(Update::insert(u, v, w)),
            TraceRecord::Delete { u, v } => Some(Update::delete(u, v)),
            _ => None,
        }
    }
}

impl From<Update> for TraceRecord {
    fn from(update: Update) -> Self {
        match update {
            Update::Insert(e) => TraceRecord::Insert { u: e.u, v: e.v, w: e.w },
            Update::Delete { u, v } => TraceRecord::Delete { u, v },
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl TraceError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        TraceError::Parse {
            line,
            message: message.into(),
        }
    }
}

fn field<T: std::str::FromStr>(line: usize, name: &str, raw: &str) -> Result<T, TraceError> {
    raw.parse()
        .map_err(|_| TraceError::at(line, format!("invalid {name} {raw:?}")))
}

/// Parses one non-comment line.
pub fn parse_record(line_no: usize, line: &str) -> Result<TraceRecord, TraceError> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    let arity = |k: usize| {
        if fields.len() == k {
            Ok(())
        } else {
            Err(TraceError::at(
                line_no,
                format!("{:?} record takes {} fields, got {}", fields[0], k - 1, fields.len() - 1),
            ))
        }
    };
    match fields[0] {
        "H" => {
            arity(3)?;
            Ok(TraceRecord::Header {
                n: field(line_no, "vertex count", fields[1])?,
                max_weight: field(line_no, "weight bound", fields[2])?,
            })
        }
        "I" => {
            arity(4)?;
            Ok(TraceRecord::Insert {
                u: field(line_no, "vertex", fields[1])?,
                v: field(line_no, "vertex", fields[2])?,
                w: field(line_no, "weight", fields[3])?,
            })
        }
        "D" => {
            arity(3)?;
            Ok(TraceRecord::Delete {
                u: field(line_no, "vertex", fields[1])?,
                v: field(line_no, "vertex", fields[2])?,
            })
        }
        "C" => {
            arity(1)?;
            Ok(TraceRecord::Checkpoint)
        }
        other => Err(TraceError::at(line_no, format!("unknown record type {other:?}"))),
    }
}

/// Parses a whole trace. The header must come first and appear once; a
/// trace without any records is accepted and yields an empty vector.
pub fn parse_trace<R: BufRead>(reader: R) -> Result<Vec<TraceRecord>, TraceError> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let record = parse_record(line_no, trimmed)?;
        let is_header = matches!(record, TraceRecord::Header { .. });
        if is_header != records.is_empty() {
            let message = if is_header {
                "header must appear exactly once"
            } else {
                "first record must be the header"
            };
            return Err(TraceError::at(line_no, message));
        }
        records.push(record);
    }
    Ok(records)
}

pub fn parse_trace_str(text: &str) -> Result<Vec<TraceRecord>, TraceError> {
    parse_trace(text.as_bytes())
}

pub fn write_record<W: Write>(out: &mut W, record: &TraceRecord) -> io::Result<()> {
    match *record {
        TraceRecord::Header { n, max_weight } => writeln!(out, "H {n} {max_weight}"),
        TraceRecord::Insert { u, v, w } => writeln!(out, "I {u} {v} {w}"),
        TraceRecord::Delete { u, v } => writeln!(out, "D {u} {v}"),
        TraceRecord::Checkpoint => writeln!(out, "C"),
    }
}

pub fn write_trace<W: Write>(out: &mut W, records: &[TraceRecord]) -> io::Result<()> {
    for r in records {
        write_record(out, r)?;
    }
    Ok(())
}

pub fn trace_to_string(records: &[TraceRecord]) -> String {
    let mut buf = Vec::new();
    write_trace(&mut buf, records).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}
