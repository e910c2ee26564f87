//! CSV form of episode traces and summary tables.
//!
//! Trace files carry the header `t,x1,x2,x3,x4,h,hdot,u1,u2,slack` and one row
//! per step. Reals are written with 17 significant digits so they read back
//! bit-exactly.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{Vector2, Vector4};

use crate::simulator::{EpisodeTrace, TraceRow};

pub const TRACE_HEADER: [&str; 10] = ["t", "x1", "x2", "x3", "x4", "h", "hdot", "u1", "u2", "slack"];

#[derive(Debug, thiserror::Error)]
pub enum TraceIoError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("unexpected header {0:?}")]
    Header(Vec<String>),
    #[error("line {line}: {msg}")]
    Record { line: u64, msg: String },
}

pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_trace<W: Write>(trace: &EpisodeTrace, out: W) -> Result<(), TraceIoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in &trace.rows {
        let fields = [r.t, r.state[0], r.state[1], r.state[2], r.state[3], r.h, r.h_dot, r.u[0], r.u[1], r.slack];
        w.write_record(fields.map(format_real))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_file(trace: &EpisodeTrace, path: &Path) -> Result<(), TraceIoError> {
    write_trace(trace, std::fs::File::create(path)?)
}

pub fn read_trace<R: Read>(input: R) -> Result<Vec<TraceRow>, TraceIoError> {
    let mut rdr = csv::Reader::from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header != TRACE_HEADER {
        return Err(TraceIoError::Header(header));
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let values = record
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| TraceIoError::Record { line, msg: e.to_string() })?;
        if values.len() != TRACE_HEADER.len() {
            return Err(TraceIoError::Record { line, msg: format!("expected 10 fields, got {}", values.len()) });
        }
        rows.push(TraceRow {
            t: values[0],
            state: Vector4::new(values[1], values[2], values[3], values[4]),
            h: values[5],
            h_dot: values[6],
            u: Vector2::new(values[7], values[8]),
            slack: values[9],
        });
    }
    Ok(rows)
}

pub fn read_trace_file(path: &Path) -> Result<Vec<TraceRow>, TraceIoError> {
    read_trace(std::fs::File::open(path)?)
}

/// Writes a summary table: a header row naming each column, then the rows.
pub fn write_table<W: Write>(header: &[&str], rows: &[Vec<String>], out: W) -> Result<(), TraceIoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}
