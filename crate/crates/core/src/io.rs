//! CSV ingestion and output.
//!
//! Two input schemas are recognised from the header row: positions
//! (`t,px,py,pz`) and velocities (`t,vx,vz`). Floats are written with the
//! shortest representation that parses back to the same value.

use std::io::{Read, Write};

use thiserror::Error;

use crate::model::{VelocitySample, WalkProfile, WalkSegment};
use crate::preprocess::PositionSample;

pub const POSITION_HEADER: [&str; 4] = ["t", "px", "py", "pz"];
pub const VELOCITY_HEADER: [&str; 3] = ["t", "vx", "vz"];
pub const PROFILE_HEADER: [&str; 2] = ["duration", "omega"];

#[derive(Debug, Error)]
pub enum IoError {
    #[error("empty input")]
    Empty,
    #[error("unrecognised header {0:?}")]
    UnknownHeader(Vec<String>),
    #[error("row {row}, column {column}: {message}")]
    Malformed { row: usize, column: usize, message: String },
    #[error("row {row}: timestamps must be strictly increasing")]
    NotIncreasing { row: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Parsed input recording.
#[derive(Debug, Clone, PartialEq)]
pub enum Recording {
    Positions(Vec<PositionSample>),
    Velocities(Vec<VelocitySample>),
}

impl Recording {
    pub fn len(&self) -> usize {
        match self {
            Recording::Positions(p) => p.len(),
            Recording::Velocities(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn parse_rows<const N: usize>(reader: &mut csv::Reader<impl Read>) -> Result<Vec<[f64; N]>, IoError> {
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        // Row numbers count the header as row 1.
        let row = i + 2;
        let rec = rec?;
        if rec.len() != N {
            return Err(IoError::Malformed {
                row,
                column: rec.len().min(N) + 1,
                message: format!("expected {N} fields, found {}", rec.len()),
            });
        }
        let mut vals = [0.0; N];
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| IoError::Malformed {
                row,
                column: c + 1,
                message: format!("not a number: {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(IoError::Malformed { row, column: c + 1, message: "non-finite value".into() });
            }
            vals[c] = v;
        }
        if let Some(prev) = rows.last().map(|r: &[f64; N]| r[0]) {
            if vals[0] <= prev {
                return Err(IoError::NotIncreasing { row });
            }
        }
        rows.push(vals);
    }
    if rows.is_empty() {
        return Err(IoError::Empty);
    }
    Ok(rows)
}

fn reader(input: impl Read) -> csv::Reader<impl Read> {
    csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(input)
}

fn header_of(reader: &mut csv::Reader<impl Read>) -> Result<Vec<String>, IoError> {
    let h = reader.headers()?;
    if h.is_empty() || (h.len() == 1 && h[0].is_empty()) {
        return Err(IoError::Empty);
    }
    Ok(h.iter().map(str::to_string).collect())
}

/// Reads either input schema, chosen by header.
pub fn read_recording(input: impl Read) -> Result<Recording, IoError> {
    let mut rdr = reader(input);
    let header = header_of(&mut rdr)?;
    if header == POSITION_HEADER {
        let rows = parse_rows::<4>(&mut rdr)?;
        Ok(Recording::Positions(
            rows.into_iter().map(|[t, px, py, pz]| PositionSample { t, px, py, pz }).collect(),
        ))
    } else if header == VELOCITY_HEADER {
        let rows = parse_rows::<3>(&mut rdr)?;
        Ok(Recording::Velocities(rows.into_iter().map(|[t, vx, vz]| VelocitySample { t, vx, vz }).collect()))
    } else {
        Err(IoError::UnknownHeader(header))
    }
}

pub fn read_velocities(input: impl Read) -> Result<Vec<VelocitySample>, IoError> {
    match read_recording(input)? {
        Recording::Velocities(v) => Ok(v),
        Recording::Positions(_) => Err(IoError::UnknownHeader(POSITION_HEADER.iter().map(|s| s.to_string()).collect())),
    }
}

pub fn write_velocities(out: impl Write, samples: &[VelocitySample]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(VELOCITY_HEADER)?;
    for s in samples {
        w.write_record([s.t.to_string(), s.vx.to_string(), s.vz.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_positions(out: impl Write, samples: &[PositionSample]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(POSITION_HEADER)?;
    for s in samples {
        w.write_record([s.t.to_string(), s.px.to_string(), s.py.to_string(), s.pz.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a cadence schedule: header `duration,omega`, one segment per row.
pub fn read_profile(input: impl Read, phase0: f64) -> Result<WalkProfile, IoError> {
    let mut rdr = reader(input);
    let header = header_of(&mut rdr)?;
    if header != PROFILE_HEADER {
        return Err(IoError::UnknownHeader(header));
    }
    let mut segments = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let field = |c: usize| -> Result<f64, IoError> {
            rec.get(c)
                .and_then(|f| f.parse::<f64>().ok())
                .ok_or_else(|| IoError::Malformed { row, column: c + 1, message: "expected a number".into() })
        };
        segments.push(WalkSegment { duration: field(0)?, omega: field(1)? });
    }
    if segments.is_empty() {
        return Err(IoError::Empty);
    }
    Ok(WalkProfile { segments, phase0 })
}
