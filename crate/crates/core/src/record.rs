//! Simulation log records and their CSV / newline-delimited JSON renderings.
//!
//! Both formats write floats with 17 significant digits, so reading a CSV log back
//! reproduces the records bit for bit.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fmt::{json_array, json_f64, sig17};

/// One simulation step: the state at time `t` and everything commanded from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub t: f64,
    pub q: Vec<f64>,
    pub qdot: Vec<f64>,
    /// End-effector position in the base frame.
    pub position: [f64; 3],
    /// End-effector orientation `(w, x, y, z)`.
    pub orientation: [f64; 4],
    /// Pose error in the controller's task frame.
    pub pose_error: [f64; 6],
    pub tau_cartesian: Vec<f64>,
    pub tau_nullspace: Vec<f64>,
    pub tau_wrench: Vec<f64>,
    pub tau_gravity: Vec<f64>,
    /// Final command after rate limiting and effort clamping.
    pub tau_c: Vec<f64>,
    /// Wrench applied to the end effector by the environment (base frame).
    pub external_wrench: [f64; 6],
    /// Filtered wrench command in effect.
    pub commanded_wrench: [f64; 6],
    pub k_cartesian: [f64; 6],
    pub d_cartesian: [f64; 6],
    pub k_nullspace: Vec<f64>,
    pub d_nullspace: Vec<f64>,
}

impl LogRecord {
    pub fn dof(&self) -> usize {
        self.q.len()
    }

    fn fields(&self) -> [(&'static str, &[f64]); 17] {
        [
            ("t", std::slice::from_ref(&self.t)),
            ("q", &self.q),
            ("qdot", &self.qdot),
            ("position", &self.position),
            ("orientation", &self.orientation),
            ("pose_error", &self.pose_error),
            ("tau_cartesian", &self.tau_cartesian),
            ("tau_nullspace", &self.tau_nullspace),
            ("tau_wrench", &self.tau_wrench),
            ("tau_gravity", &self.tau_gravity),
            ("tau_c", &self.tau_c),
            ("external_wrench", &self.external_wrench),
            ("commanded_wrench", &self.commanded_wrench),
            ("k_cartesian", &self.k_cartesian),
            ("d_cartesian", &self.d_cartesian),
            ("k_nullspace", &self.k_nullspace),
            ("d_nullspace", &self.d_nullspace),
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.fields().iter().all(|(_, v)| v.iter().all(|x| x.is_finite()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogFormat {
    #[default]
    Csv,
    Ndjson,
}

impl std::str::FromStr for LogFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(LogFormat::Csv),
            "ndjson" => Ok(LogFormat::Ndjson),
            other => Err(format!("unknown log format '{other}' (expected csv or ndjson)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

const SCALAR_FIELDS: [&str; 1] = ["t"];

/// Column names for a chain with `n` joints.
pub fn csv_header(n: usize) -> Vec<String> {
    let mut cols = Vec::new();
    let sample = empty_record(n);
    for (name, values) in sample.fields() {
        if SCALAR_FIELDS.contains(&name) {
            cols.push(name.to_string());
        } else {
            cols.extend((0..values.len()).map(|i| format!("{name}_{i}")));
        }
    }
    cols
}

fn empty_record(n: usize) -> LogRecord {
    LogRecord {
        t: 0.0,
        q: vec![0.0; n],
        qdot: vec![0.0; n],
        position: [0.0; 3],
        orientation: [0.0; 4],
        pose_error: [0.0; 6],
        tau_cartesian: vec![0.0; n],
        tau_nullspace: vec![0.0; n],
        tau_wrench: vec![0.0; n],
        tau_gravity: vec![0.0; n],
        tau_c: vec![0.0; n],
        external_wrench: [0.0; 6],
        commanded_wrench: [0.0; 6],
        k_cartesian: [0.0; 6],
        d_cartesian: [0.0; 6],
        k_nullspace: vec![0.0; n],
        d_nullspace: vec![0.0; n],
    }
}

pub fn write_csv<W: Write>(mut out: W, records: &[LogRecord]) -> io::Result<()> {
    let n = records.first().map_or(0, LogRecord::dof);
    writeln!(out, "{}", csv_header(n).join(","))?;
    for record in records {
        let cells: Vec<String> = record
            .fields()
            .iter()
            .flat_map(|(_, values)| values.iter().map(|&v| sig17(v)))
            .collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

pub fn write_ndjson<W: Write>(mut out: W, records: &[LogRecord]) -> io::Result<()> {
    for record in records {
        let parts: Vec<String> = record
            .fields()
            .iter()
            .map(|(name, values)| {
                if SCALAR_FIELDS.contains(name) {
                    format!("\"{name}\":{}", json_f64(values[0]))
                } else {
                    format!("\"{name}\":{}", json_array(values.iter().copied()))
                }
            })
            .collect();
        writeln!(out, "{{{}}}", parts.join(","))?;
    }
    Ok(())
}

pub fn write_log<W: Write>(out: W, records: &[LogRecord], format: LogFormat) -> io::Result<()> {
    match format {
        LogFormat::Csv => write_csv(out, records),
        LogFormat::Ndjson => write_ndjson(out, records),
    }
}

/// Reads a CSV log written by [`write_csv`]. The joint count comes from the header.
pub fn read_csv<R: BufRead>(input: R) -> Result<Vec<LogRecord>, LogError> {
    let mut lines = input.lines();
    let header = match lines.next() {
        Some(line) => line?,
        None => return Ok(Vec::new()),
    };
    let columns: Vec<&str> = header.trim_end().split(',').collect();
    let n = columns.iter().filter(|c| c.starts_with("q_")).count();
    let expected = csv_header(n);
    if columns != expected {
        return Err(LogError::Parse {
            line: 1,
            message: format!("unexpected header for a {n}-joint log"),
        });
    }

    let mut records = Vec::new();
    for (index, line) in lines.enumerate() {
        let line = line?;
        let line_no = index + 2;
        if line.trim().is_empty() {
            continue;
        }
        let values = line
            .trim_end()
            .split(',')
            .map(|cell| {
                cell.parse::<f64>().map_err(|_| LogError::Parse {
                    line: line_no,
                    message: format!("not a number: '{cell}'"),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        if values.len() != expected.len() {
            return Err(LogError::Parse {
                line: line_no,
                message: format!("expected {} columns, found {}", expected.len(), values.len()),
            });
        }
        let mut it = values.into_iter();
        let mut take = |k: usize| -> Vec<f64> { it.by_ref().take(k).collect() };
        let arr3 = |v: Vec<f64>| -> [f64; 3] { [v[0], v[1], v[2]] };
        let arr4 = |v: Vec<f64>| -> [f64; 4] { [v[0], v[1], v[2], v[3]] };
        let arr6 = |v: Vec<f64>| -> [f64; 6] { [v[0], v[1], v[2], v[3], v[4], v[5]] };
        records.push(LogRecord {
            t: take(1)[0],
            q: take(n),
            qdot: take(n),
            position: arr3(take(3)),
            orientation: arr4(take(4)),
            pose_error: arr6(take(6)),
            tau_cartesian: take(n),
            tau_nullspace: take(n),
            tau_wrench: take(n),
            tau_gravity: take(n),
            tau_c: take(n),
            external_wrench: arr6(take(6)),
            commanded_wrench: arr6(take(6)),
            k_cartesian: arr6(take(6)),
            d_cartesian: arr6(take(6)),
            k_nullspace: take(n),
            d_nullspace: take(n),
        });
    }
    Ok(records)
}

/// Reads a newline-delimited JSON log written by [`write_ndjson`].
pub fn read_ndjson<R: BufRead>(input: R) -> Result<Vec<LogRecord>, LogError> {
    let mut records = Vec::new();
    for (index, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| LogError::Parse {
            line: index + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}
