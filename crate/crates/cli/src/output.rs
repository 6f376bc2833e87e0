//! Result rows and the CSV / JSON-lines writers.
//!
//! Every row type starts with `schema_version` and ends with `wall_time`, so
//! a reproducibility check can drop the last column and compare the rest
//! byte for byte.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::config::Format;

pub const SCHEMA_VERSION: u32 = 1;

/// One estimate, one checkpoint of a convergence trace, or one summary over
/// repetitions (`repetition` empty, `error` is the RMS deviation from
/// `exact`, `std_err` the spread of the repetition estimates).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub schema_version: u32,
    pub experiment: String,
    pub command: String,
    pub row_kind: String,
    pub n: usize,
    pub p: f64,
    pub t: usize,
    pub observable: String,
    pub protocol: String,
    pub repetition: Option<usize>,
    pub shots: usize,
    pub estimate: f64,
    pub exact: Option<f64>,
    pub error: Option<f64>,
    pub std_err: f64,
    pub degenerate: bool,
    pub seed: u64,
    pub wall_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlanRow {
    pub schema_version: u32,
    pub experiment: String,
    pub n: usize,
    pub k: usize,
    pub subset: usize,
    pub observables: String,
    pub blocks: String,
    pub variance: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub batches: usize,
    pub batch_size: usize,
    pub shots: usize,
    pub total_shots: usize,
    pub total_bound: f64,
    pub seed: u64,
    pub wall_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyRow {
    pub schema_version: u32,
    pub experiment: String,
    pub circuit: String,
    pub d: usize,
    pub n: usize,
    pub trials: usize,
    pub tv: f64,
    pub max_dev: f64,
    pub max_depth: usize,
    pub passed: bool,
    pub seed: u64,
    pub wall_time: f64,
}

/// Writes rows to a file, or to standard output when `path` is `None`.
pub fn write_rows<R: Serialize>(rows: &[R], format: Format, path: Option<&Path>) -> io::Result<()> {
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut sink = BufWriter::new(sink);
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut sink);
            for row in rows {
                w.serialize(row).map_err(io::Error::other)?;
            }
            w.flush()?;
        }
        Format::Jsonl => {
            for row in rows {
                serde_json::to_writer(&mut sink, row)?;
                sink.write_all(b"\n")?;
            }
        }
    }
    sink.flush()
}
