//! CSV formats: measured-statistics tables in, bound tables out.
//!
//! Numbers are written in scientific notation with 17 significant digits,
//! which round-trips every `f64` exactly.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::error::Error;
use crate::types::{BoundsResult, ChannelPoint, MeasuredStats};

pub const MEASURED_HEADER: [&str; 6] = ["loss_db", "q_mu", "e_mu", "q_nu", "e_nu", "y0"];
pub const BOUNDS_HEADER: [&str; 8] = [
    "loss_db", "y1_l", "y12_l", "q12_l", "eps12_u", "r_l", "clamped", "insecure",
];

#[derive(Debug, Error)]
pub enum TableError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: invalid {field}: {reason}")]
    Invalid {
        line: u64,
        field: &'static str,
        reason: String,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// One row of a measured-statistics table.
pub type MeasuredRow = (ChannelPoint, MeasuredStats);

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn parse_measured_table(path: &Path) -> Result<Vec<MeasuredRow>, TableError> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|source| TableError::Io {
            path: path.to_owned(),
            source,
        })?;
    parse_measured_str(&text)
}

pub fn parse_measured_str(text: &str) -> Result<Vec<MeasuredRow>, TableError> {
    if text.trim().is_empty() {
        return Err(TableError::Parse {
            line: 1,
            message: "empty input; expected a header row".into(),
        });
    }
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = rdr.headers()?.clone();
    if header.iter().ne(MEASURED_HEADER.iter().copied()) {
        return Err(TableError::Parse {
            line: 1,
            message: format!(
                "header `{}` does not match `{}`",
                header.iter().collect::<Vec<_>>().join(","),
                MEASURED_HEADER.join(",")
            ),
        });
    }

    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != MEASURED_HEADER.len() {
            return Err(TableError::Parse {
                line,
                message: format!("expected {} fields, found {}", MEASURED_HEADER.len(), rec.len()),
            });
        }
        let mut v = [0f64; 6];
        for (i, (field, slot)) in rec.iter().zip(v.iter_mut()).enumerate() {
            *slot = field.parse().map_err(|_| TableError::Parse {
                line,
                message: format!("{}: `{field}` is not a number", MEASURED_HEADER[i]),
            })?;
        }
        let invalid = |e: Error| match e {
            Error::InvalidField { field, reason } => TableError::Invalid {
                line,
                field,
                reason,
            },
            other => TableError::Parse {
                line,
                message: other.to_string(),
            },
        };
        let channel = ChannelPoint::new(v[0]).map_err(invalid)?;
        let stats = MeasuredStats::new(v[1], v[2], v[3], v[4], v[5]).map_err(invalid)?;
        rows.push((channel, stats));
    }
    if rows.is_empty() {
        return Err(TableError::Parse {
            line: 2,
            message: "no data rows".into(),
        });
    }
    Ok(rows)
}

pub fn write_measured_table<W: Write>(w: W, rows: &[MeasuredRow]) -> Result<(), TableError> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(MEASURED_HEADER)?;
    for (c, s) in rows {
        wtr.write_record(
            [c.loss_db(), s.q_mu(), s.e_mu(), s.q_nu(), s.e_nu(), s.y0()].map(fmt_f64),
        )?;
    }
    wtr.flush().map_err(|source| TableError::Io {
        path: PathBuf::from("<writer>"),
        source,
    })?;
    Ok(())
}

pub fn write_bounds_table<W: Write>(
    w: W,
    rows: &[(ChannelPoint, BoundsResult)],
) -> Result<(), TableError> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(BOUNDS_HEADER)?;
    for (c, b) in rows {
        let mut rec: Vec<String> = [c.loss_db(), b.y1_l, b.y12_l, b.q12_l, b.eps12_u, b.r_l]
            .into_iter()
            .map(fmt_f64)
            .collect();
        rec.push(b.clamped.to_string());
        rec.push(b.insecure.to_string());
        wtr.write_record(&rec)?;
    }
    wtr.flush().map_err(|source| TableError::Io {
        path: PathBuf::from("<writer>"),
        source,
    })?;
    Ok(())
}
