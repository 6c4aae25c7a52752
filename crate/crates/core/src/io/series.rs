//! Diagnostics time series as CSV
//!
//! The header follows the field order of [`DiagnosticsRecord`]. Floats are
//! written in scientific notation with 17 significant digits, which parses
//! back to the identical f64.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::diagnostics::DiagnosticsRecord;

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("CSV header does not match the diagnostics record layout")]
    Header,
}

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn row(r: &DiagnosticsRecord) -> [String; 16] {
    [
        float(r.t),
        float(r.mass),
        float(r.e_kin),
        float(r.e_free),
        float(r.e_total),
        float(r.dissipation),
        float(r.theta_min),
        float(r.theta_max),
        float(r.delta),
        float(r.grad_mu_l2),
        float(r.mean_phi),
        float(r.sobolev_h1_theta),
        float(r.sobolev_h1_u),
        float(r.d0eps_norm),
        r.clamp_events.to_string(),
        float(r.energy_residual),
    ]
}

pub fn format_csv(records: &[DiagnosticsRecord]) -> Result<String, SeriesError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(DiagnosticsRecord::FIELDS)?;
    for r in records {
        w.write_record(row(r))?;
    }
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("ASCII output"))
}

pub fn parse_csv(text: &str) -> Result<Vec<DiagnosticsRecord>, SeriesError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    if r.headers()?.iter().ne(DiagnosticsRecord::FIELDS) {
        return Err(SeriesError::Header);
    }
    Ok(r.deserialize().collect::<Result<Vec<_>, _>>()?)
}

pub fn write_csv(path: &Path, records: &[DiagnosticsRecord]) -> Result<(), SeriesError> {
    fs::write(path, format_csv(records)?).map_err(|source| SeriesError::Io {
        path: path.display().to_string(),
        source,
    })
}
