//! Binary state snapshots
//!
//! Layout (little endian): magic `NSCH1`, u16 format version, u32 N, f64 t,
//! then N*N f64 values each of theta, u1, u2 in physical space, row-major
//! with rows running over x2.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::dynamics::SimState;

pub const MAGIC: &[u8; 5] = b"NSCH1";
pub const FORMAT_VERSION: u16 = 1;
const HEADER_LEN: usize = 5 + 2 + 4 + 8;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("not a snapshot (bad magic bytes)")]
    BadMagic,
    #[error("unsupported snapshot format version {found} (this reader understands {FORMAT_VERSION})")]
    UnsupportedVersion { found: u16 },
    #[error("truncated snapshot: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("snapshot has {extra} trailing bytes")]
    TrailingBytes { extra: usize },
    #[error("snapshot arrays must each hold N*N = {expected} values")]
    Shape { expected: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub n: u32,
    pub t: f64,
    pub theta: Vec<f64>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
}

impl Snapshot {
    pub fn from_state(state: &SimState) -> Self {
        Snapshot {
            n: state.theta.grid().n() as u32,
            t: state.t,
            theta: state.theta.to_values(),
            u1: state.u.u1.to_values(),
            u2: state.u.u2.to_values(),
        }
    }

    pub fn encode(&self) -> Result<Vec<u8>, SnapshotError> {
        let len = (self.n as usize).pow(2);
        if [&self.theta, &self.u1, &self.u2].iter().any(|v| v.len() != len) {
            return Err(SnapshotError::Shape { expected: len });
        }
        let mut out = Vec::with_capacity(HEADER_LEN + 24 * len);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.n.to_le_bytes());
        out.extend_from_slice(&self.t.to_le_bytes());
        for v in self.theta.iter().chain(&self.u1).chain(&self.u2) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, SnapshotError> {
        if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
            return Err(SnapshotError::BadMagic);
        }
        if bytes.len() < HEADER_LEN {
            return Err(SnapshotError::Truncated {
                expected: HEADER_LEN,
                found: bytes.len(),
            });
        }
        let version = u16::from_le_bytes([bytes[5], bytes[6]]);
        if version != FORMAT_VERSION {
            return Err(SnapshotError::UnsupportedVersion { found: version });
        }
        let n = u32::from_le_bytes(bytes[7..11].try_into().expect("4 bytes"));
        let t = f64::from_le_bytes(bytes[11..19].try_into().expect("8 bytes"));
        let len = (n as usize).pow(2);
        let expected = HEADER_LEN + 24 * len;
        if bytes.len() < expected {
            return Err(SnapshotError::Truncated {
                expected,
                found: bytes.len(),
            });
        }
        if bytes.len() > expected {
            return Err(SnapshotError::TrailingBytes {
                extra: bytes.len() - expected,
            });
        }
        let mut values = bytes[HEADER_LEN..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
        let mut take = || values.by_ref().take(len).collect::<Vec<f64>>();
        Ok(Snapshot {
            n,
            t,
            theta: take(),
            u1: take(),
            u2: take(),
        })
    }
}

pub fn write_snapshot(path: &Path, snap: &Snapshot) -> Result<(), SnapshotError> {
    fs::write(path, snap.encode()?).map_err(|source| SnapshotError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot, SnapshotError> {
    let bytes = fs::read(path).map_err(|source| SnapshotError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Snapshot::decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Snapshot {
        let n = 8;
        let vals = |k: f64| (0..n * n).map(|i| (i as f64 * k).sin() * 1e-3 + k).collect();
        Snapshot {
            n: n as u32,
            t: 0.125,
            theta: vals(0.3),
            u1: vals(-1.7),
            u2: vals(f64::MIN_POSITIVE),
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let s = sample();
        let bytes = s.encode().unwrap();
        assert_eq!(bytes.len(), 19 + 24 * 64);
        let back = Snapshot::decode(&bytes).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back.theta), bits(&s.theta));
        assert_eq!(bits(&back.u2), bits(&s.u2));
        assert_eq!(back.t.to_bits(), s.t.to_bits());
        assert_eq!(back.encode().unwrap(), bytes);
    }

    #[test]
    fn structured_errors() {
        let bytes = sample().encode().unwrap();
        assert!(matches!(
            Snapshot::decode(&bytes[..bytes.len() - 3]),
            Err(SnapshotError::Truncated { .. })
        ));
        assert!(matches!(Snapshot::decode(&bytes[..10]), Err(SnapshotError::Truncated { .. })));
        let mut v2 = bytes.clone();
        v2[5] = 2;
        assert!(matches!(
            Snapshot::decode(&v2),
            Err(SnapshotError::UnsupportedVersion { found: 2 })
        ));
        assert!(matches!(Snapshot::decode(b"PGM5 hello"), Err(SnapshotError::BadMagic)));
        let mut long = bytes;
        long.push(0);
        assert!(matches!(Snapshot::decode(&long), Err(SnapshotError::TrailingBytes { extra: 1 })));
    }
}
