//! Configuration ingestion and output formats.

pub mod config;
pub mod heatmap;
pub mod report;
pub mod series;
pub mod snapshot;

pub use config::{parse_config, ConfigError, ConfigIssue, Emit, InitialSource, RunConfig};
pub use heatmap::{encode_pgm, write_heatmap};
pub use report::{write_report, CheckResult};
pub use series::{format_csv, parse_csv, write_csv, SeriesError};
pub use snapshot::{read_snapshot, write_snapshot, Snapshot, SnapshotError};
