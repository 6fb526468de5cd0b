//! On-disk formats: binary snapshots, snapshot directories and TOML run
//! configurations.

mod config;
mod snapshot;

pub use config::{AnalysisConfig, AssumptionConfig, CoverConfig, GridConfig, InitConfig, InitKind, OutputConfig, RunConfig};
pub use snapshot::{
    decode_snapshot, encode_snapshot, read_header, read_snapshot, snapshot_file_name, write_snapshot, RunMetadata,
    SnapshotDir, SnapshotHeader, SnapshotWriter, FIELD_COUNT, HEADER_LEN, MAGIC, METADATA_FILE,
};

#[cfg(test)]
mod tests;
