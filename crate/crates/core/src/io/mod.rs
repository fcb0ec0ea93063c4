//! Configuration, run archives and file formats.

mod archive;
mod binary;
mod config;
mod series;
mod stats;
mod vtk;

pub use archive::{resume_archive, run_archive, ArchiveSnapshots, Metadata, Progress, RunArchive, RunSummary};
pub use binary::{
    read_checkpoint, read_snapshot_bin, read_snapshot_header, write_checkpoint, write_snapshot_bin, BinaryHeader,
    Checkpoint, CheckpointTrailer,
};
pub use config::{
    parse_config, ExperimentRef, OutputPlan, ResolvedRun, RunConfig, StatsPlan, DEFAULT_ALPHA, DEFAULT_DT_OVER_H,
    DEFAULT_T_END,
};
pub use series::{header as series_header, read_series, SeriesRow, SeriesWriter, SERIES_COLUMNS};
pub use stats::{functionals, histogram_csv, line_cut, write_stats, MomentEntry, StatsReport, StatsSelection, CUT_LINES, MEASURED};
pub use vtk::VtkData;

/// `format` member of metadata files.
pub const METADATA_FORMAT: &str = "rbnsf-metadata-1";
