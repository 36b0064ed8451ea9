//! Execution machinery: structure-of-arrays plane layout, a deterministic
//! row-partitioned worker pool, and the three-stage ingest/process/emit
//! pipeline.

mod layout;
mod pipeline;
mod workers;

pub use layout::{aos_to_soa, soa_to_aos, PlaneRole, PlaneSet};
pub use pipeline::{fps, run_pipeline, run_sequential, PipelineStats};
pub use workers::{par_for_pixels, row_ranges, split_plane_rows, split_planes_rows, WorkerPool};
