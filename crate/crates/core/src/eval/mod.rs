//! Segmentation quality metrics and throughput measurement.

mod metrics;
mod report;
mod throughput;

pub use metrics::{confusion_counts, f1, precision, recall, ConfusionCounts};
pub use report::{evaluate_sequence, Aggregate, EvalAccumulator, EvalReport, FrameMetrics, CSV_HEADER};
pub use throughput::{measure_throughput, run_engine, EngineKind, Segmented, ThroughputResult};
