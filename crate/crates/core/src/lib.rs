//! Per-pixel Gaussian mixture background subtraction for RGB-D streams.
//!
//! Colour and depth are modelled independently, the depth mask is
//! reprojected into the colour grid when needed, and the two masks are fused
//! by a per-pixel persistence counter. A four-channel variant models colour
//! and depth in one mixture.
//!
//! ```no_run
//! use std::collections::BTreeSet;
//! use rgbd_gmm::{RunConfig, Method, RgbdSegmenter, SequenceReader, WorkerPool};
//!
//! let reader = SequenceReader::open("seq/manifest.json")?;
//! let methods = BTreeSet::from([Method::Fused]);
//! let mut seg = RgbdSegmenter::new(&RunConfig::default(), &methods, reader.geometry()?, WorkerPool::new(0)?)?;
//! for i in 0..reader.len() {
//!     let masks = seg.process(&reader.read(i)?)?;
//!     println!("{i}: {}", masks.fused.unwrap().count_foreground());
//! }
//! # Ok::<(), rgbd_gmm::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dataset;
pub mod engine;
mod error;
pub mod eval;
pub mod fusion;
mod mask;
pub mod mixture;
pub mod registration;
pub mod rgbd;
pub mod segmenter;

pub use config::RunConfig;
pub use dataset::{generate_synthetic, load_sequence, FrameSet, RawFrame, ScenarioSpec, SequenceManifest, SequenceReader};
pub use engine::{PipelineStats, WorkerPool};
pub use error::{Error, Result};
pub use eval::{ConfusionCounts, EngineKind, EvalReport};
pub use fusion::FusionState;
pub use mask::{ForegroundMask, PixelLabel};
pub use mixture::{step_pixel, MixtureConfig, PixelMixture};
pub use registration::CameraRig;
pub use rgbd::{AosSegmenter, FrameMasks, Method, RgbdSegmenter, StreamGeometry};
pub use segmenter::{ModelBank, ModelMode};
