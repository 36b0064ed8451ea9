//! RGB-D sequences on disk, masks as PNG, and the synthetic scene generator.

mod frame;
mod io;
mod manifest;
pub mod synth;

pub use frame::{FrameSet, RawFrame};
pub use io::{encode_mask_png, load_mask, read_color_png, read_depth_png, read_mask_png, save_mask, write_color_png, write_depth_png};
pub use manifest::{load_sequence, Calibration, FrameEntry, SequenceManifest, SequenceReader};
pub use synth::{generate_synthetic, ScenarioSpec};
