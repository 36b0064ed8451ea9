use crate::engine::{aos_to_soa, PlaneSet};
use crate::error::Result;
use crate::mask::ForegroundMask;

/// A decoded time step with interleaved colour, as it comes off disk or the
/// generator.
#[derive(Clone, Debug, PartialEq)]
pub struct RawFrame {
    pub index: usize,
    pub width: usize,
    pub height: usize,
    /// `RGBRGB...`, row-major.
    pub rgb: Vec<u8>,
    /// Raw depth units; 0 means no reading.
    pub depth: Vec<u16>,
    /// Depth grid size; differs from the colour size only for unregistered streams.
    pub depth_dims: (usize, usize),
    pub depth_scale: f32,
    pub gt: Option<ForegroundMask>,
}

/// One time step in planar layout: R, G and B planes plus raw depth.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameSet {
    pub index: usize,
    pub color: PlaneSet<u8>,
    pub depth: Vec<u16>,
    pub depth_dims: (usize, usize),
    pub depth_scale: f32,
    pub gt: Option<ForegroundMask>,
}

impl RawFrame {
    pub fn into_frame_set(self) -> Result<FrameSet> {
        let color = aos_to_soa(self.width, self.height, &self.rgb)?;
        Ok(FrameSet {
            index: self.index,
            color,
            depth: self.depth,
            depth_dims: self.depth_dims,
            depth_scale: self.depth_scale,
            gt: self.gt,
        })
    }
}

impl FrameSet {
    pub fn width(&self) -> usize {
        self.color.width()
    }

    pub fn height(&self) -> usize {
        self.color.height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.color.dims()
    }

    pub fn rgb_planes(&self) -> [&[u8]; 3] {
        [self.color.plane(0), self.color.plane(1), self.color.plane(2)]
    }

    /// Depth of pixel `i` in millimetres; `None` for the no-reading sentinel.
    pub fn depth_mm(&self, i: usize) -> Option<f32> {
        match self.depth[i] {
            0 => None,
            raw => Some(raw as f32 * self.depth_scale),
        }
    }
}
