//! Counter-based fusion of the colour and registered depth foreground masks.
//!
//! Where both masks agree the fused label follows them and the pixel's
//! counter resets. Where they disagree the fused label is held and the
//! counter drifts toward `+limit` (fused label equals the colour vote) or
//! `-limit` (it does not). A saturated counter is consumed on the next
//! disagreeing frame: `+limit` adopts the colour vote, `-limit` the depth
//! vote, and the counter resets.

use crate::engine::{row_ranges, split_plane_rows, WorkerPool};
use crate::error::{Error, Result};
use crate::mask::{ForegroundMask, PixelLabel};

pub const DEFAULT_COUNTER_LIMIT: i8 = 3;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FusionState {
    out: ForegroundMask,
    cpt: Vec<i8>,
    limit: i8,
}

/// One pixel of the fusion rule; returns the new `(out, cpt)`.
#[inline]
pub fn fuse_pixel(out: u8, cpt: i8, rgb: u8, depth: u8, limit: i8) -> (u8, i8) {
    if rgb == depth {
        (depth, 0)
    } else if cpt == limit {
        (rgb, 0)
    } else if cpt == -limit {
        (depth, 0)
    } else if out == rgb {
        (out, cpt + 1)
    } else {
        (out, cpt - 1)
    }
}

impl FusionState {
    /// Fresh state: every pixel holds `initial`, all counters zero.
    pub fn reset(width: usize, height: usize, initial: PixelLabel, counter_limit: i8) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Config(format!("empty fusion plane {width}x{height}")));
        }
        if counter_limit <= 0 {
            return Err(Error::Config(format!("counter_limit must be positive, got {counter_limit}")));
        }
        Ok(Self {
            out: ForegroundMask::filled(width, height, initial),
            cpt: vec![0; width * height],
            limit: counter_limit,
        })
    }

    pub fn output(&self) -> &ForegroundMask {
        &self.out
    }

    pub fn counters(&self) -> &[i8] {
        &self.cpt
    }

    pub fn counter_limit(&self) -> i8 {
        self.limit
    }

    /// Advances every pixel by one frame and returns the fused mask.
    pub fn fuse_step(&mut self, rgb: &ForegroundMask, depth: &ForegroundMask) -> Result<ForegroundMask> {
        self.fuse_step_with(rgb, depth, &WorkerPool::sequential())
    }

    pub fn fuse_step_with(
        &mut self,
        rgb: &ForegroundMask,
        depth: &ForegroundMask,
        pool: &WorkerPool,
    ) -> Result<ForegroundMask> {
        let (w, h) = self.out.dims();
        rgb.check_dims(w, h)?;
        depth.check_dims(w, h)?;
        let limit = self.limit;
        let ranges = row_ranges(h, pool.workers());
        let outs = split_plane_rows(self.out.bits_mut(), w, &ranges);
        let cpts = split_plane_rows(&mut self.cpt, w, &ranges);
        let items: Vec<_> = ranges.iter().map(|r| r.start * w).zip(outs.into_iter().zip(cpts)).collect();
        let (rb, db) = (rgb.bits(), depth.bits());
        pool.run(items, |(first, (out, cpt))| {
            for j in 0..out.len() {
                let (o, c) = fuse_pixel(out[j], cpt[j], rb[first + j], db[first + j], limit);
                out[j] = o;
                cpt[j] = c;
            }
        });
        Ok(self.out.clone())
    }
}
