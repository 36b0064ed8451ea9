//! Per-frame RGB-D segmentation: colour and depth mixtures, registration of
//! the depth mask into the colour grid, and counter-based fusion.
//!
//! [`RgbdSegmenter`] is the structure-of-arrays, data-parallel path.
//! [`AosSegmenter`] is the sequential array-of-structures baseline; it runs
//! the same per-pixel arithmetic and yields identical masks.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::dataset::{FrameSet, RawFrame};
use crate::engine::WorkerPool;
use crate::error::{Error, Result};
use crate::fusion::FusionState;
use crate::mask::{ForegroundMask, PixelLabel};
use crate::mixture::{MixtureConfig, PixelMixture};
use crate::registration::{register_mask, CameraRig};
use crate::segmenter::{DepthRange, FramePlanes, ModelBank, ModelMode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rgb,
    Depth,
    Fused,
    Augmented,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Rgb, Method::Depth, Method::Fused, Method::Augmented];

    pub fn name(self) -> &'static str {
        match self {
            Method::Rgb => "rgb",
            Method::Depth => "depth",
            Method::Fused => "fused",
            Method::Augmented => "augmented",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method '{s}', expected one of rgb, depth, fused, augmented")))
    }
}

/// The streams that must actually be computed for a requested method set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Streams {
    pub rgb: bool,
    pub depth: bool,
    pub fused: bool,
    pub augmented: bool,
}

impl Streams {
    pub fn for_methods(methods: &BTreeSet<Method>) -> Self {
        let fused = methods.contains(&Method::Fused);
        Self {
            rgb: fused || methods.contains(&Method::Rgb),
            depth: fused || methods.contains(&Method::Depth),
            fused,
            augmented: methods.contains(&Method::Augmented),
        }
    }

    pub fn methods(&self) -> Vec<Method> {
        let flags = [self.rgb, self.depth, self.fused, self.augmented];
        Method::ALL.into_iter().zip(flags).filter(|(_, on)| *on).map(|(m, _)| m).collect()
    }
}

/// Masks produced for one frame; a field is `None` when its stream was not computed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameMasks {
    pub index: usize,
    pub rgb: Option<ForegroundMask>,
    /// Already in the colour grid.
    pub depth: Option<ForegroundMask>,
    pub fused: Option<ForegroundMask>,
    pub augmented: Option<ForegroundMask>,
}

impl FrameMasks {
    pub fn get(&self, method: Method) -> Option<&ForegroundMask> {
        match method {
            Method::Rgb => self.rgb.as_ref(),
            Method::Depth => self.depth.as_ref(),
            Method::Fused => self.fused.as_ref(),
            Method::Augmented => self.augmented.as_ref(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Method, &ForegroundMask)> {
        Method::ALL.into_iter().filter_map(|m| self.get(m).map(|mask| (m, mask)))
    }
}

/// Geometry of a sequence as the segmenters need it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StreamGeometry {
    pub color_dims: (usize, usize),
    pub depth_dims: (usize, usize),
    /// `Some` when depth must be reprojected into the colour grid.
    pub rig: Option<CameraRig>,
}

impl StreamGeometry {
    pub fn registered(width: usize, height: usize) -> Self {
        Self {
            color_dims: (width, height),
            depth_dims: (width, height),
            rig: None,
        }
    }

    fn validate(&self, streams: &Streams) -> Result<()> {
        match &self.rig {
            Some(rig) => {
                rig.validate()?;
                if streams.augmented {
                    return Err(Error::Config("the augmented method needs depth registered to the colour grid".into()));
                }
            }
            None if self.depth_dims != self.color_dims && (streams.depth || streams.augmented) => {
                return Err(Error::dims(self.color_dims, self.depth_dims));
            }
            None => {}
        }
        Ok(())
    }
}

/// Shared tail of both segmenters: registration and fusion.
#[derive(Clone, Debug)]
struct FusionStage {
    geometry: StreamGeometry,
    dilation_radius: usize,
    state: Option<FusionState>,
}

impl FusionStage {
    fn new(config: &RunConfig, geometry: StreamGeometry, streams: &Streams) -> Result<Self> {
        let (w, h) = geometry.color_dims;
        let state = if streams.fused {
            Some(FusionState::reset(w, h, config.fusion.initial_label, config.fusion.counter_limit)?)
        } else {
            None
        };
        Ok(Self {
            geometry,
            dilation_radius: config.registration.dilation_radius,
            state,
        })
    }

    fn register(&self, depth_mask: ForegroundMask, depth_raw: &[u16]) -> Result<ForegroundMask> {
        match &self.geometry.rig {
            None => Ok(depth_mask),
            Some(rig) => register_mask(&depth_mask, depth_raw, rig, self.geometry.color_dims, self.dilation_radius),
        }
    }

    fn fuse(
        &mut self,
        rgb: Option<&ForegroundMask>,
        depth: Option<&ForegroundMask>,
        pool: &WorkerPool,
    ) -> Result<Option<ForegroundMask>> {
        match (&mut self.state, rgb, depth) {
            (Some(state), Some(r), Some(d)) => state.fuse_step_with(r, d, pool).map(Some),
            _ => Ok(None),
        }
    }
}

fn check_frame(index: usize, color: (usize, usize), depth: (usize, usize), geometry: &StreamGeometry) -> Result<()> {
    if color != geometry.color_dims || depth != geometry.depth_dims {
        let err = if color != geometry.color_dims {
            Error::dims(geometry.color_dims, color)
        } else {
            Error::dims(geometry.depth_dims, depth)
        };
        return Err(Error::Frame {
            index,
            path: Default::default(),
            reason: err.to_string(),
        });
    }
    Ok(())
}

/// Structure-of-arrays segmenter; pixel work is spread over a worker pool.
pub struct RgbdSegmenter {
    config: RunConfig,
    streams: Streams,
    color: Option<ModelBank>,
    depth: Option<ModelBank>,
    augmented: Option<ModelBank>,
    tail: FusionStage,
    pool: WorkerPool,
}

impl RgbdSegmenter {
    pub fn new(config: &RunConfig, methods: &BTreeSet<Method>, geometry: StreamGeometry, pool: WorkerPool) -> Result<Self> {
        config.validate()?;
        let streams = Streams::for_methods(methods);
        geometry.validate(&streams)?;
        let (cw, ch) = geometry.color_dims;
        let (dw, dh) = geometry.depth_dims;
        let bank = |on: bool, w, h, mode, cfg: &MixtureConfig| -> Result<Option<ModelBank>> {
            on.then(|| ModelBank::new(w, h, mode, cfg)).transpose()
        };
        Ok(Self {
            config: *config,
            streams,
            color: bank(streams.rgb, cw, ch, ModelMode::Color3, &config.color)?,
            depth: bank(streams.depth, dw, dh, ModelMode::Depth1, &config.depth)?,
            augmented: bank(streams.augmented, cw, ch, ModelMode::Augmented4, &config.augmented)?,
            tail: FusionStage::new(config, geometry, &streams)?,
            pool,
        })
    }

    pub fn streams(&self) -> Streams {
        self.streams
    }

    pub fn color_bank(&self) -> Option<&ModelBank> {
        self.color.as_ref()
    }

    pub fn depth_bank(&self) -> Option<&ModelBank> {
        self.depth.as_ref()
    }

    pub fn augmented_bank(&self) -> Option<&ModelBank> {
        self.augmented.as_ref()
    }

    pub fn fusion_state(&self) -> Option<&FusionState> {
        self.tail.state.as_ref()
    }

    pub fn process(&mut self, frame: &FrameSet) -> Result<FrameMasks> {
        check_frame(frame.index, frame.dims(), frame.depth_dims, &self.tail.geometry)?;
        let [r, g, b] = frame.rgb_planes();
        let cfg = &self.config;
        let pool = &self.pool;

        let rgb = match &mut self.color {
            Some(bank) => Some(bank.segment_frame(FramePlanes::Color { r, g, b }, &cfg.color, pool)?),
            None => None,
        };
        let depth = match &mut self.depth {
            Some(bank) => {
                let raw = FramePlanes::Depth {
                    raw: &frame.depth,
                    scale: frame.depth_scale,
                };
                let mask = bank.segment_frame(raw, &cfg.depth, pool)?;
                Some(self.tail.register(mask, &frame.depth)?)
            }
            None => None,
        };
        let augmented = match &mut self.augmented {
            Some(bank) => Some(bank.segment_augmented(
                [r, g, b],
                &frame.depth,
                frame.depth_scale,
                cfg.augmented_depth_range,
                &cfg.augmented,
                pool,
            )?),
            None => None,
        };
        let fused = self.tail.fuse(rgb.as_ref(), depth.as_ref(), pool)?;
        Ok(FrameMasks {
            index: frame.index,
            rgb,
            depth,
            fused,
            augmented,
        })
    }
}

/// One pixel's model in the array-of-structures layout.
type AosModel<const D: usize> = Vec<Option<PixelMixture<D>>>;

/// Sequential array-of-structures segmenter reading interleaved colour.
pub struct AosSegmenter {
    config: RunConfig,
    streams: Streams,
    color: Option<AosModel<3>>,
    depth: Option<AosModel<1>>,
    augmented: Option<AosModel<4>>,
    tail: FusionStage,
}

fn aos_step<const D: usize>(
    model: &mut AosModel<D>,
    width: usize,
    height: usize,
    config: &MixtureConfig,
    mut observe: impl FnMut(usize) -> Option<[f32; D]>,
) -> Result<ForegroundMask> {
    let mut bits = vec![0u8; width * height];
    for (i, slot) in model.iter_mut().enumerate() {
        let Some(value) = observe(i) else {
            continue;
        };
        bits[i] = match slot {
            Some(mixture) => mixture.step(&value, config).bit(),
            None => {
                *slot = Some(PixelMixture::init_unchecked(value, config));
                PixelLabel::Background.bit()
            }
        };
    }
    ForegroundMask::from_bits(width, height, bits)
}

impl AosSegmenter {
    pub fn new(config: &RunConfig, methods: &BTreeSet<Method>, geometry: StreamGeometry) -> Result<Self> {
        config.validate()?;
        let streams = Streams::for_methods(methods);
        geometry.validate(&streams)?;
        let (cw, ch) = geometry.color_dims;
        let (dw, dh) = geometry.depth_dims;
        Ok(Self {
            config: *config,
            streams,
            color: streams.rgb.then(|| vec![None; cw * ch]),
            depth: streams.depth.then(|| vec![None; dw * dh]),
            augmented: streams.augmented.then(|| vec![None; cw * ch]),
            tail: FusionStage::new(config, geometry, &streams)?,
        })
    }

    pub fn streams(&self) -> Streams {
        self.streams
    }

    /// Reassembled mixture of colour pixel `i`, for comparison with the SoA banks.
    pub fn color_mixture(&self, i: usize) -> Option<PixelMixture<3>> {
        self.color.as_ref().and_then(|m| m[i])
    }

    pub fn depth_mixture(&self, i: usize) -> Option<PixelMixture<1>> {
        self.depth.as_ref().and_then(|m| m[i])
    }

    pub fn process(&mut self, frame: &RawFrame) -> Result<FrameMasks> {
        check_frame(frame.index, (frame.width, frame.height), frame.depth_dims, &self.tail.geometry)?;
        let (cw, ch) = self.tail.geometry.color_dims;
        let (dw, dh) = self.tail.geometry.depth_dims;
        let cfg = &self.config;
        let rgb_px = |i: usize| {
            let p = &frame.rgb[i * 3..i * 3 + 3];
            [p[0] as f32, p[1] as f32, p[2] as f32]
        };
        let scale = frame.depth_scale;

        let rgb = match &mut self.color {
            Some(model) => Some(aos_step(model, cw, ch, &cfg.color, |i| Some(rgb_px(i)))?),
            None => None,
        };
        let depth = match &mut self.depth {
            Some(model) => {
                let mask = aos_step(model, dw, dh, &cfg.depth, |i| match frame.depth[i] {
                    0 => None,
                    z => Some([z as f32 * scale]),
                })?;
                Some(self.tail.register(mask, &frame.depth)?)
            }
            None => None,
        };
        let range: DepthRange = cfg.augmented_depth_range;
        let augmented = match &mut self.augmented {
            Some(model) => Some(aos_step(model, cw, ch, &cfg.augmented, |i| {
                let [r, g, b] = rgb_px(i);
                Some([r, g, b, range.rescale(frame.depth[i] as f32 * scale)])
            })?),
            None => None,
        };
        let fused = self.tail.fuse(rgb.as_ref(), depth.as_ref(), &WorkerPool::sequential())?;
        Ok(FrameMasks {
            index: frame.index,
            rgb,
            depth,
            fused,
            augmented,
        })
    }
}
