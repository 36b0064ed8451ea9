//! Whole-frame segmentation over structure-of-arrays model banks.
//!
//! A [`ModelBank`] keeps one contiguous plane per model parameter: `M·D`
//! mean planes, `M` variance planes and `M` weight planes. Each pixel's
//! mixture is gathered from its slot in every plane, stepped, and scattered
//! back, so a pixel evolves exactly as an isolated [`PixelMixture`] would.

use serde::{Deserialize, Serialize};

use crate::engine::{split_plane_rows, split_planes_rows, PlaneRole, PlaneSet, WorkerPool};
use crate::error::{Error, Result};
use crate::mask::{ForegroundMask, PixelLabel};
use crate::mixture::{MixtureConfig, PixelMixture};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelMode {
    Color3,
    Depth1,
    Augmented4,
}

impl ModelMode {
    pub fn dims(self) -> usize {
        match self {
            ModelMode::Color3 => 3,
            ModelMode::Depth1 => 1,
            ModelMode::Augmented4 => 4,
        }
    }
}

/// Input planes of one frame for [`ModelBank::segment_frame`].
#[derive(Clone, Copy, Debug)]
pub enum FramePlanes<'a> {
    Color { r: &'a [u8], g: &'a [u8], b: &'a [u8] },
    /// Raw sensor units, 0 meaning no reading; `scale` converts to millimetres.
    Depth { raw: &'a [u16], scale: f32 },
}

/// Linear map of depth into the 0–255 range used by the augmented mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthRange {
    pub min_mm: f32,
    pub max_mm: f32,
}

impl DepthRange {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_mm > self.min_mm) {
            return Err(Error::Config(format!(
                "depth range must be increasing, got [{}, {}]",
                self.min_mm, self.max_mm
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn rescale(&self, mm: f32) -> f32 {
        (mm - self.min_mm) * (255.0 / (self.max_mm - self.min_mm))
    }
}

impl Default for DepthRange {
    fn default() -> Self {
        Self {
            min_mm: 0.0,
            max_mm: 4000.0,
        }
    }
}

/// Source of per-pixel observation vectors; `None` marks an invalid reading.
trait Observations<const D: usize>: Sync {
    fn observe(&self, idx: usize) -> Option<[f32; D]>;
}

struct ColorObs<'a> {
    r: &'a [u8],
    g: &'a [u8],
    b: &'a [u8],
}

impl Observations<3> for ColorObs<'_> {
    #[inline]
    fn observe(&self, i: usize) -> Option<[f32; 3]> {
        Some([self.r[i] as f32, self.g[i] as f32, self.b[i] as f32])
    }
}

struct DepthObs<'a> {
    raw: &'a [u16],
    scale: f32,
}

impl Observations<1> for DepthObs<'_> {
    #[inline]
    fn observe(&self, i: usize) -> Option<[f32; 1]> {
        match self.raw[i] {
            0 => None,
            z => Some([z as f32 * self.scale]),
        }
    }
}

struct AugmentedObs<'a> {
    color: ColorObs<'a>,
    depth: DepthObs<'a>,
    range: DepthRange,
}

impl Observations<4> for AugmentedObs<'_> {
    #[inline]
    fn observe(&self, i: usize) -> Option<[f32; 4]> {
        let [r, g, b] = self.color.observe(i)?;
        // invalid depth is stacked as-is: the raw 0 lands at the bottom of the range
        let mm = self.depth.raw[i] as f32 * self.depth.scale;
        Some([r, g, b, self.range.rescale(mm)])
    }
}

/// SoA parameter banks for every pixel of a frame.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelBank {
    mode: ModelMode,
    components: usize,
    params: PlaneSet<f32>,
    initialized: Vec<bool>,
}

impl ModelBank {
    pub fn new(width: usize, height: usize, mode: ModelMode, config: &MixtureConfig) -> Result<Self> {
        config.validate()?;
        if width == 0 || height == 0 {
            return Err(Error::Config(format!("empty frame {width}x{height}")));
        }
        let d = mode.dims();
        let m = config.components;
        let mut roles = Vec::with_capacity(m * (d + 2));
        for component in 0..m {
            for channel in 0..d {
                roles.push(PlaneRole::Mean { component, channel });
            }
        }
        roles.extend((0..m).map(|component| PlaneRole::Variance { component }));
        roles.extend((0..m).map(|component| PlaneRole::Weight { component }));
        Ok(Self {
            mode,
            components: m,
            params: PlaneSet::filled(width, height, &roles, 0.0),
            initialized: vec![false; width * height],
        })
    }

    pub fn mode(&self) -> ModelMode {
        self.mode
    }

    pub fn width(&self) -> usize {
        self.params.width()
    }

    pub fn height(&self) -> usize {
        self.params.height()
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn params(&self) -> &PlaneSet<f32> {
        &self.params
    }

    pub fn is_initialized(&self, idx: usize) -> bool {
        self.initialized[idx]
    }

    /// Reassembles pixel `idx`'s mixture from the banks.
    pub fn mixture<const D: usize>(&self, idx: usize) -> Result<Option<PixelMixture<D>>> {
        if D != self.mode.dims() {
            return Err(Error::Mode(format!("{:?} bank holds D={}, asked for D={D}", self.mode, self.mode.dims())));
        }
        if !self.initialized[idx] {
            return Ok(None);
        }
        let planes = self.params.planes();
        Ok(Some(gather::<D>(&planes, self.components, idx)))
    }

    /// Steps every pixel's mixture with this frame and returns the labels.
    ///
    /// Pixels seen for the first time are initialised from their value and
    /// labelled background. Invalid depth readings leave the model untouched
    /// and are labelled background.
    pub fn segment_frame(
        &mut self,
        frame: FramePlanes<'_>,
        config: &MixtureConfig,
        pool: &WorkerPool,
    ) -> Result<ForegroundMask> {
        self.check_config(config)?;
        match (self.mode, frame) {
            (ModelMode::Color3, FramePlanes::Color { r, g, b }) => {
                self.check_planes(&[r.len(), g.len(), b.len()])?;
                Ok(self.run::<3, _>(&ColorObs { r, g, b }, config, pool))
            }
            (ModelMode::Depth1, FramePlanes::Depth { raw, scale }) => {
                self.check_planes(&[raw.len()])?;
                Ok(self.run::<1, _>(&DepthObs { raw, scale }, config, pool))
            }
            (mode, _) => Err(Error::Mode(format!("{mode:?} bank cannot take these frame planes"))),
        }
    }

    /// Augmented RGB+D variant: stacks colour with depth rescaled to 0–255.
    #[allow(clippy::too_many_arguments)]
    pub fn segment_augmented(
        &mut self,
        color: [&[u8]; 3],
        depth_raw: &[u16],
        depth_scale: f32,
        range: DepthRange,
        config: &MixtureConfig,
        pool: &WorkerPool,
    ) -> Result<ForegroundMask> {
        if self.mode != ModelMode::Augmented4 {
            return Err(Error::Mode(format!("augmented segmentation needs an Augmented4 bank, got {:?}", self.mode)));
        }
        self.check_config(config)?;
        range.validate()?;
        let [r, g, b] = color;
        self.check_planes(&[r.len(), g.len(), b.len(), depth_raw.len()])?;
        let obs = AugmentedObs {
            color: ColorObs { r, g, b },
            depth: DepthObs {
                raw: depth_raw,
                scale: depth_scale,
            },
            range,
        };
        Ok(self.run::<4, _>(&obs, config, pool))
    }

    fn check_config(&self, config: &MixtureConfig) -> Result<()> {
        config.validate()?;
        if config.components != self.components {
            return Err(Error::Config(format!(
                "bank holds {} components, config asks for {}",
                self.components, config.components
            )));
        }
        Ok(())
    }

    fn check_planes(&self, lens: &[usize]) -> Result<()> {
        let n = self.params.pixel_count();
        if let Some(&bad) = lens.iter().find(|&&l| l != n) {
            return Err(Error::Layout(format!(
                "frame plane has {bad} pixels, bank is {}x{}",
                self.width(),
                self.height()
            )));
        }
        Ok(())
    }

    fn run<const D: usize, S: Observations<D>>(
        &mut self,
        obs: &S,
        config: &MixtureConfig,
        pool: &WorkerPool,
    ) -> ForegroundMask {
        let (width, height) = self.params.dims();
        let m = self.components;
        let mut mask = ForegroundMask::new(width, height);
        let ranges = pool.partition(height);

        let param_blocks = split_planes_rows(
            self.params.planes_mut(),
            width,
            &ranges,
        );
        let init_blocks = split_plane_rows(&mut self.initialized, width, &ranges);
        let mask_blocks = split_plane_rows(mask.bits_mut(), width, &ranges);

        let items: Vec<_> = ranges
            .iter()
            .map(|r| r.start * width)
            .zip(param_blocks)
            .zip(init_blocks.into_iter().zip(mask_blocks))
            .collect();

        pool.run(items, |((first, mut planes), (init, labels))| {
            let mut tile = [PixelMixture::<D>::zeroed(m); TILE];
            for start in (0..labels.len()).step_by(TILE) {
                let end = (start + TILE).min(labels.len());
                let tile = &mut tile[..end - start];
                load_tile(&planes, m, start, tile);
                for (t, mixture) in tile.iter_mut().enumerate() {
                    let j = start + t;
                    labels[j] = match obs.observe(first + j) {
                        None => PixelLabel::Background.bit(),
                        Some(value) if init[j] => mixture.step(&value, config).bit(),
                        Some(value) => {
                            init[j] = true;
                            *mixture = PixelMixture::init_unchecked(value, config);
                            PixelLabel::Background.bit()
                        }
                    };
                }
                store_tile(&mut planes, m, start, tile);
            }
        });
        mask
    }
}

/// Pixels staged between the planes and the per-pixel kernel at a time.
const TILE: usize = 64;

fn load_tile<const D: usize>(planes: &[&mut [f32]], m: usize, start: usize, tile: &mut [PixelMixture<D>]) {
    let n = tile.len();
    for k in 0..m {
        for c in 0..D {
            for (px, &v) in tile.iter_mut().zip(&planes[k * D + c][start..start + n]) {
                px.means[k][c] = v;
            }
        }
        for (px, &v) in tile.iter_mut().zip(&planes[m * D + k][start..start + n]) {
            px.variances[k] = v;
        }
        for (px, &w) in tile.iter_mut().zip(&planes[m * D + m + k][start..start + n]) {
            px.weights[k] = w;
        }
    }
}

fn store_tile<const D: usize>(planes: &mut [&mut [f32]], m: usize, start: usize, tile: &[PixelMixture<D>]) {
    let n = tile.len();
    for k in 0..m {
        for c in 0..D {
            for (dst, px) in planes[k * D + c][start..start + n].iter_mut().zip(tile) {
                *dst = px.means[k][c];
            }
        }
        for (dst, px) in planes[m * D + k][start..start + n].iter_mut().zip(tile) {
            *dst = px.variances[k];
        }
        for (dst, px) in planes[m * D + m + k][start..start + n].iter_mut().zip(tile) {
            *dst = px.weights[k];
        }
    }
}

#[inline]
fn gather<const D: usize>(planes: &[&[f32]], m: usize, j: usize) -> PixelMixture<D> {
    let mut mixture = PixelMixture::<D>::zeroed(m);
    for k in 0..m {
        let mean = mixture.mean_mut(k);
        for c in 0..D {
            mean[c] = planes[k * D + c][j];
        }
        mixture.set_variance(k, planes[m * D + k][j]);
        mixture.set_weight(k, planes[m * D + m + k][j]);
    }
    mixture
}
