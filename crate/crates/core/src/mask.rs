use crate::error::{Error, Result};

/// Per-pixel segmentation outcome.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PixelLabel {
    #[default]
    Background,
    Foreground,
}

impl PixelLabel {
    #[inline]
    pub fn bit(self) -> u8 {
        match self {
            PixelLabel::Background => 0,
            PixelLabel::Foreground => 1,
        }
    }

    #[inline]
    pub fn from_bit(bit: u8) -> Self {
        if bit == 0 {
            PixelLabel::Background
        } else {
            PixelLabel::Foreground
        }
    }
}

/// Binary label plane, row-major, one byte per pixel holding 0 or 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForegroundMask {
    width: usize,
    height: usize,
    bits: Vec<u8>,
}

impl ForegroundMask {
    pub fn new(width: usize, height: usize) -> Self {
        Self::filled(width, height, PixelLabel::Background)
    }

    pub fn filled(width: usize, height: usize, label: PixelLabel) -> Self {
        Self {
            width,
            height,
            bits: vec![label.bit(); width * height],
        }
    }

    /// Builds a mask from raw bits; any non-zero value counts as foreground.
    pub fn from_bits(width: usize, height: usize, bits: Vec<u8>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::Layout(format!(
                "{} mask bits for a {width}x{height} plane",
                bits.len()
            )));
        }
        let bits = bits.into_iter().map(|b| u8::from(b != 0)).collect();
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub(crate) fn bits_mut(&mut self) -> &mut [u8] {
        &mut self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> PixelLabel {
        PixelLabel::from_bit(self.bits[y * self.width + x])
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, label: PixelLabel) {
        self.bits[y * self.width + x] = label.bit();
    }

    pub fn count_foreground(&self) -> usize {
        self.bits.iter().filter(|&&b| b != 0).count()
    }

    pub(crate) fn check_dims(&self, width: usize, height: usize) -> Result<()> {
        if self.dims() != (width, height) {
            return Err(Error::dims((width, height), self.dims()));
        }
        Ok(())
    }
}
