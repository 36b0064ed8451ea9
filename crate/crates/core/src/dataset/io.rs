use std::fs::File;
use std::io::{BufReader, BufWriter, Cursor, Write};
use std::path::Path;

use image::codecs::png::{CompressionType, FilterType, PngDecoder, PngEncoder};
use image::{DynamicImage, ImageBuffer, ImageEncoder, Luma};

use crate::error::{Error, Result};
use crate::mask::ForegroundMask;

fn decode(path: &Path) -> Result<DynamicImage> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let decoder = PngDecoder::new(BufReader::new(file)).map_err(|source| Error::Image {
        path: path.into(),
        source,
    })?;
    DynamicImage::from_decoder(decoder).map_err(|source| Error::Image {
        path: path.into(),
        source,
    })
}

fn encoder<W: Write>(w: W) -> PngEncoder<W> {
    PngEncoder::new_with_quality(w, CompressionType::Fast, FilterType::Adaptive)
}

fn write_png(path: &Path, f: impl FnOnce(PngEncoder<BufWriter<File>>) -> image::ImageResult<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    f(encoder(BufWriter::new(file))).map_err(|source| Error::Image {
        path: path.into(),
        source,
    })
}

/// Reads an 8-bit RGB PNG into interleaved bytes.
pub fn read_color_png(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let img = decode(path)?;
    let rgb = match img {
        DynamicImage::ImageRgb8(buf) => buf,
        other => other.into_rgb8(),
    };
    let (w, h) = rgb.dimensions();
    Ok((w as usize, h as usize, rgb.into_raw()))
}

/// Reads a 16-bit single-channel PNG holding raw depth units.
pub fn read_depth_png(path: &Path) -> Result<(usize, usize, Vec<u16>)> {
    match decode(path)? {
        DynamicImage::ImageLuma16(buf) => {
            let (w, h) = buf.dimensions();
            Ok((w as usize, h as usize, buf.into_raw()))
        }
        other => Err(Error::Image {
            path: path.into(),
            source: image::ImageError::Unsupported(image::error::UnsupportedError::from_format_and_kind(
                image::error::ImageFormatHint::Exact(image::ImageFormat::Png),
                image::error::UnsupportedErrorKind::Color(other.color().into()),
            )),
        }),
    }
}

/// Reads an 8-bit single-channel PNG whose pixels are all 0 or 255.
pub fn read_mask_png(path: &Path) -> Result<ForegroundMask> {
    let gray = match decode(path)? {
        DynamicImage::ImageLuma8(buf) => buf,
        other => other.into_luma8(),
    };
    let (w, h) = gray.dimensions();
    if let Some(&value) = gray.as_raw().iter().find(|&&v| v != 0 && v != 255) {
        return Err(Error::NonBinaryMask { path: path.into(), value });
    }
    ForegroundMask::from_bits(w as usize, h as usize, gray.into_raw())
}

pub fn load_mask(path: impl AsRef<Path>) -> Result<ForegroundMask> {
    read_mask_png(path.as_ref())
}

fn mask_image(mask: &ForegroundMask) -> ImageBuffer<Luma<u8>, Vec<u8>> {
    let bytes = mask.bits().iter().map(|&b| if b != 0 { 255 } else { 0 }).collect();
    ImageBuffer::from_raw(mask.width() as u32, mask.height() as u32, bytes).expect("mask buffer sized from its own dims")
}

/// Writes a mask as an 8-bit PNG with 0 = background, 255 = foreground.
pub fn save_mask(mask: &ForegroundMask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let img = mask_image(mask);
    write_png(path, |enc| img.write_with_encoder(enc))
}

/// PNG bytes of a mask, as [`save_mask`] would write them.
pub fn encode_mask_png(mask: &ForegroundMask) -> Vec<u8> {
    let img = mask_image(mask);
    let mut out = Vec::new();
    img.write_with_encoder(encoder(Cursor::new(&mut out)))
        .expect("in-memory PNG encoding");
    out
}

pub fn write_color_png(path: &Path, width: usize, height: usize, rgb: &[u8]) -> Result<()> {
    write_png(path, |enc| {
        enc.write_image(rgb, width as u32, height as u32, image::ExtendedColorType::Rgb8)
    })
}

pub fn write_depth_png(path: &Path, width: usize, height: usize, depth: &[u16]) -> Result<()> {
    let img: ImageBuffer<Luma<u16>, &[u16]> =
        ImageBuffer::from_raw(width as u32, height as u32, depth).ok_or_else(|| {
            Error::Layout(format!("depth plane has {} pixels, expected {width}x{height}", depth.len()))
        })?;
    write_png(path, |enc| img.write_with_encoder(enc))
}
