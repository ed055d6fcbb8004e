//! 8-bit PNG/PPM ingestion to `[0, 1]` floats, and PNG output.

use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageBuffer, ImageFormat, Rgb};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Decode an 8-bit grayscale, RGB or RGBA image to a `3 x H x W` tensor.
/// Gray is replicated across channels and alpha is dropped.
pub fn decode_image(bytes: &[u8]) -> Result<Tensor> {
    let format = image::guess_format(bytes).map_err(|e| Error::Image(e.to_string()))?;
    if !matches!(format, ImageFormat::Png | ImageFormat::Pnm) {
        return Err(Error::Image(format!("{format:?} input; only PNG and PPM are accepted")));
    }
    let img = image::load_from_memory_with_format(bytes, format).map_err(|e| Error::Image(e.to_string()))?;
    let rgb = match img {
        DynamicImage::ImageLuma8(_) | DynamicImage::ImageRgb8(_) | DynamicImage::ImageRgba8(_) => img.to_rgb8(),
        other => {
            return Err(Error::Image(format!(
                "{:?} pixels; only 8-bit gray, RGB and RGBA are accepted",
                other.color()
            )))
        }
    };
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let raw = rgb.as_raw();
    Ok(Tensor::from_fn(3, h, w, |c, y, x| raw[(y * w + x) * 3 + c] as f32 / 255.0))
}

pub fn read_image(path: &Path) -> Result<Tensor> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes).map_err(|e| e.in_file(path))
}

/// Encode a `3 x H x W` tensor with values in `[0, 1]` as an 8-bit RGB PNG.
pub fn encode_png(image: &Tensor) -> Result<Vec<u8>> {
    if image.channels() != 3 {
        return Err(Error::shape("encode_png", format!("expected 3 channels, got {}", image.shape())));
    }
    let (h, w) = (image.height(), image.width());
    let mut raw = Vec::with_capacity(3 * h * w);
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                raw.push((image.at(c, y, x).clamp(0.0, 1.0) * 255.0).round() as u8);
            }
        }
    }
    let buf: ImageBuffer<Rgb<u8>, Vec<u8>> =
        ImageBuffer::from_raw(w as u32, h as u32, raw).expect("buffer sized to image");
    let mut out = Cursor::new(Vec::new());
    DynamicImage::ImageRgb8(buf)
        .write_to(&mut out, ImageFormat::Png)
        .map_err(|e| Error::Image(e.to_string()))?;
    Ok(out.into_inner())
}

pub fn write_png(path: &Path, image: &Tensor) -> Result<()> {
    super::write_file(path, &encode_png(image)?)
}
