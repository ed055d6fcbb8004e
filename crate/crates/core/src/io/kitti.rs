//! KITTI flow PNG: 16-bit RGB, `u` and `v` stored as `round(64 v + 2^15)`,
//! blue channel 1 where the pixel is valid.

use std::io::Cursor;

use image::{DynamicImage, ImageBuffer, ImageFormat, Rgb};

use super::{FlowFileRecord, FlowFormat};
use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::tensor::Tensor;

/// Smallest and largest encodable components in pixels.
pub const KITTI_MIN: f32 = -512.0;
pub const KITTI_MAX: f32 = (u16::MAX as f32 - 32768.0) / 64.0;

fn encode(value: f32) -> Result<u16> {
    let stored = (64.0 * value as f64 + 32768.0).round();
    if !(0.0..=u16::MAX as f64).contains(&stored) {
        return Err(Error::OutOfRange { value });
    }
    Ok(stored as u16)
}

fn decode(stored: u16) -> f32 {
    (stored as f32 - 32768.0) / 64.0
}

/// Encode a flow field. Pixels outside the mask are written as zero flow
/// with the valid flag cleared.
pub fn write_kitti_png(flow: &FlowField) -> Result<Vec<u8>> {
    let (h, w) = (flow.height(), flow.width());
    let mut raw = Vec::with_capacity(3 * h * w);
    for i in 0..h * w {
        if flow.is_valid(i) {
            raw.extend_from_slice(&[encode(flow.u()[i])?, encode(flow.v()[i])?, 1]);
        } else {
            raw.extend_from_slice(&[32768, 32768, 0]);
        }
    }
    let buf: ImageBuffer<Rgb<u16>, Vec<u16>> =
        ImageBuffer::from_raw(w as u32, h as u32, raw).expect("buffer sized to image");
    let mut out = Cursor::new(Vec::new());
    DynamicImage::ImageRgb16(buf)
        .write_to(&mut out, ImageFormat::Png)
        .map_err(|e| Error::Image(e.to_string()))?;
    Ok(out.into_inner())
}

pub fn read_kitti_png(bytes: &[u8]) -> Result<FlowFileRecord> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)
        .map_err(|e| Error::Image(e.to_string()))?;
    let buf = match img {
        DynamicImage::ImageRgb16(b) => b,
        other => {
            return Err(Error::Image(format!(
                "KITTI flow must be 16-bit RGB, found {:?}",
                other.color()
            )))
        }
    };
    let (w, h) = (buf.width() as usize, buf.height() as usize);
    let n = w * h;
    let mut data = vec![0f32; 2 * n];
    let mut valid = vec![false; n];
    for (i, px) in buf.pixels().enumerate() {
        data[i] = decode(px[0]);
        data[n + i] = decode(px[1]);
        valid[i] = px[2] != 0;
    }
    Ok(FlowFileRecord {
        flow: FlowField::with_mask(Tensor::new(2, h, w, data)?, valid)?,
        source_format: FlowFormat::KittiPng,
    })
}
