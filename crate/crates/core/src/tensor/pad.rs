use super::{Shape, Tensor};
use crate::error::{Error, Result};

/// Zero padding amounts per side.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Pads {
    pub top: usize,
    pub bottom: usize,
    pub left: usize,
    pub right: usize,
}

impl Pads {
    pub fn new(top: usize, bottom: usize, left: usize, right: usize) -> Self {
        Pads {
            top,
            bottom,
            left,
            right,
        }
    }

    pub fn uniform(p: usize) -> Self {
        Self::new(p, p, p, p)
    }
}

pub fn pad2d(input: &Tensor, pads: Pads) -> Tensor {
    let (h, w) = (input.height(), input.width());
    let oh = h + pads.top + pads.bottom;
    let ow = w + pads.left + pads.right;
    let shape = Shape::new(input.channels(), oh, ow);
    let mut out = vec![0.0; shape.numel()];
    for c in 0..input.channels() {
        let src = input.channel(c);
        for y in 0..h {
            let dst = (c * oh + y + pads.top) * ow + pads.left;
            out[dst..dst + w].copy_from_slice(&src[y * w..(y + 1) * w]);
        }
    }
    Tensor::from_parts(shape, out)
}

/// Extract an `height x width` window starting at `(top, left)`.
pub fn crop2d(input: &Tensor, top: usize, left: usize, height: usize, width: usize) -> Result<Tensor> {
    if height == 0 || width == 0 || top + height > input.height() || left + width > input.width() {
        return Err(Error::shape(
            "crop2d",
            format!(
                "window {height}x{width}+{top}+{left} outside {}",
                input.shape()
            ),
        ));
    }
    let shape = Shape::new(input.channels(), height, width);
    let mut out = Vec::with_capacity(shape.numel());
    for c in 0..input.channels() {
        let src = input.channel(c);
        for y in top..top + height {
            out.extend_from_slice(&src[y * input.width() + left..y * input.width() + left + width]);
        }
    }
    Ok(Tensor::from_parts(shape, out))
}
