//! Dense channel-major tensors and the CPU kernels every network block is
//! built from.
//!
//! Layout is `(channels, height, width)` with row-major planes; batch size is
//! always one. All kernels are pure functions and give bit-identical results
//! regardless of how many rayon workers are available: work is only ever
//! split across output planes, never across a reduction.

mod activation;
mod batchnorm;
mod conv;
mod pad;
mod resize;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use activation::{apply_activation, apply_activation_in_place, Activation};
pub use batchnorm::fold_batchnorm;
pub use conv::{conv2d, conv_output_dim, depthwise_conv2d, ConvParams, Kernel};
pub use pad::{crop2d, pad2d, Pads};
pub use resize::bilinear_resize;

/// Spatial extent of a tensor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl Shape {
    pub const fn new(channels: usize, height: usize, width: usize) -> Self {
        Shape {
            channels,
            height,
            width,
        }
    }

    pub const fn numel(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub const fn plane(&self) -> usize {
        self.height * self.width
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.channels, self.height, self.width)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Shape,
    data: Vec<f32>,
}

impl Tensor {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        let shape = Shape::new(channels, height, width);
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::shape("tensor", format!("zero-sized dimension in {shape}")));
        }
        if data.len() != shape.numel() {
            return Err(Error::shape(
                "tensor",
                format!("{} elements for shape {shape}", data.len()),
            ));
        }
        Ok(Tensor { shape, data })
    }

    /// # Panics
    /// If any dimension is zero.
    pub fn filled(channels: usize, height: usize, width: usize, value: f32) -> Self {
        assert!(
            channels > 0 && height > 0 && width > 0,
            "tensor dimensions must be non-zero"
        );
        let shape = Shape::new(channels, height, width);
        Tensor {
            shape,
            data: vec![value; shape.numel()],
        }
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self::filled(channels, height, width, 0.0)
    }

    pub fn from_fn(
        channels: usize,
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Self {
        let mut t = Self::zeros(channels, height, width);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    t.data[(c * height + y) * width + x] = f(c, y, x);
                }
            }
        }
        t
    }

    pub(crate) fn from_parts(shape: Shape, data: Vec<f32>) -> Self {
        debug_assert_eq!(shape.numel(), data.len());
        Tensor { shape, data }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn channels(&self) -> usize {
        self.shape.channels
    }

    pub fn height(&self) -> usize {
        self.shape.height
    }

    pub fn width(&self) -> usize {
        self.shape.width
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let plane = self.shape.plane();
        &self.data[c * plane..(c + 1) * plane]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f32] {
        let plane = self.shape.plane();
        &mut self.data[c * plane..(c + 1) * plane]
    }

    #[inline]
    pub fn at(&self, c: usize, y: usize, x: usize) -> f32 {
        self.data[(c * self.shape.height + y) * self.shape.width + x]
    }

    #[inline]
    pub fn set(&mut self, c: usize, y: usize, x: usize, value: f32) {
        let idx = (c * self.shape.height + y) * self.shape.width + x;
        self.data[idx] = value;
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Tensor {
        Tensor {
            shape: self.shape,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, s: f32) -> Tensor {
        self.map(|v| v * s)
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        if self.shape != other.shape {
            return Err(Error::shape(
                "add",
                format!("{} vs {}", self.shape, other.shape),
            ));
        }
        Ok(Tensor {
            shape: self.shape,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// Stack tensors along the channel axis.
    pub fn concat(parts: &[&Tensor]) -> Result<Tensor> {
        let first = parts
            .first()
            .ok_or_else(|| Error::invalid("concat", "no inputs"))?;
        let (h, w) = (first.height(), first.width());
        let mut channels = 0;
        for p in parts {
            if p.height() != h || p.width() != w {
                return Err(Error::shape(
                    "concat",
                    format!("{} vs {}", first.shape, p.shape),
                ));
            }
            channels += p.channels();
        }
        let mut data = Vec::with_capacity(channels * h * w);
        for p in parts {
            data.extend_from_slice(&p.data);
        }
        Ok(Tensor::from_parts(Shape::new(channels, h, w), data))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Largest absolute elementwise difference; `None` on shape mismatch.
    pub fn max_abs_diff(&self, other: &Tensor) -> Option<f32> {
        (self.shape == other.shape).then(|| {
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f32::max)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_lengths_and_zero_dims() {
        assert!(Tensor::new(1, 2, 2, vec![0.0; 3]).is_err());
        assert!(Tensor::new(0, 2, 2, vec![]).is_err());
        assert!(Tensor::new(1, 2, 2, vec![0.0; 4]).is_ok());
    }

    #[test]
    fn indexing_is_channel_major() {
        let t = Tensor::new(2, 2, 3, (0..12).map(|v| v as f32).collect()).unwrap();
        assert_eq!(t.at(1, 0, 0), 6.0);
        assert_eq!(t.at(0, 1, 2), 5.0);
        assert_eq!(t.channel(1), &[6.0, 7.0, 8.0, 9.0, 10.0, 11.0]);
    }

    #[test]
    fn concat_stacks_channels() {
        let a = Tensor::filled(1, 2, 2, 1.0);
        let b = Tensor::filled(2, 2, 2, 2.0);
        let c = Tensor::concat(&[&a, &b]).unwrap();
        assert_eq!(c.shape(), Shape::new(3, 2, 2));
        assert_eq!(c.channel(0), &[1.0; 4]);
        assert_eq!(c.channel(2), &[2.0; 4]);
        assert!(Tensor::concat(&[&a, &Tensor::zeros(1, 3, 2)]).is_err());
    }
}
