use rayon::prelude::*;

use super::FlowField;
use crate::error::{Error, Result};
use crate::tensor::{Shape, Tensor};

/// Backward warp: `out[c, y, x] = features[c, y + v, x + u]`, sampled
/// bilinearly. Taps that fall outside the map read zero.
pub fn warp(features: &Tensor, flow: &FlowField) -> Result<Tensor> {
    warp_scaled(features, flow.tensor(), 1.0)
}

/// [`warp`] with the displacement multiplied by `scale` on the fly.
pub fn warp_scaled(features: &Tensor, flow: &Tensor, scale: f32) -> Result<Tensor> {
    let (h, w) = (features.height(), features.width());
    if flow.channels() != 2 || flow.height() != h || flow.width() != w {
        return Err(Error::shape(
            "warp",
            format!("features {} with flow {}", features.shape(), flow.shape()),
        ));
    }
    let us = flow.channel(0);
    let vs = flow.channel(1);

    // Tap coordinates are channel-independent, so resolve them once.
    let taps: Vec<Tap> = (0..h * w)
        .map(|i| Tap::new((i % w) as f32 + scale * us[i], (i / w) as f32 + scale * vs[i], h, w))
        .collect();

    let shape = Shape::new(features.channels(), h, w);
    let mut out = vec![0.0; shape.numel()];
    out.par_chunks_mut(h * w).enumerate().for_each(|(c, plane)| {
        let src = features.channel(c);
        for (o, tap) in plane.iter_mut().zip(&taps) {
            *o = tap.sample(src, w);
        }
    });
    Ok(Tensor::from_parts(shape, out))
}

#[derive(Clone, Copy)]
struct Tap {
    x0: isize,
    y0: isize,
    fx: f32,
    fy: f32,
    h: isize,
    w: isize,
}

impl Tap {
    fn new(sx: f32, sy: f32, h: usize, w: usize) -> Self {
        let x0 = sx.floor();
        let y0 = sy.floor();
        Tap {
            x0: x0 as isize,
            y0: y0 as isize,
            fx: sx - x0,
            fy: sy - y0,
            h: h as isize,
            w: w as isize,
        }
    }

    #[inline]
    fn read(&self, src: &[f32], w: usize, y: isize, x: isize) -> f32 {
        if y < 0 || y >= self.h || x < 0 || x >= self.w {
            0.0
        } else {
            src[y as usize * w + x as usize]
        }
    }

    #[inline]
    fn sample(&self, src: &[f32], w: usize) -> f32 {
        let (x0, y0) = (self.x0, self.y0);
        let a = self.read(src, w, y0, x0);
        if self.fx == 0.0 && self.fy == 0.0 {
            return a;
        }
        let b = self.read(src, w, y0, x0 + 1);
        let c = self.read(src, w, y0 + 1, x0);
        let d = self.read(src, w, y0 + 1, x0 + 1);
        let top = a + self.fx * (b - a);
        let bot = c + self.fx * (d - c);
        top + self.fy * (bot - top)
    }
}
