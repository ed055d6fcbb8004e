use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tensor::{Shape, Tensor};

/// Local matching costs over a `(2d+1) x (2d+1)` displacement window.
///
/// Channel `k` holds displacement `(dy, dx) = (k / (2d+1) - d, k % (2d+1) - d)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CostVolume {
    pub volume: Tensor,
    pub radius: usize,
}

impl CostVolume {
    pub fn window(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn displacement(&self, k: usize) -> (isize, isize) {
        let n = self.window();
        let d = self.radius as isize;
        ((k / n) as isize - d, (k % n) as isize - d)
    }

    pub fn channel_of(&self, dy: isize, dx: isize) -> usize {
        let d = self.radius as isize;
        ((dy + d) as usize) * self.window() + (dx + d) as usize
    }
}

/// `cost[(dy,dx), y, x] = (1/C) * sum_c f1[c,y,x] * f2[c,y+dy,x+dx]`, with
/// zero wherever the displaced pixel leaves the map.
pub fn correlation(f1: &Tensor, f2: &Tensor, radius: usize) -> Result<CostVolume> {
    if f1.shape() != f2.shape() {
        return Err(Error::shape(
            "correlation",
            format!("{} vs {}", f1.shape(), f2.shape()),
        ));
    }
    let (channels, h, w) = (f1.channels(), f1.height(), f1.width());
    let n = 2 * radius + 1;
    let d = radius as isize;
    let shape = Shape::new(n * n, h, w);
    let inv = 1.0 / channels as f32;
    let mut out = vec![0.0; shape.numel()];

    out.par_chunks_mut(h * w).enumerate().for_each(|(k, plane)| {
        let dy = (k / n) as isize - d;
        let dx = (k % n) as isize - d;
        let x_lo = (-dx).max(0) as usize;
        let x_hi = (w as isize - dx).min(w as isize);
        if x_hi <= x_lo as isize {
            return;
        }
        let x_hi = x_hi as usize;
        for c in 0..channels {
            let a = f1.channel(c);
            let b = f2.channel(c);
            for y in 0..h {
                let yy = y as isize + dy;
                if yy < 0 || yy >= h as isize {
                    continue;
                }
                let yy = yy as usize;
                let row_a = &a[y * w + x_lo..y * w + x_hi];
                let start = (x_lo as isize + dx) as usize;
                let row_b = &b[yy * w + start..yy * w + start + row_a.len()];
                let dst = &mut plane[y * w + x_lo..y * w + x_hi];
                for ((o, &p), &q) in dst.iter_mut().zip(row_a).zip(row_b) {
                    *o += p * q;
                }
            }
        }
        plane.iter_mut().for_each(|v| *v *= inv);
    });
    Ok(CostVolume {
        volume: Tensor::from_parts(shape, out),
        radius,
    })
}
