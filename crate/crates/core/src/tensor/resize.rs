use rayon::prelude::*;

use super::{Shape, Tensor};

/// Source taps and blend weight for one output coordinate under the
/// half-pixel (align-corners = false) convention with edge clamping.
#[inline]
pub(crate) fn source_coord(i: usize, in_len: usize, out_len: usize) -> (usize, usize, f32) {
    let scale = in_len as f32 / out_len as f32;
    let src = ((i as f32 + 0.5) * scale - 0.5).max(0.0);
    let i0 = (src.floor() as usize).min(in_len - 1);
    let i1 = (i0 + 1).min(in_len - 1);
    (i0, i1, src - i0 as f32)
}

/// Bilinear resampling to `out_h x out_w`.
///
/// Interpolation is written as `a + t * (b - a)` so spatially constant inputs
/// are reproduced exactly. Same-size resizes return a copy.
///
/// # Panics
/// If `out_h` or `out_w` is zero.
pub fn bilinear_resize(input: &Tensor, out_h: usize, out_w: usize) -> Tensor {
    assert!(out_h > 0 && out_w > 0, "resize target must be non-empty");
    let (h, w) = (input.height(), input.width());
    if (h, w) == (out_h, out_w) {
        return input.clone();
    }
    let cols: Vec<_> = (0..out_w).map(|x| source_coord(x, w, out_w)).collect();
    let rows: Vec<_> = (0..out_h).map(|y| source_coord(y, h, out_h)).collect();
    let shape = Shape::new(input.channels(), out_h, out_w);
    let mut out = vec![0.0; shape.numel()];
    out.par_chunks_mut(out_h * out_w)
        .enumerate()
        .for_each(|(c, plane)| {
            let src = input.channel(c);
            for (oy, &(y0, y1, ly)) in rows.iter().enumerate() {
                let r0 = &src[y0 * w..(y0 + 1) * w];
                let r1 = &src[y1 * w..(y1 + 1) * w];
                for (ox, &(x0, x1, lx)) in cols.iter().enumerate() {
                    let top = r0[x0] + lx * (r0[x1] - r0[x0]);
                    let bot = r1[x0] + lx * (r1[x1] - r1[x0]);
                    plane[oy * out_w + ox] = top + ly * (bot - top);
                }
            }
        });
    Tensor::from_parts(shape, out)
}
