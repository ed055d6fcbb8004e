use rayon::prelude::*;

use super::{Shape, Tensor};
use crate::error::{Error, Result};

/// Convolution weights laid out as `(out_ch, in_ch, kh, kw)`.
///
/// Depthwise kernels use `in_ch == 1` with one filter per channel.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    pub out_ch: usize,
    pub in_ch: usize,
    pub kh: usize,
    pub kw: usize,
    pub data: Vec<f32>,
}

impl Kernel {
    pub fn new(out_ch: usize, in_ch: usize, kh: usize, kw: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != out_ch * in_ch * kh * kw {
            return Err(Error::shape(
                "kernel",
                format!(
                    "{} values for kernel {out_ch}x{in_ch}x{kh}x{kw}",
                    data.len()
                ),
            ));
        }
        Ok(Kernel {
            out_ch,
            in_ch,
            kh,
            kw,
            data,
        })
    }

    pub fn zeros(out_ch: usize, in_ch: usize, kh: usize, kw: usize) -> Self {
        Kernel {
            out_ch,
            in_ch,
            kh,
            kw,
            data: vec![0.0; out_ch * in_ch * kh * kw],
        }
    }

    pub fn dims(&self) -> [usize; 4] {
        [self.out_ch, self.in_ch, self.kh, self.kw]
    }

    #[inline]
    pub fn at(&self, o: usize, i: usize, ky: usize, kx: usize) -> f32 {
        self.data[((o * self.in_ch + i) * self.kh + ky) * self.kw + kx]
    }

    pub fn filter(&self, o: usize) -> &[f32] {
        let len = self.in_ch * self.kh * self.kw;
        &self.data[o * len..(o + 1) * len]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvParams {
    pub kernel: Kernel,
    pub bias: Option<Vec<f32>>,
    pub stride: usize,
    /// Zero padding applied to every side.
    pub padding: usize,
    pub dilation: usize,
}

impl ConvParams {
    pub fn new(
        kernel: Kernel,
        bias: Option<Vec<f32>>,
        stride: usize,
        padding: usize,
        dilation: usize,
    ) -> Result<Self> {
        if stride == 0 || dilation == 0 {
            return Err(Error::invalid("conv", "stride and dilation must be >= 1"));
        }
        if kernel.kh % 2 == 0 || kernel.kw % 2 == 0 {
            return Err(Error::invalid(
                "conv",
                format!("kernel size {}x{} must be odd", kernel.kh, kernel.kw),
            ));
        }
        if let Some(b) = &bias {
            if b.len() != kernel.out_ch {
                return Err(Error::shape(
                    "conv",
                    format!("bias length {} for {} outputs", b.len(), kernel.out_ch),
                ));
            }
        }
        Ok(ConvParams {
            kernel,
            bias,
            stride,
            padding,
            dilation,
        })
    }

    /// Stride-1 convolution whose output keeps the input resolution.
    pub fn same(kernel: Kernel, bias: Option<Vec<f32>>) -> Result<Self> {
        let pad = kernel.kh / 2;
        Self::new(kernel, bias, 1, pad, 1)
    }

    pub fn output_hw(&self, height: usize, width: usize) -> Result<(usize, usize)> {
        let oh = conv_output_dim(height, self.kernel.kh, self.stride, self.padding, self.dilation);
        let ow = conv_output_dim(width, self.kernel.kw, self.stride, self.padding, self.dilation);
        match (oh, ow) {
            (Some(oh), Some(ow)) => Ok((oh, ow)),
            _ => Err(Error::shape(
                "conv",
                format!(
                    "{height}x{width} input too small for {}x{} kernel (dilation {})",
                    self.kernel.kh, self.kernel.kw, self.dilation
                ),
            )),
        }
    }
}

/// `floor((n + 2p - d(k-1) - 1) / s) + 1`, or `None` when that is below one.
pub fn conv_output_dim(
    n: usize,
    k: usize,
    stride: usize,
    padding: usize,
    dilation: usize,
) -> Option<usize> {
    let span = dilation * (k - 1) + 1;
    let padded = n + 2 * padding;
    (padded >= span).then(|| (padded - span) / stride + 1)
}

/// Accumulate `w * src[iy, ix]` into every output pixel whose tap lands on
/// `(oy*stride + off_y, ox*stride + off_x)`; taps outside the source read zero.
#[allow(clippy::too_many_arguments)]
#[inline]
fn accumulate_tap(
    dst: &mut [f32],
    (oh, ow): (usize, usize),
    src: &[f32],
    (h, w): (usize, usize),
    weight: f32,
    off_y: isize,
    off_x: isize,
    stride: usize,
) {
    let s = stride as isize;
    // Range of ox with 0 <= ox*s + off_x <= w-1.
    let ox_lo = if off_x >= 0 { 0 } else { (-off_x + s - 1) / s };
    let ox_hi = (w as isize - 1 - off_x).div_euclid(s).min(ow as isize - 1);
    if ox_hi < ox_lo {
        return;
    }
    let (ox_lo, ox_hi) = (ox_lo as usize, ox_hi as usize);
    for oy in 0..oh {
        let iy = (oy * stride) as isize + off_y;
        if iy < 0 || iy >= h as isize {
            continue;
        }
        let row = &src[iy as usize * w..(iy as usize + 1) * w];
        let out = &mut dst[oy * ow + ox_lo..=oy * ow + ox_hi];
        let start = (ox_lo * stride) as isize + off_x;
        if stride == 1 {
            let inp = &row[start as usize..start as usize + out.len()];
            for (o, &i) in out.iter_mut().zip(inp) {
                *o += weight * i;
            }
        } else {
            for (o, &i) in out
                .iter_mut()
                .zip(row[start as usize..].iter().step_by(stride))
            {
                *o += weight * i;
            }
        }
    }
}

/// Dense 2-D convolution with zero padding.
pub fn conv2d(input: &Tensor, p: &ConvParams) -> Result<Tensor> {
    let k = &p.kernel;
    if k.in_ch != input.channels() {
        return Err(Error::shape(
            "conv2d",
            format!(
                "kernel expects {} input channels, got {}",
                k.in_ch,
                input.channels()
            ),
        ));
    }
    let (h, w) = (input.height(), input.width());
    let (oh, ow) = p.output_hw(h, w)?;
    let shape = Shape::new(k.out_ch, oh, ow);
    let mut out = vec![0.0f32; shape.numel()];
    let pad = p.padding as isize;
    let dil = p.dilation as isize;

    out.par_chunks_mut(oh * ow)
        .enumerate()
        .for_each(|(co, plane)| {
            if let Some(b) = &p.bias {
                plane.fill(b[co]);
            }
            let filter = k.filter(co);
            for ci in 0..k.in_ch {
                let src = input.channel(ci);
                for ky in 0..k.kh {
                    for kx in 0..k.kw {
                        let weight = filter[(ci * k.kh + ky) * k.kw + kx];
                        accumulate_tap(
                            plane,
                            (oh, ow),
                            src,
                            (h, w),
                            weight,
                            ky as isize * dil - pad,
                            kx as isize * dil - pad,
                            p.stride,
                        );
                    }
                }
            }
        });
    Ok(Tensor::from_parts(shape, out))
}

/// Per-channel convolution: output channel `c` reads only input channel `c`.
pub fn depthwise_conv2d(input: &Tensor, p: &ConvParams) -> Result<Tensor> {
    let k = &p.kernel;
    if k.in_ch != 1 || k.out_ch != input.channels() {
        return Err(Error::shape(
            "depthwise_conv2d",
            format!(
                "kernel {}x{}x{}x{} for {} channels",
                k.out_ch,
                k.in_ch,
                k.kh,
                k.kw,
                input.channels()
            ),
        ));
    }
    let (h, w) = (input.height(), input.width());
    let (oh, ow) = p.output_hw(h, w)?;
    let shape = Shape::new(k.out_ch, oh, ow);
    let mut out = vec![0.0f32; shape.numel()];
    let pad = p.padding as isize;
    let dil = p.dilation as isize;

    out.par_chunks_mut(oh * ow).enumerate().for_each(|(c, plane)| {
        if let Some(b) = &p.bias {
            plane.fill(b[c]);
        }
        let src = input.channel(c);
        let filter = k.filter(c);
        for ky in 0..k.kh {
            for kx in 0..k.kw {
                accumulate_tap(
                    plane,
                    (oh, ow),
                    src,
                    (h, w),
                    filter[ky * k.kw + kx],
                    ky as isize * dil - pad,
                    kx as isize * dil - pad,
                    p.stride,
                );
            }
        }
    });
    Ok(Tensor::from_parts(shape, out))
}
