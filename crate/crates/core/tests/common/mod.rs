//! Independent scalar-loop references shared by the integration tests and
//! the acceptance runner. Everything here is written directly from the
//! definitions, in f64, without touching the library's kernels.
#![allow(dead_code)]

use compactflow::flow::FlowField;
use compactflow::memory::MemGraph;
use compactflow::weights::SplitMix64;
use compactflow::Tensor;
use rand_core::{RngCore, SeedableRng};

pub mod suites;

pub struct Rng(SplitMix64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(SplitMix64::seed_from_u64(seed))
    }

    pub fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// Uniform integer in `lo..=hi`.
    pub fn int(&mut self, lo: usize, hi: usize) -> usize {
        lo + (self.0.next_u64() % (hi - lo + 1) as u64) as usize
    }

    pub fn coin(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    pub fn vec(&mut self, n: usize, lo: f64, hi: f64) -> Vec<f32> {
        (0..n).map(|_| self.range(lo, hi) as f32).collect()
    }

    pub fn tensor(&mut self, c: usize, h: usize, w: usize) -> Tensor {
        Tensor::new(c, h, w, self.vec(c * h * w, -1.0, 1.0)).unwrap()
    }

    pub fn flow(&mut self, h: usize, w: usize, mag: f64) -> FlowField {
        FlowField::new(Tensor::new(2, h, w, self.vec(2 * h * w, -mag, mag)).unwrap()).unwrap()
    }
}

/// Largest `|got - want| / max(|want|, 1)`.
pub fn max_rel_err(got: &[f32], want: &[f64]) -> f64 {
    assert_eq!(got.len(), want.len(), "length mismatch");
    got.iter()
        .zip(want)
        .map(|(&g, &w)| (g as f64 - w).abs() / w.abs().max(1.0))
        .fold(0.0, f64::max)
}

fn out_dim(n: usize, k: usize, s: usize, p: usize, d: usize) -> usize {
    (n + 2 * p - d * (k - 1) - 1) / s + 1
}

/// Direct convolution. `weight` is `[out][in][k][k]`.
#[allow(clippy::too_many_arguments)]
pub fn conv2d_ref(
    x: &Tensor,
    weight: &[f32],
    bias: Option<&[f32]>,
    out_ch: usize,
    k: usize,
    stride: usize,
    pad: usize,
    dil: usize,
) -> (usize, usize, Vec<f64>) {
    let (c, h, w) = (x.channels(), x.height(), x.width());
    let (oh, ow) = (out_dim(h, k, stride, pad, dil), out_dim(w, k, stride, pad, dil));
    let mut out = vec![0f64; out_ch * oh * ow];
    for co in 0..out_ch {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = bias.map_or(0.0, |b| b[co] as f64);
                for ci in 0..c {
                    for ky in 0..k {
                        for kx in 0..k {
                            let iy = (oy * stride + ky * dil) as isize - pad as isize;
                            let ix = (ox * stride + kx * dil) as isize - pad as isize;
                            if iy < 0 || ix < 0 || iy >= h as isize || ix >= w as isize {
                                continue;
                            }
                            let wv = weight[((co * c + ci) * k + ky) * k + kx] as f64;
                            acc += wv * x.at(ci, iy as usize, ix as usize) as f64;
                        }
                    }
                }
                out[(co * oh + oy) * ow + ox] = acc;
            }
        }
    }
    (oh, ow, out)
}

/// Per-channel convolution. `weight` is `[c][k][k]`.
pub fn depthwise_ref(
    x: &Tensor,
    weight: &[f32],
    bias: Option<&[f32]>,
    k: usize,
    stride: usize,
    pad: usize,
    dil: usize,
) -> (usize, usize, Vec<f64>) {
    let (c, h, w) = (x.channels(), x.height(), x.width());
    let (oh, ow) = (out_dim(h, k, stride, pad, dil), out_dim(w, k, stride, pad, dil));
    let mut out = vec![0f64; c * oh * ow];
    for ch in 0..c {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = bias.map_or(0.0, |b| b[ch] as f64);
                for ky in 0..k {
                    for kx in 0..k {
                        let iy = (oy * stride + ky * dil) as isize - pad as isize;
                        let ix = (ox * stride + kx * dil) as isize - pad as isize;
                        if iy >= 0 && ix >= 0 && iy < h as isize && ix < w as isize {
                            acc += weight[(ch * k + ky) * k + kx] as f64 * x.at(ch, iy as usize, ix as usize) as f64;
                        }
                    }
                }
                out[(ch * oh + oy) * ow + ox] = acc;
            }
        }
    }
    (oh, ow, out)
}

/// Half-pixel-centre bilinear resize with edge clamping.
pub fn resize_ref(x: &Tensor, oh: usize, ow: usize) -> Vec<f64> {
    let (c, h, w) = (x.channels(), x.height(), x.width());
    let coord = |o: usize, n_in: usize, n_out: usize| -> (usize, usize, f64) {
        let src = ((o as f64 + 0.5) * n_in as f64 / n_out as f64 - 0.5).max(0.0);
        let i0 = (src.floor() as usize).min(n_in - 1);
        let i1 = (i0 + 1).min(n_in - 1);
        let t = if i0 == n_in - 1 { 0.0 } else { src - i0 as f64 };
        (i0, i1, t)
    };
    let mut out = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        for oy in 0..oh {
            let (y0, y1, ty) = coord(oy, h, oh);
            for ox in 0..ow {
                let (x0, x1, tx) = coord(ox, w, ow);
                let p = |y: usize, xx: usize| x.at(ch, y, xx) as f64;
                let top = p(y0, x0) * (1.0 - tx) + p(y0, x1) * tx;
                let bot = p(y1, x0) * (1.0 - tx) + p(y1, x1) * tx;
                out.push(top * (1.0 - ty) + bot * ty);
            }
        }
    }
    out
}

/// Backward bilinear warp; taps outside the image contribute zero.
pub fn warp_ref(x: &Tensor, flow: &FlowField) -> Vec<f64> {
    let (c, h, w) = (x.channels(), x.height(), x.width());
    let mut out = Vec::with_capacity(c * h * w);
    for ch in 0..c {
        for y in 0..h {
            for xx in 0..w {
                let i = y * w + xx;
                let sx = xx as f64 + flow.u()[i] as f64;
                let sy = y as f64 + flow.v()[i] as f64;
                let (fx, fy) = (sx.floor(), sy.floor());
                let (ax, ay) = (sx - fx, sy - fy);
                let mut acc = 0.0;
                for (dy, wy) in [(0.0, 1.0 - ay), (1.0, ay)] {
                    for (dx, wx) in [(0.0, 1.0 - ax), (1.0, ax)] {
                        let (py, px) = (fy + dy, fx + dx);
                        if py >= 0.0 && px >= 0.0 && py < h as f64 && px < w as f64 {
                            acc += wy * wx * x.at(ch, py as usize, px as usize) as f64;
                        }
                    }
                }
                out.push(acc);
            }
        }
    }
    out
}

/// Mean-over-channels dot product for every displacement in the window,
/// channel `k` holding `(dy, dx) = (k / n - r, k % n - r)`.
pub fn correlation_ref(f1: &Tensor, f2: &Tensor, r: usize) -> Vec<f64> {
    let (c, h, w) = (f1.channels(), f1.height(), f1.width());
    let n = 2 * r + 1;
    let mut out = Vec::with_capacity(n * n * h * w);
    for k in 0..n * n {
        let dy = (k / n) as isize - r as isize;
        let dx = (k % n) as isize - r as isize;
        for y in 0..h {
            for x in 0..w {
                let (y2, x2) = (y as isize + dy, x as isize + dx);
                let mut acc = 0.0;
                if y2 >= 0 && x2 >= 0 && y2 < h as isize && x2 < w as isize {
                    for ch in 0..c {
                        acc += f1.at(ch, y, x) as f64 * f2.at(ch, y2 as usize, x2 as usize) as f64;
                    }
                }
                out.push(acc / c as f64);
            }
        }
    }
    out
}

/// Executes the program step by step holding an explicit set of resident
/// tensors; a tensor leaves the set once no later op reads it.
pub fn brute_force_peak(g: &MemGraph) -> u64 {
    let mut resident: Vec<usize> = g.inputs.clone();
    let mut peak = if g.ops.is_empty() {
        resident.iter().map(|&t| g.tensor_bytes[t]).sum()
    } else {
        0
    };
    for (i, op) in g.ops.iter().enumerate() {
        resident.push(op.output);
        let live: u64 = resident.iter().map(|&t| g.tensor_bytes[t]).sum();
        peak = peak.max(live);
        resident.retain(|&t| {
            g.outputs.contains(&t) || g.ops[i + 1..].iter().any(|later| later.inputs.contains(&t))
        });
    }
    peak
}

/// Random program: `n_inputs` inputs, `n_ops` ops each reading 1..=3 earlier tensors.
pub fn random_graph(rng: &mut Rng, max_ops: usize) -> MemGraph {
    let n_inputs = rng.int(1, 3);
    let n_ops = rng.int(0, max_ops);
    let total = n_inputs + n_ops;
    let tensor_bytes = (0..total).map(|_| rng.int(1, 1000) as u64).collect();
    let mut ops = Vec::new();
    for i in 0..n_ops {
        let avail = n_inputs + i;
        let k = rng.int(1, 3.min(avail));
        let mut inputs: Vec<usize> = (0..k).map(|_| rng.int(0, avail - 1)).collect();
        inputs.sort();
        inputs.dedup();
        ops.push(compactflow::memory::MemOp {
            inputs,
            output: avail,
        });
    }
    let mut outputs = Vec::new();
    if n_ops > 0 {
        outputs.push(total - 1);
    }
    if total > 1 && rng.coin(0.3) {
        let extra = rng.int(0, total - 2);
        if !outputs.contains(&extra) {
            outputs.push(extra);
        }
    }
    MemGraph {
        tensor_bytes,
        inputs: (0..n_inputs).collect(),
        ops,
        outputs,
    }
}

pub fn epe_ref(p: &FlowField, g: &FlowField, mask: Option<&[bool]>) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for i in 0..p.u().len() {
        if mask.is_some_and(|m| !m[i]) || !g.is_valid(i) {
            continue;
        }
        let du = p.u()[i] as f64 - g.u()[i] as f64;
        let dv = p.v()[i] as f64 - g.v()[i] as f64;
        sum += (du * du + dv * dv).sqrt();
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

pub fn fl_ref(p: &FlowField, g: &FlowField, mask: Option<&[bool]>) -> Option<f64> {
    let mut bad = 0usize;
    let mut n = 0usize;
    for i in 0..p.u().len() {
        if mask.is_some_and(|m| !m[i]) || !g.is_valid(i) {
            continue;
        }
        let du = p.u()[i] as f64 - g.u()[i] as f64;
        let dv = p.v()[i] as f64 - g.v()[i] as f64;
        let e = (du * du + dv * dv).sqrt();
        let m = ((g.u()[i] as f64).powi(2) + (g.v()[i] as f64).powi(2)).sqrt();
        if e > 3.0 && e > 0.05 * m {
            bad += 1;
        }
        n += 1;
    }
    (n > 0).then(|| bad as f64 / n as f64)
}

/// Sum over pixels of the (optionally squared) distance, mean when asked.
pub fn level_term_ref(p: &FlowField, t_u: &[f64], t_v: &[f64], squared: bool, mean: bool) -> f64 {
    let mut s = 0.0;
    for i in 0..p.u().len() {
        let d2 = (p.u()[i] as f64 - t_u[i]).powi(2) + (p.v()[i] as f64 - t_v[i]).powi(2);
        s += if squared { d2 } else { d2.sqrt() };
    }
    if mean {
        s / p.u().len() as f64
    } else {
        s
    }
}

/// Box-pool `gt` by `2^level` and divide by `2^level * div_flow`.
pub fn pooled_target(gt: &FlowField, level: usize, div_flow: f64) -> (Vec<f64>, Vec<f64>) {
    let k = 1 << level;
    let (h, w) = (gt.height(), gt.width());
    let (oh, ow) = (h / k, w / k);
    let mut u = vec![0.0; oh * ow];
    let mut v = vec![0.0; oh * ow];
    for y in 0..h {
        for x in 0..w {
            let o = (y / k) * ow + x / k;
            u[o] += gt.u()[y * w + x] as f64;
            v[o] += gt.v()[y * w + x] as f64;
        }
    }
    let s = (k * k) as f64 * k as f64 * div_flow;
    (u.iter().map(|a| a / s).collect(), v.iter().map(|a| a / s).collect())
}
