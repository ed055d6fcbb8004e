//! Randomised kernel-versus-reference sweeps. Each returns the number of
//! cases run and the worst relative error seen.
#![allow(dead_code)]

use compactflow::flow::{correlation, warp};
use compactflow::tensor::{bilinear_resize, conv2d, depthwise_conv2d, ConvParams, Kernel};

use super::*;

pub struct Sweep {
    pub cases: usize,
    pub worst: f64,
}

fn conv_geometry(rng: &mut Rng) -> (usize, usize, usize, usize, usize, usize) {
    loop {
        let k = [1, 3, 5][rng.int(0, 2)];
        let stride = rng.int(1, 3);
        let dil = rng.int(1, 3);
        let pad = rng.int(0, (k / 2) * dil);
        let h = rng.int(1, 12);
        let w = rng.int(1, 12);
        if h + 2 * pad > dil * (k - 1) && w + 2 * pad > dil * (k - 1) {
            return (k, stride, dil, pad, h, w);
        }
    }
}

pub fn conv2d_sweep(seed: u64, cases: usize) -> Sweep {
    let mut rng = Rng::new(seed);
    let mut worst = 0f64;
    for _ in 0..cases {
        let (k, stride, dil, pad, h, w) = conv_geometry(&mut rng);
        let (ci, co) = (rng.int(1, 6), rng.int(1, 6));
        let x = rng.tensor(ci, h, w);
        let weight = rng.vec(co * ci * k * k, -1.0, 1.0);
        let bias = rng.coin(0.5).then(|| rng.vec(co, -1.0, 1.0));
        let p = ConvParams::new(Kernel::new(co, ci, k, k, weight.clone()).unwrap(), bias.clone(), stride, pad, dil).unwrap();
        let got = conv2d(&x, &p).unwrap();
        let (oh, ow, want) = conv2d_ref(&x, &weight, bias.as_deref(), co, k, stride, pad, dil);
        assert_eq!((got.height(), got.width()), (oh, ow));
        worst = worst.max(max_rel_err(got.data(), &want));
    }
    Sweep { cases, worst }
}

pub fn depthwise_sweep(seed: u64, cases: usize) -> Sweep {
    let mut rng = Rng::new(seed);
    let mut worst = 0f64;
    for _ in 0..cases {
        let (k, stride, dil, pad, h, w) = conv_geometry(&mut rng);
        let c = rng.int(1, 8);
        let x = rng.tensor(c, h, w);
        let weight = rng.vec(c * k * k, -1.0, 1.0);
        let bias = rng.coin(0.5).then(|| rng.vec(c, -1.0, 1.0));
        let p = ConvParams::new(Kernel::new(c, 1, k, k, weight.clone()).unwrap(), bias.clone(), stride, pad, dil).unwrap();
        let got = depthwise_conv2d(&x, &p).unwrap();
        let (oh, ow, want) = depthwise_ref(&x, &weight, bias.as_deref(), k, stride, pad, dil);
        assert_eq!((got.height(), got.width()), (oh, ow));
        worst = worst.max(max_rel_err(got.data(), &want));
    }
    Sweep { cases, worst }
}

pub fn resize_sweep(seed: u64, cases: usize) -> Sweep {
    let mut rng = Rng::new(seed);
    let mut worst = 0f64;
    for _ in 0..cases {
        let (c, h, w) = (rng.int(1, 4), rng.int(1, 10), rng.int(1, 10));
        let (oh, ow) = (rng.int(1, 24), rng.int(1, 24));
        let x = rng.tensor(c, h, w);
        let got = bilinear_resize(&x, oh, ow);
        worst = worst.max(max_rel_err(got.data(), &resize_ref(&x, oh, ow)));
    }
    Sweep { cases, worst }
}

pub fn warp_sweep(seed: u64, cases: usize) -> Sweep {
    let mut rng = Rng::new(seed);
    let mut worst = 0f64;
    for _ in 0..cases {
        let (c, h, w) = (rng.int(1, 4), rng.int(1, 12), rng.int(1, 12));
        let x = rng.tensor(c, h, w);
        // displacements reach past the borders to exercise zero fill
        let flow = rng.flow(h, w, 1.0 + w.max(h) as f64 / 2.0);
        let got = warp(&x, &flow).unwrap();
        worst = worst.max(max_rel_err(got.data(), &warp_ref(&x, &flow)));
    }
    Sweep { cases, worst }
}

pub fn correlation_sweep(seed: u64, cases: usize) -> Sweep {
    let mut rng = Rng::new(seed);
    let mut worst = 0f64;
    for _ in 0..cases {
        let (c, h, w, r) = (rng.int(1, 8), rng.int(1, 10), rng.int(1, 10), rng.int(0, 4));
        let a = rng.tensor(c, h, w);
        let b = rng.tensor(c, h, w);
        let got = correlation(&a, &b, r).unwrap();
        worst = worst.max(max_rel_err(got.volume.data(), &correlation_ref(&a, &b, r)));
    }
    Sweep { cases, worst }
}
