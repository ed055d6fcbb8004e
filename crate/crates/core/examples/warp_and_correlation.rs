//! Backward warping and the cost volume on features moved by a known
//! integer shift.

use compactflow::flow::{correlation, warp, FlowField};
use compactflow::Tensor;

fn main() -> compactflow::Result<()> {
    let (c, h, w) = (8, 16, 16);
    // pseudo-random unit-length feature vectors per pixel
    let raw = Tensor::from_fn(c, h + 8, w + 8, |k, y, x| (((k * 7919 + y * 104_729 + x * 1_299_709) % 1013) as f32 / 506.5) - 1.0);
    let mut norms = vec![0f32; (h + 8) * (w + 8)];
    for k in 0..c {
        for (n, v) in norms.iter_mut().zip(raw.channel(k)) {
            *n += v * v;
        }
    }
    let unit = |k: usize, y: usize, x: usize| raw.at(k, y, x) / norms[y * (w + 8) + x].sqrt();
    let f1 = Tensor::from_fn(c, h, w, |k, y, x| unit(k, y + 4, x + 4));
    // frame 2 content moved 2 px right and 1 px down
    let f2 = Tensor::from_fn(c, h, w, |k, y, x| unit(k, y + 3, x + 2));

    println!("zero flow warp is exact: {}", warp(&f1, &FlowField::zeros(h, w))? == f1);

    let back = warp(&f2, &FlowField::constant(h, w, 2.0, 1.0))?;
    let err = (0..c)
        .flat_map(|k| (0..h - 1).flat_map(move |y| (0..w - 2).map(move |x| (k, y, x))))
        .map(|(k, y, x)| (back.at(k, y, x) - f1.at(k, y, x)).abs())
        .fold(0.0f32, f32::max);
    println!("warping frame 2 by the true motion recovers frame 1: max error {err}");

    let cv = correlation(&f1, &f2, 3)?;
    let (y, x) = (8, 8);
    let best = (0..cv.volume.channels())
        .max_by(|&a, &b| cv.volume.at(a, y, x).total_cmp(&cv.volume.at(b, y, x)))
        .unwrap();
    println!(
        "cost volume has {} channels; best match at ({y},{x}) is displacement (dy, dx) = {:?}",
        cv.volume.channels(),
        cv.displacement(best)
    );
    Ok(())
}
