//! Middlebury color-wheel flow rendering.

use crate::flow::FlowField;
use crate::tensor::Tensor;

/// The 55-entry Middlebury wheel: red to yellow (15), yellow to green (6),
/// green to cyan (4), cyan to blue (11), blue to magenta (13), magenta to
/// red (6), each ramp stepping `floor(255 i / n)`.
pub const COLOR_WHEEL: [[u8; 3]; 55] = [
    [255, 0, 0], [255, 17, 0], [255, 34, 0], [255, 51, 0], [255, 68, 0],
    [255, 85, 0], [255, 102, 0], [255, 119, 0], [255, 136, 0], [255, 153, 0],
    [255, 170, 0], [255, 187, 0], [255, 204, 0], [255, 221, 0], [255, 238, 0],
    [255, 255, 0], [213, 255, 0], [170, 255, 0], [128, 255, 0], [85, 255, 0],
    [43, 255, 0], [0, 255, 0], [0, 255, 63], [0, 255, 127], [0, 255, 191],
    [0, 255, 255], [0, 232, 255], [0, 209, 255], [0, 186, 255], [0, 163, 255],
    [0, 140, 255], [0, 116, 255], [0, 93, 255], [0, 70, 255], [0, 47, 255],
    [0, 24, 255], [0, 0, 255], [19, 0, 255], [39, 0, 255], [58, 0, 255],
    [78, 0, 255], [98, 0, 255], [117, 0, 255], [137, 0, 255], [156, 0, 255],
    [176, 0, 255], [196, 0, 255], [215, 0, 255], [235, 0, 255], [255, 0, 255],
    [255, 0, 213], [255, 0, 170], [255, 0, 128], [255, 0, 85], [255, 0, 43],
];

/// Render flow as colors in `[0, 1]`: hue from direction, saturation from
/// magnitude relative to `max_rad` (the field's largest magnitude when
/// absent). Zero flow is white; masked-out pixels are black.
pub fn flow_to_color(flow: &FlowField, max_rad: Option<f32>) -> Tensor {
    let (h, w) = (flow.height(), flow.width());
    let n = h * w;
    let (u, v) = (flow.u(), flow.v());
    let max_rad = match max_rad {
        Some(r) if r > 0.0 => r as f64,
        _ => {
            let m = (0..n)
                .filter(|&i| flow.is_valid(i))
                .map(|i| (u[i] as f64).hypot(v[i] as f64))
                .fold(0.0, f64::max);
            if m > 0.0 {
                m
            } else {
                1.0
            }
        }
    };
    let ncols = COLOR_WHEEL.len();
    let mut out = Tensor::zeros(3, h, w);
    for i in 0..n {
        if !flow.is_valid(i) {
            continue;
        }
        let (fu, fv) = (u[i] as f64 / max_rad, v[i] as f64 / max_rad);
        let rad = fu.hypot(fv);
        let a = (-fv).atan2(-fu) / std::f64::consts::PI;
        let fk = (a + 1.0) / 2.0 * (ncols - 1) as f64;
        let k0 = (fk.floor() as usize).min(ncols - 1);
        let k1 = if k0 + 1 == ncols { 0 } else { k0 + 1 };
        let f = fk - k0 as f64;
        for c in 0..3 {
            let c0 = COLOR_WHEEL[k0][c] as f64 / 255.0;
            let c1 = COLOR_WHEEL[k1][c] as f64 / 255.0;
            let col = (1.0 - f) * c0 + f * c1;
            let col = if rad <= 1.0 { 1.0 - rad * (1.0 - col) } else { col * 0.75 };
            out.data_mut()[c * n + i] = col.clamp(0.0, 1.0) as f32;
        }
    }
    out
}
