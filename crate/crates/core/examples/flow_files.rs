//! Write a synthetic rotation field as `.flo`, KITTI PNG and a color
//! rendering, then read the files back.

use compactflow::flow::FlowField;
use compactflow::io::{flow_to_color, read_flo, read_kitti_png, write_flo, write_kitti_png, write_png};
use compactflow::Tensor;

fn main() -> compactflow::Result<()> {
    let (h, w) = (48, 64);
    let t = Tensor::from_fn(2, h, w, |c, y, x| {
        let (dy, dx) = (y as f32 - h as f32 / 2.0, x as f32 - w as f32 / 2.0);
        if c == 0 { -dy * 0.3 } else { dx * 0.3 }
    });
    let flow = FlowField::new(t)?;
    let dir = std::env::temp_dir().join("compactflow-flow-files");
    std::fs::create_dir_all(&dir).map_err(|e| compactflow::Error::Io { path: dir.clone(), source: e })?;

    let flo = write_flo(&flow)?;
    println!(".flo: {} bytes, exact round trip: {}", flo.len(), read_flo(&flo)?.tensor() == flow.tensor());

    let png = write_kitti_png(&flow)?;
    let back = read_kitti_png(&png)?.flow;
    let worst = back.tensor().max_abs_diff(flow.tensor()).unwrap_or(0.0);
    println!("KITTI png: {} bytes, worst quantisation error {worst:.5} px", png.len());

    let out = dir.join("rotation.png");
    write_png(&out, &flow_to_color(&flow, None))?;
    println!("color rendering: {}", out.display());
    Ok(())
}
