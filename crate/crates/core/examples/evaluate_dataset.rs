//! Build a two-pair Sintel-style directory, then score it with seeded
//! weights whose prediction layers are zeroed, so the network predicts no
//! motion and the errors equal the ground-truth magnitudes.

use std::path::Path;

use compactflow::bench::{cmd_eval, zero_prediction_weights, EvalOptions, Layout};
use compactflow::flow::FlowField;
use compactflow::io::{write_flo, write_png};
use compactflow::model::{build_model, ModelOverrides, Variant};
use compactflow::weights::{init_deterministic, save_weights, DType};
use compactflow::{Error, Result, Tensor};

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::create_dir_all(path.parent().unwrap()).map_err(|e| Error::Io { path: path.into(), source: e })?;
    std::fs::write(path, bytes).map_err(|e| Error::Io { path: path.into(), source: e })
}

fn main() -> Result<()> {
    let root = std::env::temp_dir().join("compactflow-eval-demo");
    let _ = std::fs::remove_dir_all(&root);
    let frame = Tensor::filled(3, 40, 60, 0.5);
    for i in 1..=3 {
        let p = root.join(format!("clean/alley/frame_{i:04}.png"));
        std::fs::create_dir_all(p.parent().unwrap()).map_err(|e| Error::Io { path: p.clone(), source: e })?;
        write_png(&p, &frame)?;
    }
    write(&root.join("flow/alley/frame_0001.flo"), &write_flo(&FlowField::constant(40, 60, 3.0, 4.0))?)?;
    write(&root.join("flow/alley/frame_0002.flo"), &write_flo(&FlowField::zeros(40, 60))?)?;

    let model = build_model(Variant::PwcnetSmall, &ModelOverrides::default())?;
    let mut store = init_deterministic(&model, 0);
    zero_prediction_weights(&model, &mut store);
    let weights = root.join("zero.cfw");
    write(&weights, &save_weights(&store, DType::F32))?;

    let mut opts = EvalOptions::new(Variant::PwcnetSmall, &root, Layout::Sintel);
    opts.weights = Some(weights);
    let report = cmd_eval(&opts)?;
    for f in &report.frames {
        println!("{:<18} EPE {:.3}", f.name, f.epe);
    }
    println!("AEPE {:.3}", report.aepe);
    Ok(())
}
