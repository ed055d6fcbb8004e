//! Seeded weights through the CFW1 container at both precisions.

use compactflow::model::{build_model, ModelOverrides, Variant};
use compactflow::weights::{fingerprint, init_deterministic, load_weights, save_weights, DType, EMPTY_FINGERPRINT};

fn main() -> compactflow::Result<()> {
    let model = build_model(Variant::Compactflownet, &ModelOverrides::default())?;
    let store = init_deterministic(&model, 1);
    println!("{} tensors, {} scalars", store.len(), store.num_scalars());

    let f32_bytes = save_weights(&store, DType::F32);
    let back = load_weights(&f32_bytes)?;
    println!(
        "f32: {} bytes, round trip identical: {}",
        f32_bytes.len(),
        fingerprint(&back) == fingerprint(&store)
    );

    let f16_bytes = save_weights(&store, DType::F16);
    let half = load_weights(&f16_bytes)?;
    println!(
        "f16: {:.2} MiB, re-save identical: {}",
        f16_bytes.len() as f64 / 1048576.0,
        save_weights(&half, DType::F16) == f16_bytes
    );

    let mut corrupt = f32_bytes.clone();
    corrupt[200] ^= 1;
    match load_weights(&corrupt) {
        Err(e) => println!("flipped bit detected: {e}"),
        Ok(_) => println!("flipped bit went unnoticed"),
    }
    println!("empty store fingerprint: {EMPTY_FINGERPRINT:#018x}");
    Ok(())
}
