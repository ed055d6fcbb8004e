//! Peak activation memory: a hand-built program and the full networks.

use compactflow::memory::{peak_live_bytes, MemGraph, MemOp};
use compactflow::model::{build_model, plan_memory, ModelOverrides, Variant};

fn main() -> compactflow::Result<()> {
    // a -> b -> c, with a skip from a into d = f(c, a)
    let g = MemGraph {
        tensor_bytes: vec![400, 800, 800, 400],
        inputs: vec![0],
        ops: vec![
            MemOp { inputs: vec![0], output: 1 },
            MemOp { inputs: vec![1], output: 2 },
            MemOp { inputs: vec![2, 0], output: 3 },
        ],
        outputs: vec![3],
    };
    println!("toy program peak: {} bytes", peak_live_bytes(&g)?);

    for (h, w) in [(512, 512), (448, 1024), (1088, 1920)] {
        for variant in Variant::ALL {
            let m = build_model(variant, &ModelOverrides::default())?;
            let plan = plan_memory(&m, h, w, 4)?;
            println!(
                "{h}x{w} {variant:<15} activations {:>8.1} MiB + weights {:>5.1} MiB",
                plan.peak_activation_bytes as f64 / 1048576.0,
                plan.weight_bytes as f64 / 1048576.0
            );
        }
    }
    Ok(())
}
