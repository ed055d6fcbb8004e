//! Run every variant on a synthetic pair and print per-level flow shapes.
//! Weights are seeded, so the flows are arbitrary but reproducible.

use compactflow::bench::synthetic_pair;
use compactflow::bench::Resolution;
use compactflow::model::{build_model, ModelOverrides, Network, Variant};
use compactflow::weights::{fingerprint, init_deterministic};

fn main() -> compactflow::Result<()> {
    let (a, b) = synthetic_pair(Resolution::new(128, 192), 11);
    for variant in Variant::ALL {
        let model = build_model(variant, &ModelOverrides::default())?;
        let store = init_deterministic(&model, 42);
        let net = Network::load(&model, &store)?;
        let out = net.forward(&a, &b)?;
        println!("{variant} (weights {:016x})", fingerprint(&store));
        for (level, flow) in &out.level_flows {
            println!("  level {level}: {}x{}", flow.height(), flow.width());
        }
        let mean = out.flow.u().iter().map(|u| u.abs()).sum::<f32>() / out.flow.u().len() as f32;
        println!("  final: {}x{}, mean |u| {mean:.4}", out.flow.height(), out.flow.width());

        let pyr = net.extract_pyramid(&a)?;
        let widths: Vec<usize> = pyr.iter().map(|(_, t)| t.channels()).collect();
        println!("  pyramid channels {widths:?}");
    }
    Ok(())
}
