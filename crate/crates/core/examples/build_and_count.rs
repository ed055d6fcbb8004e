//! Build every variant and print parameter, FLOP and memory figures.
//!
//! cargo run --example build_and_count -- 512 512

use compactflow::model::{build_model, count_flops, count_params, plan_memory, ModelOverrides, Stage, Variant};

fn main() -> compactflow::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let (h, w) = match args.as_slice() {
        [h, w, ..] => (*h, *w),
        _ => (512, 512),
    };
    for variant in Variant::ALL {
        let model = build_model(variant, &ModelOverrides::default())?;
        let params = count_params(&model);
        let flops = count_flops(&model, h, w)?;
        let mem = plan_memory(&model, h, w, 4)?;
        println!("{variant} @ {h}x{w}");
        for stage in Stage::MODEL_STAGES {
            println!(
                "  {:<18} {:>10} params {:>8.3} GMAC {:>8.3} GFLOP",
                stage.as_str(),
                params.stage(stage),
                flops.stage_mac_count(stage) as f64 / 1e9,
                flops.stage(stage) as f64 / 1e9,
            );
        }
        println!(
            "  {:<18} {:>10} params {:>8.3} GMAC {:>8.3} GFLOP",
            "total",
            params.total,
            flops.total_macs as f64 / 1e9,
            flops.total_flops as f64 / 1e9
        );
        println!(
            "  peak activations {:.1} MiB, weights {:.1} MiB",
            mem.peak_activation_bytes as f64 / (1 << 20) as f64,
            mem.weight_bytes as f64 / (1 << 20) as f64
        );
    }
    Ok(())
}
