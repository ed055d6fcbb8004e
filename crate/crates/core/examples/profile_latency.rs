//! Latency profiling with the wall clock, then with a scripted clock to
//! show exactly which samples the statistics use.
//!
//! cargo run --release --example profile_latency -- 128x128 5 10

use compactflow::bench::{cmd_profile, ProfileOptions, Resolution, ScriptedClock, WallClock};
use compactflow::model::Variant;

fn main() -> compactflow::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let res: Resolution = args.first().map_or(Ok(Resolution::new(128, 128)), |s| s.parse())?;
    let warmup = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let runs = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(5);

    for variant in Variant::ALL {
        let mut opts = ProfileOptions::new(variant, res);
        opts.warmup = warmup;
        opts.runs = runs;
        let r = cmd_profile(&opts, &mut WallClock)?;
        let l = r.latency.expect("runs > 0");
        println!(
            "{variant:<15} {res}: mean {:7.1} ms  std {:5.1}  p50 {:7.1}  p95 {:7.1}  ({:.2} GFLOPs)",
            l.mean_ms,
            l.std_ms,
            l.p50_ms,
            l.p95_ms,
            r.flops.total as f64 / 1e9
        );
    }

    let mut opts = ProfileOptions::new(Variant::Compactflownet, Resolution::new(64, 64));
    opts.warmup = 2;
    opts.runs = 3;
    let mut clock = ScriptedClock::new([10.0, 20.0, 30.0, 40.0, 50.0]);
    let l = cmd_profile(&opts, &mut clock)?.latency.expect("runs > 0");
    println!("scripted 10..50 ms, 2 warm-up: mean {} over {} runs", l.mean_ms, l.runs);
    Ok(())
}
