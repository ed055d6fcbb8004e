//! Benchmark harness behind the `cfnet` command line: latency profiling,
//! inference on image pairs, dataset evaluation, cost reports and weight
//! file checks. Every command returns a serialisable report.

mod config;
mod eval;
mod infer;
mod report;
mod timing;

pub use config::{
    BenchConfig, DatasetConfig, Layout, ReportConfig, Resolution, DEFAULT_MEMORY_LIMIT, DEFAULT_RUNS,
    DEFAULT_WARMUP, REPORT_RESOLUTIONS,
};
pub use eval::{cmd_eval, discover_pairs, EvalOptions, EvalReport, FramePair, FrameResult};
pub use infer::{cmd_infer, crop_flow, pad_to_alignment, run_padded, InferOptions, InferReport};
pub use report::{cmd_report, render_table, ReportDocument, ReportOptions};
pub use timing::{measure, LatencyStats, ScriptedClock, Timer, WallClock};

use std::path::{Path, PathBuf};

use rand_core::{RngCore, SeedableRng};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    build_model, count_flops, count_params, plan_memory, prediction_heads, MemoryPlan, ModelOverrides,
    ModelSpec, Network, Stage, Variant,
};
use crate::tensor::Tensor;
use crate::weights::{fingerprint, init_deterministic, load_weights, DType, SplitMix64, WeightStore};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Environment {
    pub os: &'static str,
    pub arch: &'static str,
    pub threads: usize,
    pub engine_version: &'static str,
}

impl Environment {
    pub fn current() -> Self {
        Environment {
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
            threads: rayon::current_num_threads(),
            engine_version: env!("CARGO_PKG_VERSION"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StageCounts {
    pub feature_extractor: u64,
    pub flow_estimator: u64,
    pub flow_refiner: u64,
    pub total: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub model: Variant,
    pub resolution: Resolution,
    /// Resolution the network actually runs at after padding.
    pub compute_resolution: Resolution,
    /// Absent when no timed runs were requested.
    pub latency: Option<LatencyStats>,
    pub params: StageCounts,
    /// Two operations per multiply-accumulate.
    pub flops: StageCounts,
    /// Peak live activations plus weights, f32.
    pub planned_peak_memory: u64,
    pub environment: Environment,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Cost accounting for `model` at `resolution` (padded as inference pads it).
pub fn accounting(model: &ModelSpec, resolution: Resolution) -> Result<(StageCounts, StageCounts, MemoryPlan)> {
    let compute = resolution.padded();
    let p = count_params(model);
    let f = count_flops(model, compute.height, compute.width)?;
    let params = StageCounts {
        feature_extractor: p.feature_extractor as u64,
        flow_estimator: p.flow_estimator as u64,
        flow_refiner: p.flow_refiner as u64,
        total: p.total as u64,
    };
    let flops = StageCounts {
        feature_extractor: f.stage(Stage::FeatureExtractor),
        flow_estimator: f.stage(Stage::FlowEstimator),
        flow_refiner: f.stage(Stage::FlowRefiner),
        total: f.total_flops,
    };
    let mem = plan_memory(model, compute.height, compute.width, 4)?;
    Ok((params, flops, mem))
}

/// Refuse resolutions whose planned memory exceeds `limit`.
pub fn check_memory(model: &ModelSpec, resolution: Resolution, limit: u64) -> Result<MemoryPlan> {
    let c = resolution.padded();
    let plan = plan_memory(model, c.height, c.width, 4)?;
    if plan.total_bytes > limit {
        return Err(Error::TooLarge {
            h: resolution.height,
            w: resolution.width,
            planned_bytes: plan.total_bytes,
            limit_bytes: limit,
        });
    }
    Ok(plan)
}

/// Two uniform-noise frames from `seed`.
pub fn synthetic_pair(resolution: Resolution, seed: u64) -> (Tensor, Tensor) {
    let frame = |s: u64| {
        let mut rng = SplitMix64::seed_from_u64(s);
        let n = 3 * resolution.height * resolution.width;
        let data = (0..n).map(|_| (rng.next_u64() >> 40) as f32 / (1u32 << 24) as f32).collect();
        Tensor::new(3, resolution.height, resolution.width, data).expect("sized to resolution")
    };
    (frame(seed), frame(seed.wrapping_add(1)))
}

/// Zero every tensor of the layers that emit flow, so the network predicts
/// exactly zero everywhere.
pub fn zero_prediction_weights(model: &ModelSpec, store: &mut WeightStore) -> usize {
    let heads = prediction_heads(model);
    store.zero_where(|name| heads.iter().any(|h| h == name))
}

pub fn read_weights(path: &Path) -> Result<WeightStore> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    load_weights(&bytes).map_err(|e| e.in_file(path))
}

/// Weights from `path` when given, otherwise seeded initialisation.
pub fn weights_for(model: &ModelSpec, path: Option<&Path>, seed: u64) -> Result<WeightStore> {
    match path {
        Some(p) => read_weights(p),
        None => Ok(init_deterministic(model, seed)),
    }
}

pub fn network_for(model: &ModelSpec, path: Option<&Path>, seed: u64) -> Result<(Network, u64)> {
    let store = weights_for(model, path, seed)?;
    let net = match path {
        Some(p) => Network::load(model, &store).map_err(|e| e.in_file(p))?,
        None => Network::load(model, &store)?,
    };
    Ok((net, fingerprint(&store)))
}

#[derive(Clone, Debug)]
pub struct ProfileOptions {
    pub model: Variant,
    pub overrides: ModelOverrides,
    pub resolution: Resolution,
    pub warmup: usize,
    pub runs: usize,
    pub seed: u64,
    pub memory_limit_bytes: u64,
}

impl ProfileOptions {
    pub fn new(model: Variant, resolution: Resolution) -> Self {
        ProfileOptions {
            model,
            overrides: ModelOverrides::default(),
            resolution,
            warmup: DEFAULT_WARMUP,
            runs: DEFAULT_RUNS,
            seed: 0,
            memory_limit_bytes: DEFAULT_MEMORY_LIMIT,
        }
    }
}

/// Build the model with seeded weights, run `warmup` discarded forwards,
/// then time `runs` forwards on a fixed synthetic pair.
pub fn cmd_profile(opts: &ProfileOptions, timer: &mut dyn Timer) -> Result<BenchReport> {
    if opts.runs == 0 {
        return Err(Error::invalid("profile", "runs must be at least 1"));
    }
    let model = build_model(opts.model, &opts.overrides)?;
    let (params, flops, _) = accounting(&model, opts.resolution)?;
    let plan = check_memory(&model, opts.resolution, opts.memory_limit_bytes)?;
    let net = Network::load(&model, &init_deterministic(&model, opts.seed))?;
    let (a, b) = synthetic_pair(opts.resolution, opts.seed);
    let mut work = || run_padded(&net, &a, &b).map(drop);
    let samples = measure(timer, opts.warmup, opts.runs, &mut work)?;
    Ok(BenchReport {
        model: opts.model,
        resolution: opts.resolution,
        compute_resolution: opts.resolution.padded(),
        latency: Some(LatencyStats::from_samples(&samples, opts.warmup)?),
        params,
        flops,
        planned_peak_memory: plan.total_bytes,
        environment: Environment::current(),
        note: None,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WeightsCheckReport {
    pub model: Variant,
    pub path: PathBuf,
    pub file_bytes: u64,
    pub tensors: usize,
    pub scalars: usize,
    pub f16_tensors: usize,
    pub fingerprint: String,
}

/// Validate a CFW1 file and bind it to `model`.
pub fn cmd_check_weights(model: Variant, overrides: &ModelOverrides, path: &Path) -> Result<WeightsCheckReport> {
    let spec = build_model(model, overrides)?;
    let store = read_weights(path)?;
    Network::load(&spec, &store).map_err(|e| e.in_file(path))?;
    let file_bytes = std::fs::metadata(path).map_err(|e| Error::io(path, e))?.len();
    Ok(WeightsCheckReport {
        model,
        path: path.to_path_buf(),
        file_bytes,
        tensors: store.len(),
        scalars: store.num_scalars(),
        f16_tensors: store.iter().filter(|(_, t)| t.dtype == DType::F16).count(),
        fingerprint: format!("{:016x}", fingerprint(&store)),
    })
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialise");
    s.push('\n');
    s
}

/// `out` itself when it already names a `.json` file, otherwise `out` with
/// its extension replaced.
pub fn report_path(out: &Path) -> PathBuf {
    if out.extension().is_some_and(|e| e == "json") {
        out.to_path_buf()
    } else {
        out.with_extension("json")
    }
}

pub fn write_report<T: Serialize>(out: &Path, value: &T) -> Result<PathBuf> {
    let path = report_path(out);
    crate::io::write_file(&path, to_json(value).as_bytes())?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_uses_injected_clock() {
        let mut opts = ProfileOptions::new(Variant::Compactflownet, Resolution::new(64, 64));
        opts.warmup = 2;
        opts.runs = 3;
        let mut clock = ScriptedClock::new([10.0, 20.0, 30.0, 40.0, 50.0]);
        let r = cmd_profile(&opts, &mut clock).unwrap();
        let lat = r.latency.unwrap();
        assert_eq!((lat.mean_ms, lat.runs, lat.warmup), (40.0, 3, 2));
    }

    #[test]
    fn profile_defaults() {
        let o = ProfileOptions::new(Variant::PwcnetPlus, Resolution::new(512, 512));
        assert_eq!((o.warmup, o.runs), (100, 100));
    }

    #[test]
    fn oversized_resolution_refused() {
        let mut opts = ProfileOptions::new(Variant::PwcnetPlus, Resolution::new(8192, 8192));
        opts.runs = 1;
        let err = cmd_profile(&opts, &mut WallClock).unwrap_err();
        assert!(matches!(err, Error::TooLarge { .. }), "{err}");
    }

    #[test]
    fn report_paths() {
        assert_eq!(report_path(Path::new("a/b.flo")), PathBuf::from("a/b.json"));
        assert_eq!(report_path(Path::new("r.json")), PathBuf::from("r.json"));
    }

    #[test]
    fn zeroing_heads() {
        let m = build_model(Variant::PwcnetSmall, &ModelOverrides::default()).unwrap();
        let mut s = init_deterministic(&m, 1);
        assert_eq!(zero_prediction_weights(&m, &mut s), 12);
    }
}
