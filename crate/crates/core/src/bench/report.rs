use std::fmt::Write as _;

use serde::Serialize;

use super::{
    accounting, check_memory, cmd_profile, BenchReport, Environment, ProfileOptions, Resolution, Timer,
    DEFAULT_MEMORY_LIMIT, REPORT_RESOLUTIONS,
};
use crate::error::{Error, Result};
use crate::model::{build_model, ModelOverrides, Variant};

#[derive(Clone, Debug)]
pub struct ReportOptions {
    pub models: Vec<Variant>,
    pub resolutions: Vec<Resolution>,
    pub overrides: ModelOverrides,
    /// Timed runs per cell; 0 leaves latency out.
    pub runs: usize,
    pub warmup: usize,
    pub seed: u64,
    pub memory_limit_bytes: u64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            models: Variant::ALL.to_vec(),
            resolutions: REPORT_RESOLUTIONS.to_vec(),
            overrides: ModelOverrides::default(),
            runs: 0,
            warmup: 0,
            seed: 0,
            memory_limit_bytes: DEFAULT_MEMORY_LIMIT,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportDocument {
    pub resolutions: Vec<Resolution>,
    pub flop_convention: &'static str,
    pub rows: Vec<BenchReport>,
}

/// Cost table for every model at every resolution, with latency when
/// `runs > 0`. Cells whose planned memory exceeds the limit keep their
/// accounting and carry a note instead of latency.
pub fn cmd_report(opts: &ReportOptions, timer: &mut dyn Timer) -> Result<ReportDocument> {
    let mut rows = Vec::new();
    for &variant in &opts.models {
        let model = build_model(variant, &opts.overrides)?;
        for &res in &opts.resolutions {
            let (params, flops, mem) = accounting(&model, res)?;
            let mut row = BenchReport {
                model: variant,
                resolution: res,
                compute_resolution: res.padded(),
                latency: None,
                params,
                flops,
                planned_peak_memory: mem.total_bytes,
                environment: Environment::current(),
                note: None,
            };
            if opts.runs > 0 {
                match check_memory(&model, res, opts.memory_limit_bytes) {
                    Ok(_) => {
                        let p = ProfileOptions {
                            model: variant,
                            overrides: opts.overrides.clone(),
                            resolution: res,
                            warmup: opts.warmup,
                            runs: opts.runs,
                            seed: opts.seed,
                            memory_limit_bytes: opts.memory_limit_bytes,
                        };
                        row.latency = cmd_profile(&p, timer)?.latency;
                    }
                    Err(e @ Error::TooLarge { .. }) => row.note = Some(e.to_string()),
                    Err(e) => return Err(e),
                }
            }
            rows.push(row);
        }
    }
    Ok(ReportDocument {
        resolutions: opts.resolutions.clone(),
        flop_convention: "flops = 2 x multiply-accumulates",
        rows,
    })
}

/// Plain-text table: one block per model, one column per resolution.
pub fn render_table(doc: &ReportDocument) -> String {
    let mut s = String::new();
    let mut models: Vec<Variant> = Vec::new();
    for r in &doc.rows {
        if !models.contains(&r.model) {
            models.push(r.model);
        }
    }
    if models.is_empty() {
        s.push_str("(no models)\n");
        return s;
    }
    for m in models {
        let cells: Vec<&BenchReport> = doc.rows.iter().filter(|r| r.model == m).collect();
        let _ = write!(s, "{:<22}", m.as_str());
        for c in &cells {
            let _ = write!(s, "{:>14}", c.resolution.to_string());
        }
        s.push('\n');
        let line = |s: &mut String, label: &str, f: &dyn Fn(&BenchReport) -> String| {
            let _ = write!(s, "  {label:<20}");
            for c in &cells {
                let _ = write!(s, "{:>14}", f(c));
            }
            s.push('\n');
        };
        line(&mut s, "params (M)", &|c| format!("{:.3}", c.params.total as f64 / 1e6));
        line(&mut s, "GFLOPs", &|c| format!("{:.2}", c.flops.total as f64 / 1e9));
        line(&mut s, "planned memory (MiB)", &|c| {
            format!("{:.1}", c.planned_peak_memory as f64 / (1u64 << 20) as f64)
        });
        line(&mut s, "latency mean (ms)", &|c| {
            c.latency.as_ref().map_or("-".into(), |l| format!("{:.1}", l.mean_ms))
        });
    }
    s
}
