use std::collections::VecDeque;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};

/// Measures how long a unit of work takes, in milliseconds.
pub trait Timer {
    fn time(&mut self, work: &mut dyn FnMut() -> Result<()>) -> Result<f64>;
}

/// Monotonic wall clock.
#[derive(Clone, Copy, Debug, Default)]
pub struct WallClock;

impl Timer for WallClock {
    fn time(&mut self, work: &mut dyn FnMut() -> Result<()>) -> Result<f64> {
        let start = Instant::now();
        work()?;
        Ok(start.elapsed().as_secs_f64() * 1e3)
    }
}

/// Runs the work, then reports the next scripted duration.
#[derive(Clone, Debug, Default)]
pub struct ScriptedClock {
    durations: VecDeque<f64>,
}

impl ScriptedClock {
    pub fn new(durations_ms: impl IntoIterator<Item = f64>) -> Self {
        ScriptedClock {
            durations: durations_ms.into_iter().collect(),
        }
    }
}

impl Timer for ScriptedClock {
    fn time(&mut self, work: &mut dyn FnMut() -> Result<()>) -> Result<f64> {
        work()?;
        self.durations
            .pop_front()
            .ok_or_else(|| Error::invalid("ScriptedClock", "ran out of scripted durations"))
    }
}

/// Summary of the measured samples. `std_ms` is the population standard
/// deviation; percentiles interpolate linearly between order statistics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LatencyStats {
    pub mean_ms: f64,
    pub std_ms: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub runs: usize,
    pub warmup: usize,
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    let rank = p * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    sorted[lo] + (rank - lo as f64) * (sorted[hi] - sorted[lo])
}

impl LatencyStats {
    pub fn from_samples(samples: &[f64], warmup: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("latency", "no measured samples"));
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(LatencyStats {
            mean_ms: mean,
            std_ms: var.sqrt(),
            p50_ms: percentile(&sorted, 0.5),
            p95_ms: percentile(&sorted, 0.95),
            runs: samples.len(),
            warmup,
        })
    }
}

/// Time `warmup + runs` calls of `work`, keeping only the last `runs`.
pub fn measure(timer: &mut dyn Timer, warmup: usize, runs: usize, work: &mut dyn FnMut() -> Result<()>) -> Result<Vec<f64>> {
    for _ in 0..warmup {
        timer.time(work)?;
    }
    (0..runs).map(|_| timer.time(work)).collect()
}
