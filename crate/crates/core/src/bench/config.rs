use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelOverrides, Variant, INPUT_ALIGNMENT};

/// `HxW` in pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Resolution {
    pub height: usize,
    pub width: usize,
}

impl Resolution {
    pub const fn new(height: usize, width: usize) -> Self {
        Resolution { height, width }
    }

    /// Rounded up to the network's input alignment.
    pub fn padded(self) -> Resolution {
        let up = |n: usize| n.div_ceil(INPUT_ALIGNMENT) * INPUT_ALIGNMENT;
        Resolution::new(up(self.height), up(self.width))
    }
}

/// The three benchmark resolutions: square, Sintel and Full HD.
pub const REPORT_RESOLUTIONS: [Resolution; 3] = [
    Resolution::new(512, 512),
    Resolution::new(436, 1024),
    Resolution::new(1080, 1920),
];

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.height, self.width)
    }
}

impl FromStr for Resolution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid("resolution", format!("`{s}` is not HxW"));
        let (h, w) = s.trim().split_once(['x', 'X']).ok_or_else(bad)?;
        let h: usize = h.trim().parse().map_err(|_| bad())?;
        let w: usize = w.trim().parse().map_err(|_| bad())?;
        if h == 0 || w == 0 {
            return Err(bad());
        }
        Ok(Resolution::new(h, w))
    }
}

impl TryFrom<String> for Resolution {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Resolution> for String {
    fn from(r: Resolution) -> String {
        r.to_string()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    #[default]
    Sintel,
    Kitti,
}

impl FromStr for Layout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sintel" => Ok(Layout::Sintel),
            "kitti" => Ok(Layout::Kitti),
            _ => Err(Error::invalid("layout", format!("`{s}` is not sintel or kitti"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    pub dir: Option<PathBuf>,
    pub layout: Layout,
    /// Sintel rendering pass directory: `clean` or `final`.
    pub pass: String,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            dir: None,
            layout: Layout::Sintel,
            pass: "clean".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportConfig {
    pub models: Vec<Variant>,
    pub resolutions: Vec<Resolution>,
    /// Timed runs per cell; 0 leaves latency out.
    pub runs: usize,
    pub warmup: usize,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            models: Variant::ALL.to_vec(),
            resolutions: REPORT_RESOLUTIONS.to_vec(),
            runs: 0,
            warmup: 0,
        }
    }
}

/// Settings shared by every subcommand, loadable from TOML. Command-line
/// flags take precedence over file values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchConfig {
    pub model: Variant,
    pub overrides: ModelOverrides,
    pub seed: u64,
    pub warmup: usize,
    pub runs: usize,
    pub resolution: Resolution,
    pub weights: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// Planned peak memory above which a resolution is refused.
    pub memory_limit_bytes: u64,
    pub dataset: DatasetConfig,
    pub report: ReportConfig,
}

pub const DEFAULT_WARMUP: usize = 100;
pub const DEFAULT_RUNS: usize = 100;
pub const DEFAULT_MEMORY_LIMIT: u64 = 8 << 30;

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            model: Variant::Compactflownet,
            overrides: ModelOverrides::default(),
            seed: 0,
            warmup: DEFAULT_WARMUP,
            runs: DEFAULT_RUNS,
            resolution: Resolution::new(512, 512),
            weights: None,
            out: None,
            memory_limit_bytes: DEFAULT_MEMORY_LIMIT,
            dataset: DatasetConfig::default(),
            report: ReportConfig::default(),
        }
    }
}

impl BenchConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| e.in_file(path))
    }
}
