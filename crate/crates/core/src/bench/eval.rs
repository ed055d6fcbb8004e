use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{check_memory, network_for, run_padded, Layout, Resolution, DEFAULT_MEMORY_LIMIT};
use crate::error::{Error, Result};
use crate::io::{read_flow_file, read_image};
use crate::metrics::{epe_values, fl_counts};
use crate::model::{build_model, ModelOverrides, Variant};

/// One evaluation sample on disk.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FramePair {
    pub name: String,
    pub image1: PathBuf,
    pub image2: PathBuf,
    pub ground_truth: PathBuf,
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<_>>()?;
    v.sort();
    Ok(v)
}

fn require(path: PathBuf) -> Result<PathBuf> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(Error::Dataset(format!("missing file {}", path.display())))
    }
}

/// Enumerate samples.
///
/// * Sintel: `flow/<scene>/frame_NNNN.flo` with frames
///   `<pass>/<scene>/frame_NNNN.png` and `frame_NNNN+1.png`.
/// * KITTI: `flow_occ/<id>_10.png` with frames `image_2/<id>_10.png` and
///   `image_2/<id>_11.png`.
pub fn discover_pairs(dir: &Path, layout: Layout, pass: &str) -> Result<Vec<FramePair>> {
    let mut pairs = Vec::new();
    match layout {
        Layout::Sintel => {
            let flow_root = dir.join("flow");
            if !flow_root.is_dir() {
                return Err(Error::Dataset(format!("{} has no flow/ directory", dir.display())));
            }
            for scene in sorted_entries(&flow_root)?.into_iter().filter(|p| p.is_dir()) {
                let scene_name = scene.file_name().unwrap_or_default().to_string_lossy().into_owned();
                for gt in sorted_entries(&scene)? {
                    let Some(stem) = gt.file_stem().and_then(|s| s.to_str()) else { continue };
                    if gt.extension().is_none_or(|e| e != "flo") {
                        continue;
                    }
                    let idx: usize = stem
                        .strip_prefix("frame_")
                        .and_then(|n| n.parse().ok())
                        .ok_or_else(|| Error::Dataset(format!("unexpected file name {}", gt.display())))?;
                    let frames = dir.join(pass).join(&scene_name);
                    pairs.push(FramePair {
                        name: format!("{scene_name}/{stem}"),
                        image1: require(frames.join(format!("frame_{idx:04}.png")))?,
                        image2: require(frames.join(format!("frame_{:04}.png", idx + 1)))?,
                        ground_truth: gt,
                    });
                }
            }
        }
        Layout::Kitti => {
            let flow_root = dir.join("flow_occ");
            if !flow_root.is_dir() {
                return Err(Error::Dataset(format!("{} has no flow_occ/ directory", dir.display())));
            }
            for gt in sorted_entries(&flow_root)? {
                let Some(name) = gt.file_name().and_then(|s| s.to_str()) else { continue };
                let Some(id) = name.strip_suffix("_10.png") else { continue };
                let images = dir.join("image_2");
                pairs.push(FramePair {
                    name: id.to_string(),
                    image1: require(images.join(format!("{id}_10.png")))?,
                    image2: require(images.join(format!("{id}_11.png")))?,
                    ground_truth: gt.clone(),
                });
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::Dataset(format!("no frame pairs found under {}", dir.display())));
    }
    Ok(pairs)
}

#[derive(Clone, Debug)]
pub struct EvalOptions {
    pub model: Variant,
    pub overrides: ModelOverrides,
    pub weights: Option<PathBuf>,
    pub seed: u64,
    pub dir: PathBuf,
    pub layout: Layout,
    pub pass: String,
    pub memory_limit_bytes: u64,
}

impl EvalOptions {
    pub fn new(model: Variant, dir: impl Into<PathBuf>, layout: Layout) -> Self {
        EvalOptions {
            model,
            overrides: ModelOverrides::default(),
            weights: None,
            seed: 0,
            dir: dir.into(),
            layout,
            pass: "clean".into(),
            memory_limit_bytes: DEFAULT_MEMORY_LIMIT,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrameResult {
    pub name: String,
    pub epe: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fl_all: Option<f64>,
    pub valid_pixels: usize,
}

/// `aepe` is the mean of per-frame EPEs. `fl_all` pools outliers over
/// every valid pixel of the set and is only reported for KITTI.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub model: Variant,
    pub layout: Layout,
    pub aepe: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fl_all: Option<f64>,
    pub frames: Vec<FrameResult>,
}

pub fn cmd_eval(opts: &EvalOptions) -> Result<EvalReport> {
    let model = build_model(opts.model, &opts.overrides)?;
    let pairs = discover_pairs(&opts.dir, opts.layout, &opts.pass)?;
    let (net, _) = network_for(&model, opts.weights.as_deref(), opts.seed)?;
    let mut frames = Vec::with_capacity(pairs.len());
    let (mut outliers, mut pooled) = (0usize, 0usize);
    for pair in &pairs {
        let gt = read_flow_file(&pair.ground_truth)?.flow;
        let a = read_image(&pair.image1)?;
        let b = read_image(&pair.image2)?;
        if (a.height(), a.width()) != (gt.height(), gt.width()) {
            return Err(Error::Dataset(format!(
                "{}: ground truth is {}x{} but frames are {}x{}",
                pair.ground_truth.display(),
                gt.height(),
                gt.width(),
                a.height(),
                a.width()
            )));
        }
        check_memory(&model, Resolution::new(a.height(), a.width()), opts.memory_limit_bytes)?;
        let pred = run_padded(&net, &a, &b)?;
        let errs = epe_values(&pred, &gt, None)?;
        if errs.is_empty() {
            return Err(Error::Dataset(format!(
                "{}: no valid ground-truth pixels",
                pair.ground_truth.display()
            )));
        }
        let fl = match opts.layout {
            Layout::Kitti => {
                let (o, n) = fl_counts(&pred, &gt, None)?;
                outliers += o;
                pooled += n;
                Some(o as f64 / n as f64)
            }
            Layout::Sintel => None,
        };
        frames.push(FrameResult {
            name: pair.name.clone(),
            epe: errs.iter().sum::<f64>() / errs.len() as f64,
            fl_all: fl,
            valid_pixels: errs.len(),
        });
    }
    let aepe = frames.iter().map(|f| f.epe).sum::<f64>() / frames.len() as f64;
    Ok(EvalReport {
        model: opts.model,
        layout: opts.layout,
        aepe,
        fl_all: (opts.layout == Layout::Kitti).then(|| outliers as f64 / pooled as f64),
        frames,
    })
}
