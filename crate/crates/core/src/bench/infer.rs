use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{check_memory, network_for, write_report, Resolution, DEFAULT_MEMORY_LIMIT};
use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::io::{flow_to_color, read_image, write_file, write_flo, write_png};
use crate::model::{build_model, ModelOverrides, Network, Variant};
use crate::tensor::{crop2d, pad2d, Pads, Tensor};

/// Zero-pad bottom and right up to the next multiple of the input alignment.
pub fn pad_to_alignment(image: &Tensor) -> Tensor {
    let r = Resolution::new(image.height(), image.width()).padded();
    pad2d(image, Pads::new(0, r.height - image.height(), 0, r.width - image.width()))
}

/// The top-left `height x width` window of `flow`.
pub fn crop_flow(flow: &FlowField, height: usize, width: usize) -> Result<FlowField> {
    FlowField::new(crop2d(flow.tensor(), 0, 0, height, width)?)
}

/// Pad, run the network, crop back to the input size.
pub fn run_padded(net: &Network, image1: &Tensor, image2: &Tensor) -> Result<FlowField> {
    if image1.shape() != image2.shape() {
        return Err(Error::shape(
            "infer",
            format!("image sizes differ: {} vs {}", image1.shape(), image2.shape()),
        ));
    }
    let out = net.forward(&pad_to_alignment(image1), &pad_to_alignment(image2))?;
    crop_flow(&out.flow, image1.height(), image1.width())
}

#[derive(Clone, Debug)]
pub struct InferOptions {
    pub model: Variant,
    pub overrides: ModelOverrides,
    /// Seeded initialisation is used when absent.
    pub weights: Option<PathBuf>,
    pub seed: u64,
    pub image1: PathBuf,
    pub image2: PathBuf,
    /// Flow output; the color rendering and report go next to it.
    pub out: PathBuf,
    pub memory_limit_bytes: u64,
}

impl InferOptions {
    pub fn new(model: Variant, image1: impl Into<PathBuf>, image2: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        InferOptions {
            model,
            overrides: ModelOverrides::default(),
            weights: None,
            seed: 0,
            image1: image1.into(),
            image2: image2.into(),
            out: out.into(),
            memory_limit_bytes: DEFAULT_MEMORY_LIMIT,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InferReport {
    pub model: Variant,
    pub resolution: Resolution,
    pub compute_resolution: Resolution,
    pub weights_fingerprint: String,
    pub flow_file: PathBuf,
    pub color_file: PathBuf,
    pub mean_magnitude: f64,
    pub max_magnitude: f64,
}

fn file_name(p: &Path) -> PathBuf {
    p.file_name().map_or_else(|| p.to_path_buf(), PathBuf::from)
}

/// Estimate flow between two images and write `.flo`, color `.png` and a
/// JSON report.
pub fn cmd_infer(opts: &InferOptions) -> Result<InferReport> {
    let model = build_model(opts.model, &opts.overrides)?;
    let a = read_image(&opts.image1)?;
    let b = read_image(&opts.image2)?;
    if a.shape() != b.shape() {
        return Err(Error::shape(
            "infer",
            format!(
                "{} is {}x{} but {} is {}x{}",
                opts.image1.display(),
                a.height(),
                a.width(),
                opts.image2.display(),
                b.height(),
                b.width()
            ),
        ));
    }
    let resolution = Resolution::new(a.height(), a.width());
    check_memory(&model, resolution, opts.memory_limit_bytes)?;
    let (net, digest) = network_for(&model, opts.weights.as_deref(), opts.seed)?;
    let flow = run_padded(&net, &a, &b)?;

    let color = opts.out.with_extension("png");
    write_file(&opts.out, &write_flo(&flow)?)?;
    write_png(&color, &flow_to_color(&flow, None))?;

    let mags: Vec<f64> = flow
        .u()
        .iter()
        .zip(flow.v())
        .map(|(&u, &v)| (u as f64).hypot(v as f64))
        .collect();
    let report = InferReport {
        model: opts.model,
        resolution,
        compute_resolution: resolution.padded(),
        weights_fingerprint: format!("{digest:016x}"),
        flow_file: file_name(&opts.out),
        color_file: file_name(&color),
        mean_magnitude: mags.iter().sum::<f64>() / mags.len() as f64,
        max_magnitude: mags.iter().copied().fold(0.0, f64::max),
    };
    write_report(&opts.out, &report)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::INPUT_ALIGNMENT;

    #[test]
    fn sintel_padding() {
        let img = Tensor::filled(3, 436, 1024, 0.5);
        let p = pad_to_alignment(&img);
        assert_eq!((p.height(), p.width()), (448, 1024));
        assert_eq!(p.at(0, 447, 0), 0.0);
        assert_eq!(INPUT_ALIGNMENT, 64);
    }

    #[test]
    fn crop_inverts_pad() {
        let f = FlowField::new(Tensor::from_fn(2, 5, 7, |c, y, x| (c * 100 + y * 10 + x) as f32)).unwrap();
        let padded = FlowField::new(pad_to_alignment(f.tensor())).unwrap();
        assert_eq!(crop_flow(&padded, 5, 7).unwrap().tensor(), f.tensor());
    }
}
