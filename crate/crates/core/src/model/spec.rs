use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::mobilenet::mobilenet_v3_large_pyramid;
use crate::blocks::BlockSpec;
use crate::error::{Error, Result};
use crate::tensor::Activation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    PwcnetPlus,
    PwcnetSmall,
    Compactflownet,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::PwcnetPlus, Variant::PwcnetSmall, Variant::Compactflownet];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::PwcnetPlus => "pwcnet_plus",
            Variant::PwcnetSmall => "pwcnet_small",
            Variant::Compactflownet => "compactflownet",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "pwcnet_plus" | "pwcnet+" => Ok(Variant::PwcnetPlus),
            "pwcnet_small" => Ok(Variant::PwcnetSmall),
            "compactflownet" => Ok(Variant::Compactflownet),
            _ => Err(Error::UnknownVariant(s.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Connectivity {
    /// Every layer sees the level input plus all earlier layer outputs.
    Dense,
    /// Every layer sees only the previous layer's output.
    Sequential,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvKind {
    Standard,
    DepthwiseSeparable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backbone {
    PwcConv,
    MobileNetV3Large,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorKind {
    pub connectivity: Connectivity,
    pub conv_kind: ConvKind,
    pub layer_channels: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefinerDepth {
    Seven,
    Four,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinerKind {
    pub depth: RefinerDepth,
    pub conv_kind: ConvKind,
    pub layer_channels: Vec<usize>,
    pub dilations: Vec<usize>,
}

/// One pyramid level: trunk blocks run in sequence on the previous level's
/// trunk output; the optional projection maps the trunk to the level's
/// feature width without feeding back into the trunk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PyramidLevel {
    pub level: usize,
    pub blocks: Vec<BlockSpec>,
    pub projection: Option<BlockSpec>,
}

impl PyramidLevel {
    pub fn out_channels(&self) -> usize {
        match &self.projection {
            Some(p) => p.out_ch,
            None => self.blocks.last().map_or(0, |b| b.out_ch),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PyramidSpec {
    pub backbone: Backbone,
    /// Levels 1 through 6, level `l` at stride `2^l`.
    pub levels: Vec<PyramidLevel>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorLevel {
    pub level: usize,
    pub input_ch: usize,
    pub layers: Vec<BlockSpec>,
    pub predict: BlockSpec,
    /// 1x1 head producing the 2-channel feature handed to the next level;
    /// absent at the finest level.
    pub upfeat: Option<BlockSpec>,
}

impl EstimatorLevel {
    /// Channels of the tensor the prediction head (and refiner) consume.
    pub fn feature_ch(&self) -> usize {
        self.predict.in_ch
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinerSpec {
    pub kind: RefinerKind,
    pub input_ch: usize,
    pub layers: Vec<BlockSpec>,
}

/// Which part of the network a block or op belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    FeatureExtractor,
    FlowEstimator,
    FlowRefiner,
    Output,
}

impl Stage {
    pub const MODEL_STAGES: [Stage; 3] = [Stage::FeatureExtractor, Stage::FlowEstimator, Stage::FlowRefiner];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::FeatureExtractor => "feature_extractor",
            Stage::FlowEstimator => "flow_estimator",
            Stage::FlowRefiner => "flow_refiner",
            Stage::Output => "output",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub variant: Variant,
    pub pyramid: PyramidSpec,
    pub estimator_kind: EstimatorKind,
    /// Coarsest first: levels 6, 5, 4, 3, 2.
    pub estimators: Vec<EstimatorLevel>,
    pub refiner: RefinerSpec,
    pub corr_radius: usize,
    /// Network flows are in units of `1/div_flow` pixels of their level.
    pub div_flow: f32,
    /// Multiplier applied to the upsampled network flow before warping.
    pub warp_scale: f32,
}

pub const PYRAMID_LEVELS: usize = 6;
pub const ESTIMATOR_LEVELS: [usize; 5] = [6, 5, 4, 3, 2];
/// Input height and width must be multiples of this.
pub const INPUT_ALIGNMENT: usize = 1 << PYRAMID_LEVELS;

const PWC_PYRAMID_CHANNELS: [usize; 6] = [16, 32, 64, 96, 128, 196];
const ESTIMATOR_CHANNELS: [usize; 5] = [128, 128, 96, 64, 32];

/// Optional adjustments applied on top of a variant's defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelOverrides {
    pub corr_radius: Option<usize>,
    pub div_flow: Option<f32>,
    pub warp_scale: Option<f32>,
    pub estimator_connectivity: Option<Connectivity>,
    pub estimator_conv: Option<ConvKind>,
    pub estimator_channels: Option<Vec<usize>>,
    pub refiner_conv: Option<ConvKind>,
    pub refiner_channels: Option<Vec<usize>>,
    pub refiner_dilations: Option<Vec<usize>>,
}

impl ModelSpec {
    pub fn total_levels(&self) -> usize {
        self.pyramid.levels.len()
    }

    pub fn pyramid_channels(&self, level: usize) -> usize {
        self.pyramid.levels[level - 1].out_channels()
    }

    pub fn corr_channels(&self) -> usize {
        let n = 2 * self.corr_radius + 1;
        n * n
    }

    /// Every block with the stage it belongs to, in execution order.
    pub fn blocks(&self) -> Vec<(Stage, &BlockSpec)> {
        let mut out = Vec::new();
        for level in &self.pyramid.levels {
            for b in &level.blocks {
                out.push((Stage::FeatureExtractor, b));
            }
            if let Some(p) = &level.projection {
                out.push((Stage::FeatureExtractor, p));
            }
        }
        for est in &self.estimators {
            for b in &est.layers {
                out.push((Stage::FlowEstimator, b));
            }
            out.push((Stage::FlowEstimator, &est.predict));
            if let Some(u) = &est.upfeat {
                out.push((Stage::FlowEstimator, u));
            }
        }
        for b in &self.refiner.layers {
            out.push((Stage::FlowRefiner, b));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let levels: Vec<usize> = self.estimators.iter().map(|e| e.level).collect();
        if levels != ESTIMATOR_LEVELS {
            return Err(Error::Config(format!(
                "estimator levels must be 6..2, got {levels:?}"
            )));
        }
        if self.pyramid.levels.len() != PYRAMID_LEVELS {
            return Err(Error::Config(format!(
                "pyramid needs {PYRAMID_LEVELS} levels, got {}",
                self.pyramid.levels.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for (_, b) in self.blocks() {
            b.validate()?;
            if !seen.insert(b.name.as_str()) {
                return Err(Error::Config(format!("block name `{}` used twice", b.name)));
            }
        }
        if !(self.div_flow.is_finite() && self.div_flow > 0.0) || !self.warp_scale.is_finite() {
            return Err(Error::Config(format!(
                "div_flow {} / warp_scale {} must be finite (div_flow > 0)",
                self.div_flow, self.warp_scale
            )));
        }
        if self.refiner.layers.last().map(|b| b.out_ch) != Some(2) {
            return Err(Error::Config("refiner must end in a 2-channel layer".into()));
        }
        Ok(())
    }
}

fn make_block(kind: ConvKind, name: String, in_ch: usize, out_ch: usize, kernel: usize) -> BlockSpec {
    match kind {
        ConvKind::Standard => BlockSpec::conv(name, in_ch, out_ch, kernel, 1),
        ConvKind::DepthwiseSeparable => BlockSpec::ds_conv(name, in_ch, out_ch, kernel, 1),
    }
}

fn pwc_conv_pyramid() -> PyramidSpec {
    let mut in_ch = 3;
    let levels = PWC_PYRAMID_CHANNELS
        .iter()
        .enumerate()
        .map(|(i, &ch)| {
            let l = i + 1;
            let blocks = vec![
                BlockSpec::conv(format!("pyramid.l{l}.conv0"), in_ch, ch, 3, 2),
                BlockSpec::conv(format!("pyramid.l{l}.conv1"), ch, ch, 3, 1),
                BlockSpec::conv(format!("pyramid.l{l}.conv2"), ch, ch, 3, 1),
            ];
            in_ch = ch;
            PyramidLevel {
                level: l,
                blocks,
                projection: None,
            }
        })
        .collect();
    PyramidSpec {
        backbone: Backbone::PwcConv,
        levels,
    }
}

fn estimator_level(
    kind: &EstimatorKind,
    level: usize,
    input_ch: usize,
) -> EstimatorLevel {
    let mut layers = Vec::new();
    let mut width = input_ch;
    for (i, &ch) in kind.layer_channels.iter().enumerate() {
        let in_ch = match kind.connectivity {
            Connectivity::Dense => width,
            Connectivity::Sequential if i == 0 => input_ch,
            Connectivity::Sequential => kind.layer_channels[i - 1],
        };
        layers.push(make_block(
            kind.conv_kind,
            format!("estimator.l{level}.conv{i}"),
            in_ch,
            ch,
            3,
        ));
        width = match kind.connectivity {
            Connectivity::Dense => width + ch,
            Connectivity::Sequential => ch,
        };
    }
    let predict = make_block(kind.conv_kind, format!("estimator.l{level}.predict"), width, 2, 3)
        .with_activation(Activation::Linear);
    let upfeat = (level > 2).then(|| {
        BlockSpec::conv(format!("estimator.l{level}.upfeat"), width, 2, 1, 1)
            .with_activation(Activation::Linear)
    });
    EstimatorLevel {
        level,
        input_ch,
        layers,
        predict,
        upfeat,
    }
}

fn refiner(kind: RefinerKind, input_ch: usize) -> RefinerSpec {
    let mut in_ch = input_ch;
    let n = kind.layer_channels.len();
    let layers = kind
        .layer_channels
        .iter()
        .zip(&kind.dilations)
        .enumerate()
        .map(|(i, (&ch, &dil))| {
            let mut b = make_block(kind.conv_kind, format!("refiner.conv{i}"), in_ch, ch, 3)
                .with_dilation(dil);
            if i + 1 == n {
                b = b.with_activation(Activation::Linear);
            }
            in_ch = ch;
            b
        })
        .collect();
    RefinerSpec {
        kind,
        input_ch,
        layers,
    }
}

/// Assemble one of the three network variants.
///
/// * `pwcnet_plus`: six-level conv pyramid (16..196 channels, three convs
///   per level), densely connected standard-conv estimators, seven-layer
///   dilated refiner.
/// * `pwcnet_small`: the same without dense connections.
/// * `compactflownet`: MobileNetV3-Large pyramid adapter, sequential
///   depthwise-separable estimators and a four-layer depthwise-separable
///   refiner with channels 128, 64, 32, 2.
pub fn build_model(variant: Variant, overrides: &ModelOverrides) -> Result<ModelSpec> {
    let (pyramid, mut est_kind, mut ref_kind) = match variant {
        Variant::PwcnetPlus | Variant::PwcnetSmall => (
            pwc_conv_pyramid(),
            EstimatorKind {
                connectivity: if variant == Variant::PwcnetPlus {
                    Connectivity::Dense
                } else {
                    Connectivity::Sequential
                },
                conv_kind: ConvKind::Standard,
                layer_channels: ESTIMATOR_CHANNELS.to_vec(),
            },
            RefinerKind {
                depth: RefinerDepth::Seven,
                conv_kind: ConvKind::Standard,
                layer_channels: vec![128, 128, 128, 96, 64, 32, 2],
                dilations: vec![1, 2, 4, 8, 16, 1, 1],
            },
        ),
        Variant::Compactflownet => (
            mobilenet_v3_large_pyramid(&PWC_PYRAMID_CHANNELS),
            EstimatorKind {
                connectivity: Connectivity::Sequential,
                conv_kind: ConvKind::DepthwiseSeparable,
                layer_channels: ESTIMATOR_CHANNELS.to_vec(),
            },
            RefinerKind {
                depth: RefinerDepth::Four,
                conv_kind: ConvKind::DepthwiseSeparable,
                layer_channels: vec![128, 64, 32, 2],
                dilations: vec![1, 2, 4, 1],
            },
        ),
    };

    let o = overrides;
    if let Some(c) = o.estimator_connectivity {
        est_kind.connectivity = c;
    }
    if let Some(c) = o.estimator_conv {
        est_kind.conv_kind = c;
    }
    if let Some(ch) = &o.estimator_channels {
        if ch.is_empty() || ch.contains(&0) {
            return Err(Error::Config(format!("estimator_channels {ch:?} must be non-empty and positive")));
        }
        est_kind.layer_channels = ch.clone();
    }
    if let Some(c) = o.refiner_conv {
        ref_kind.conv_kind = c;
    }
    match (&o.refiner_channels, &o.refiner_dilations) {
        (Some(ch), Some(d)) => {
            ref_kind.layer_channels = ch.clone();
            ref_kind.dilations = d.clone();
        }
        (Some(ch), None) => ref_kind.layer_channels = ch.clone(),
        (None, Some(d)) => ref_kind.dilations = d.clone(),
        (None, None) => {}
    }
    if ref_kind.layer_channels.len() != ref_kind.dilations.len() {
        return Err(Error::Config(format!(
            "refiner has {} channel entries but {} dilations",
            ref_kind.layer_channels.len(),
            ref_kind.dilations.len()
        )));
    }
    if ref_kind.layer_channels.last() != Some(&2) || ref_kind.layer_channels.contains(&0) {
        return Err(Error::Config(format!(
            "refiner channels {:?} must be positive and end in 2",
            ref_kind.layer_channels
        )));
    }
    ref_kind.depth = match ref_kind.layer_channels.len() {
        7 => RefinerDepth::Seven,
        4 => RefinerDepth::Four,
        n => {
            return Err(Error::Config(format!(
                "refiner depth must be 4 or 7 layers, got {n}"
            )))
        }
    };
    if ref_kind.depth == RefinerDepth::Four && ref_kind.layer_channels != [128, 64, 32, 2] {
        return Err(Error::Config(format!(
            "four-layer refiner must use channels [128, 64, 32, 2], got {:?}",
            ref_kind.layer_channels
        )));
    }

    let corr_radius = o.corr_radius.unwrap_or(4);
    let div_flow = o.div_flow.unwrap_or(20.0);
    let warp_scale = o.warp_scale.unwrap_or(div_flow);
    let corr_ch = (2 * corr_radius + 1).pow(2);

    let estimators: Vec<EstimatorLevel> = ESTIMATOR_LEVELS
        .iter()
        .map(|&l| {
            let input_ch = if l == 6 {
                corr_ch
            } else {
                corr_ch + pyramid.levels[l - 1].out_channels() + 4
            };
            estimator_level(&est_kind, l, input_ch)
        })
        .collect();
    let refiner_in = estimators.last().expect("five estimator levels").feature_ch();
    let spec = ModelSpec {
        variant,
        pyramid,
        estimator_kind: est_kind,
        estimators,
        refiner: refiner(ref_kind, refiner_in),
        corr_radius,
        div_flow,
        warp_scale,
    };
    spec.validate()?;
    Ok(spec)
}

/// Parameter names of the final 2-channel layers: zeroing these makes every
/// predicted flow exactly zero.
pub fn prediction_heads(model: &ModelSpec) -> Vec<String> {
    let mut names: Vec<String> = model
        .blocks()
        .into_iter()
        .filter(|(_, b)| b.out_ch == 2 && b.activation == Activation::Linear && !b.name.ends_with(".upfeat"))
        .flat_map(|(_, b)| b.param_slots().into_iter().map(|s| s.name))
        .collect();
    names.dedup();
    names
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::BlockKind;

    fn build(v: Variant) -> ModelSpec {
        build_model(v, &ModelOverrides::default()).unwrap()
    }

    #[test]
    fn variant_defaults() {
        let plus = build(Variant::PwcnetPlus);
        assert_eq!(plus.estimator_kind.connectivity, Connectivity::Dense);
        assert_eq!(plus.refiner.kind.depth, RefinerDepth::Seven);
        assert_eq!(plus.refiner.layers.len(), 7);

        let small = build(Variant::PwcnetSmall);
        assert_eq!(small.estimator_kind.connectivity, Connectivity::Sequential);
        assert_eq!(small.pyramid, plus.pyramid);
        assert_eq!(small.estimator_kind.conv_kind, plus.estimator_kind.conv_kind);
        assert_eq!(small.estimator_kind.layer_channels, plus.estimator_kind.layer_channels);
        assert_eq!(small.refiner.kind, plus.refiner.kind);

        let compact = build(Variant::Compactflownet);
        assert_eq!(compact.refiner.kind.layer_channels, vec![128, 64, 32, 2]);
        assert_eq!(compact.refiner.kind.depth, RefinerDepth::Four);
        assert_eq!(compact.refiner.kind.conv_kind, ConvKind::DepthwiseSeparable);
        assert_eq!(compact.estimator_kind.conv_kind, ConvKind::DepthwiseSeparable);
        assert_eq!(compact.estimator_kind.connectivity, Connectivity::Sequential);
        assert!(compact.refiner.layers.iter().all(|b| b.kind == BlockKind::DsConv));
    }

    #[test]
    fn estimator_inputs() {
        let plus = build(Variant::PwcnetPlus);
        let inputs: Vec<usize> = plus.estimators.iter().map(|e| e.input_ch).collect();
        assert_eq!(inputs, vec![81, 81 + 128 + 4, 81 + 96 + 4, 81 + 64 + 4, 81 + 32 + 4]);
        // dense: prediction sees input + every layer output
        assert_eq!(plus.estimators[4].feature_ch(), 117 + 448);
        assert_eq!(plus.refiner.input_ch, 565);
        let small = build(Variant::PwcnetSmall);
        assert_eq!(small.estimators[0].layers[1].in_ch, 128);
        assert_eq!(small.refiner.input_ch, 32);
    }

    #[test]
    fn names_are_unique_and_levels_fixed() {
        for v in Variant::ALL {
            let m = build(v);
            m.validate().unwrap();
            assert_eq!(m.estimators.iter().map(|e| e.level).collect::<Vec<_>>(), ESTIMATOR_LEVELS);
        }
    }

    #[test]
    fn variant_parsing() {
        assert_eq!("compactflownet".parse::<Variant>().unwrap(), Variant::Compactflownet);
        assert_eq!("pwcnet-small".parse::<Variant>().unwrap(), Variant::PwcnetSmall);
        assert!(matches!("raft".parse::<Variant>(), Err(Error::UnknownVariant(_))));
    }

    #[test]
    fn inconsistent_overrides_rejected() {
        let bad = ModelOverrides {
            refiner_channels: Some(vec![128, 64, 2]),
            ..Default::default()
        };
        assert!(build_model(Variant::PwcnetPlus, &bad).is_err());
        let bad = ModelOverrides {
            refiner_channels: Some(vec![64, 64, 32, 2]),
            refiner_dilations: Some(vec![1, 2, 4, 1]),
            ..Default::default()
        };
        assert!(build_model(Variant::Compactflownet, &bad).is_err());
        let bad = ModelOverrides {
            div_flow: Some(0.0),
            ..Default::default()
        };
        assert!(build_model(Variant::Compactflownet, &bad).is_err());
        let ok = ModelOverrides {
            corr_radius: Some(2),
            estimator_conv: Some(ConvKind::Standard),
            ..Default::default()
        };
        let m = build_model(Variant::Compactflownet, &ok).unwrap();
        assert_eq!(m.estimators[0].input_ch, 25);
    }

    #[test]
    fn overrides_reject_unknown_fields() {
        let parsed: std::result::Result<ModelOverrides, _> = toml::from_str("corr_radius = 3\nbogus = 1\n");
        assert!(parsed.is_err());
        let parsed: ModelOverrides = toml::from_str("corr_radius = 3\nestimator_conv = \"depthwise_separable\"\n").unwrap();
        assert_eq!(parsed.corr_radius, Some(3));
    }

    #[test]
    fn prediction_head_names() {
        let m = build(Variant::PwcnetPlus);
        let heads = prediction_heads(&m);
        assert!(heads.contains(&"estimator.l6.predict.weight".to_string()));
        assert!(heads.contains(&"refiner.conv6.bias".to_string()));
        assert_eq!(heads.len(), 2 * 6);
        let c = build(Variant::Compactflownet);
        assert!(prediction_heads(&c).contains(&"refiner.conv3.pw.weight".to_string()));
    }
}
