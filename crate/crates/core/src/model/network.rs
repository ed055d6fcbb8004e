use std::collections::{HashMap, HashSet};

use super::graph::{self, Executor};
use super::spec::{ModelSpec, Stage};
use crate::blocks::{BlockSpec, PreparedBlock};
use crate::error::{Error, Result};
use crate::flow::{correlation, warp_scaled, FlowField};
use crate::tensor::{apply_activation_in_place, bilinear_resize, Activation, Shape, Tensor};
use crate::weights::WeightStore;

/// A model bound to its weights.
#[derive(Clone, Debug)]
pub struct Network {
    spec: ModelSpec,
    blocks: HashMap<String, PreparedBlock>,
}

#[derive(Clone, Debug)]
pub struct ForwardOutput {
    /// `(level, flow)` for levels 6 down to 2, in units of `1/div_flow`
    /// pixels at that level. Level 2 is the refined estimate.
    pub level_flows: Vec<(usize, FlowField)>,
    /// Full-resolution flow in pixels.
    pub flow: FlowField,
}

impl ForwardOutput {
    pub fn level(&self, level: usize) -> Option<&FlowField> {
        self.level_flows.iter().find(|(l, _)| *l == level).map(|(_, f)| f)
    }
}

#[derive(Clone, Debug)]
pub struct PyramidFeatures {
    levels: Vec<Tensor>,
}

impl PyramidFeatures {
    /// Features at `level` (1-based, stride `2^level`).
    pub fn level(&self, level: usize) -> &Tensor {
        &self.levels[level - 1]
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Tensor)> {
        self.levels.iter().enumerate().map(|(i, t)| (i + 1, t))
    }
}

impl Network {
    /// Bind `model` to `store`. Every tensor the model needs must be present
    /// with the right shape, and the store may not hold anything else.
    pub fn load(model: &ModelSpec, store: &WeightStore) -> Result<Self> {
        model.validate()?;
        let mut blocks = HashMap::new();
        let mut used = HashSet::new();
        for (_, spec) in model.blocks() {
            let block = PreparedBlock::load(spec, store).map_err(|e| match e {
                Error::MissingWeight(_) | Error::WeightShape { .. } => {
                    Error::Config(format!("block `{}` incompatible with weights: {e}", spec.name))
                }
                e => e,
            })?;
            used.extend(spec.param_slots().into_iter().map(|s| s.name));
            blocks.insert(spec.name.clone(), block);
        }
        if let Some(extra) = store.names().find(|n| !used.contains(*n)) {
            return Err(Error::Config(format!(
                "weight tensor `{extra}` is not used by {}",
                model.variant
            )));
        }
        Ok(Network {
            spec: model.clone(),
            blocks,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// Estimate flow from `image1` to `image2`, both `3 x H x W` with values
    /// in `[0, 1]` and `H`, `W` multiples of 64.
    pub fn forward(&self, image1: &Tensor, image2: &Tensor) -> Result<ForwardOutput> {
        let mut exec = Eval { blocks: &self.blocks };
        let out = graph::forward(&self.spec, &mut exec, image1, image2)?;
        Ok(ForwardOutput {
            level_flows: out
                .level_flows
                .into_iter()
                .map(|(l, t)| Ok((l, FlowField::new(t)?)))
                .collect::<Result<_>>()?,
            flow: FlowField::new(out.flow)?,
        })
    }

    pub fn extract_pyramid(&self, image: &Tensor) -> Result<PyramidFeatures> {
        let mut exec = Eval { blocks: &self.blocks };
        Ok(PyramidFeatures {
            levels: graph::pyramid(&self.spec, &mut exec, image)?,
        })
    }
}

struct Eval<'a> {
    blocks: &'a HashMap<String, PreparedBlock>,
}

impl Executor for Eval<'_> {
    type Value = Tensor;

    fn shape(&self, v: &Tensor) -> Shape {
        v.shape()
    }

    fn set_stage(&mut self, _: Stage) {}

    fn block(&mut self, spec: &BlockSpec, x: &Tensor) -> Result<Tensor> {
        self.blocks[&spec.name].forward(x)
    }

    fn correlation(&mut self, _: &str, f1: &Tensor, f2: &Tensor, radius: usize) -> Result<Tensor> {
        let mut v = correlation(f1, f2, radius)?.volume;
        apply_activation_in_place(&mut v, Activation::LEAKY);
        Ok(v)
    }

    fn warp(&mut self, _: &str, features: &Tensor, flow: &Tensor, scale: f32) -> Result<Tensor> {
        warp_scaled(features, flow, scale)
    }

    fn concat(&mut self, _: &str, parts: &[&Tensor]) -> Result<Tensor> {
        Tensor::concat(parts)
    }

    fn upsample_flow(&mut self, _: &str, flow: &Tensor, factor: usize) -> Result<Tensor> {
        let up = bilinear_resize(flow, flow.height() * factor, flow.width() * factor);
        Ok(up.scale(factor as f32))
    }

    fn upsample(&mut self, _: &str, x: &Tensor, factor: usize) -> Result<Tensor> {
        Ok(bilinear_resize(x, x.height() * factor, x.width() * factor))
    }

    fn add(&mut self, _: &str, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        a.add(b)
    }

    fn scale(&mut self, _: &str, x: &Tensor, s: f32) -> Result<Tensor> {
        Ok(x.scale(s))
    }
}
