//! Symbolic execution of the forward graph: shapes, multiply-accumulates,
//! parameter counts and a tensor-liveness program for memory planning.

use std::collections::BTreeMap;

use serde::Serialize;

use super::graph::{self, Executor};
use super::spec::{ModelSpec, Stage};
use crate::blocks::BlockSpec;
use crate::error::{Error, Result};
use crate::memory::{peak_live_bytes, MemGraph, MemOp};
use crate::tensor::Shape;

#[derive(Clone, Debug, PartialEq)]
pub struct TraceOp {
    pub label: &'static str,
    /// Owning block, or the name of a standalone op.
    pub owner: String,
    pub stage: Stage,
    pub inputs: Vec<usize>,
    pub output: usize,
    pub macs: u64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trace {
    pub tensors: Vec<Shape>,
    pub inputs: Vec<usize>,
    pub ops: Vec<TraceOp>,
    pub outputs: Vec<usize>,
}

impl Trace {
    pub fn total_macs(&self) -> u64 {
        self.ops.iter().map(|o| o.macs).sum()
    }

    pub fn mem_graph(&self, bytes_per_element: u64) -> MemGraph {
        MemGraph {
            tensor_bytes: self.tensors.iter().map(|s| s.numel() as u64 * bytes_per_element).collect(),
            inputs: self.inputs.clone(),
            ops: self
                .ops
                .iter()
                .map(|o| MemOp {
                    inputs: o.inputs.clone(),
                    output: o.output,
                })
                .collect(),
            outputs: self.outputs.clone(),
        }
    }
}

struct Tracer {
    trace: Trace,
    stage: Stage,
}

#[derive(Clone, Copy)]
struct Node(usize);

impl Tracer {
    fn input(&mut self, shape: Shape) -> Node {
        let id = self.trace.tensors.len();
        self.trace.tensors.push(shape);
        self.trace.inputs.push(id);
        Node(id)
    }

    fn push(&mut self, label: &'static str, owner: &str, inputs: Vec<usize>, shape: Shape, macs: u64) -> Node {
        let id = self.trace.tensors.len();
        self.trace.tensors.push(shape);
        self.trace.ops.push(TraceOp {
            label,
            owner: owner.to_string(),
            stage: self.stage,
            inputs,
            output: id,
            macs,
        });
        Node(id)
    }

    fn sh(&self, n: Node) -> Shape {
        self.trace.tensors[n.0]
    }
}

impl Executor for Tracer {
    type Value = Node;

    fn shape(&self, v: &Node) -> Shape {
        self.sh(*v)
    }

    fn set_stage(&mut self, stage: Stage) {
        self.stage = stage;
    }

    fn block(&mut self, spec: &BlockSpec, x: &Node) -> Result<Node> {
        let input = self.sh(*x);
        if input.channels != spec.in_ch {
            return Err(Error::shape(
                "block",
                format!("`{}` expects {} channels, got {input}", spec.name, spec.in_ch),
            ));
        }
        let mut local = vec![x.0];
        for op in spec.sub_ops(input)? {
            let inputs = op.inputs.iter().map(|&i| local[i]).collect();
            let n = self.push(op.label, &spec.name, inputs, op.output, op.macs);
            local.push(n.0);
        }
        Ok(Node(*local.last().expect("blocks have at least one op")))
    }

    fn correlation(&mut self, name: &str, f1: &Node, f2: &Node, radius: usize) -> Result<Node> {
        let (a, b) = (self.sh(*f1), self.sh(*f2));
        if a != b {
            return Err(Error::shape("correlation", format!("{a} vs {b}")));
        }
        let window = (2 * radius + 1).pow(2);
        let out = Shape::new(window, a.height, a.width);
        let macs = (window * a.numel()) as u64;
        Ok(self.push("correlation", name, vec![f1.0, f2.0], out, macs))
    }

    fn warp(&mut self, name: &str, features: &Node, flow: &Node, _: f32) -> Result<Node> {
        let (f, w) = (self.sh(*features), self.sh(*flow));
        if w.channels != 2 || (f.height, f.width) != (w.height, w.width) {
            return Err(Error::shape("warp", format!("features {f} vs flow {w}")));
        }
        // Four bilinear taps per output element.
        Ok(self.push("warp", name, vec![features.0, flow.0], f, 4 * f.numel() as u64))
    }

    fn concat(&mut self, name: &str, parts: &[&Node]) -> Result<Node> {
        let first = self.sh(*parts[0]);
        let mut channels = 0;
        for p in parts {
            let s = self.sh(**p);
            if (s.height, s.width) != (first.height, first.width) {
                return Err(Error::shape("concat", format!("{first} vs {s}")));
            }
            channels += s.channels;
        }
        let out = Shape::new(channels, first.height, first.width);
        Ok(self.push("concat", name, parts.iter().map(|p| p.0).collect(), out, 0))
    }

    fn upsample_flow(&mut self, name: &str, flow: &Node, factor: usize) -> Result<Node> {
        let s = self.sh(*flow);
        let out = Shape::new(s.channels, s.height * factor, s.width * factor);
        Ok(self.push("upsample_flow", name, vec![flow.0], out, 0))
    }

    fn upsample(&mut self, name: &str, x: &Node, factor: usize) -> Result<Node> {
        let s = self.sh(*x);
        let out = Shape::new(s.channels, s.height * factor, s.width * factor);
        Ok(self.push("upsample", name, vec![x.0], out, 0))
    }

    fn add(&mut self, name: &str, a: &Node, b: &Node) -> Result<Node> {
        let (sa, sb) = (self.sh(*a), self.sh(*b));
        if sa != sb {
            return Err(Error::shape("add", format!("{sa} vs {sb}")));
        }
        Ok(self.push("add", name, vec![a.0, b.0], sa, 0))
    }

    fn scale(&mut self, name: &str, x: &Node, _: f32) -> Result<Node> {
        let s = self.sh(*x);
        Ok(self.push("scale", name, vec![x.0], s, 0))
    }
}

/// Walk the forward graph for two `3 x height x width` inputs.
pub fn trace_model(model: &ModelSpec, height: usize, width: usize) -> Result<Trace> {
    let mut t = Tracer {
        trace: Trace::default(),
        stage: Stage::FeatureExtractor,
    };
    let a = t.input(Shape::new(3, height, width));
    let b = t.input(Shape::new(3, height, width));
    let out = graph::forward(model, &mut t, &a, &b)?;
    t.trace.outputs.push(out.flow.0);
    Ok(t.trace)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BlockFlops {
    pub name: String,
    pub stage: Stage,
    pub macs: u64,
    pub flops: u64,
}

/// Arithmetic cost of one forward pass over both images.
///
/// `flops` counts a multiply-accumulate as two operations. Convolutions,
/// the cost volume and warping contribute; biases, activations, resizing,
/// pooling and elementwise ops do not.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FlopReport {
    pub height: usize,
    pub width: usize,
    pub stage_macs: BTreeMap<Stage, u64>,
    pub stage_flops: BTreeMap<Stage, u64>,
    pub blocks: Vec<BlockFlops>,
    pub total_macs: u64,
    pub total_flops: u64,
}

impl FlopReport {
    pub fn stage(&self, stage: Stage) -> u64 {
        self.stage_flops.get(&stage).copied().unwrap_or(0)
    }

    pub fn stage_mac_count(&self, stage: Stage) -> u64 {
        self.stage_macs.get(&stage).copied().unwrap_or(0)
    }
}

pub fn count_flops(model: &ModelSpec, height: usize, width: usize) -> Result<FlopReport> {
    let trace = trace_model(model, height, width)?;
    let mut stage_macs: BTreeMap<Stage, u64> = Stage::MODEL_STAGES.iter().map(|&s| (s, 0)).collect();
    let mut blocks: Vec<BlockFlops> = Vec::new();
    let mut index: BTreeMap<(Stage, String), usize> = BTreeMap::new();
    for op in &trace.ops {
        *stage_macs.entry(op.stage).or_default() += op.macs;
        if op.macs == 0 {
            continue;
        }
        let i = *index.entry((op.stage, op.owner.clone())).or_insert_with(|| {
            blocks.push(BlockFlops {
                name: op.owner.clone(),
                stage: op.stage,
                macs: 0,
                flops: 0,
            });
            blocks.len() - 1
        });
        blocks[i].macs += op.macs;
        blocks[i].flops += 2 * op.macs;
    }
    let stage_flops = stage_macs.iter().map(|(&s, &m)| (s, 2 * m)).collect();
    let total_macs = trace.total_macs();
    Ok(FlopReport {
        height,
        width,
        stage_macs,
        stage_flops,
        blocks,
        total_macs,
        total_flops: 2 * total_macs,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ParamReport {
    pub feature_extractor: usize,
    pub flow_estimator: usize,
    pub flow_refiner: usize,
    pub total: usize,
    pub blocks: Vec<(String, usize)>,
}

impl ParamReport {
    pub fn stage(&self, stage: Stage) -> usize {
        match stage {
            Stage::FeatureExtractor => self.feature_extractor,
            Stage::FlowEstimator => self.flow_estimator,
            Stage::FlowRefiner => self.flow_refiner,
            Stage::Output => 0,
        }
    }
}

pub fn count_params(model: &ModelSpec) -> ParamReport {
    let mut r = ParamReport {
        feature_extractor: 0,
        flow_estimator: 0,
        flow_refiner: 0,
        total: 0,
        blocks: Vec::new(),
    };
    for (stage, b) in model.blocks() {
        let n = b.param_count();
        match stage {
            Stage::FeatureExtractor => r.feature_extractor += n,
            Stage::FlowEstimator => r.flow_estimator += n,
            Stage::FlowRefiner => r.flow_refiner += n,
            Stage::Output => {}
        }
        r.total += n;
        r.blocks.push((b.name.clone(), n));
    }
    r
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MemoryPlan {
    pub height: usize,
    pub width: usize,
    pub peak_activation_bytes: u64,
    pub weight_bytes: u64,
    pub total_bytes: u64,
}

/// Peak resident memory of one forward pass: live activations at their
/// worst moment plus all weights, `bytes_per_element` each.
pub fn plan_memory(model: &ModelSpec, height: usize, width: usize, bytes_per_element: u64) -> Result<MemoryPlan> {
    let trace = trace_model(model, height, width)?;
    let peak = peak_live_bytes(&trace.mem_graph(bytes_per_element))?;
    let weights = count_params(model).total as u64 * bytes_per_element;
    Ok(MemoryPlan {
        height,
        width,
        peak_activation_bytes: peak,
        weight_bytes: weights,
        total_bytes: peak + weights,
    })
}

/// Total planned bytes (peak activations plus weights).
pub fn plan_peak_activation_memory(
    model: &ModelSpec,
    height: usize,
    width: usize,
    bytes_per_element: u64,
) -> Result<u64> {
    Ok(plan_memory(model, height, width, bytes_per_element)?.total_bytes)
}
