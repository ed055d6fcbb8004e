//! Composite layers: plain conv blocks, depthwise-separable pairs, and
//! MobileNetV3 inverted residuals with optional squeeze-excitation.
//!
//! A [`BlockSpec`] is purely declarative. It knows its parameter tensors
//! (names, shapes, fan-in), its output shape and its sub-operations; a
//! [`PreparedBlock`] binds it to concrete weights for inference.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{
    apply_activation_in_place, conv2d, conv_output_dim, depthwise_conv2d, Activation, ConvParams,
    Kernel, Shape, Tensor,
};
use crate::weights::WeightStore;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    Conv,
    DsConv,
    InvertedResidual,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub name: String,
    pub kind: BlockKind,
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub stride: usize,
    pub dilation: usize,
    pub activation: Activation,
    /// Width of the expanded representation (inverted residual only;
    /// equal to `in_ch` when there is no expansion conv).
    pub expanded_ch: usize,
    pub use_se: bool,
}

/// One learnable tensor of a block.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSlot {
    pub name: String,
    pub dims: Vec<usize>,
    /// Fan-in of the convolution the tensor belongs to.
    pub fan_in: usize,
}

impl ParamSlot {
    pub fn numel(&self) -> usize {
        self.dims.iter().product()
    }
}

/// A primitive step inside a block, used for FLOP and liveness accounting.
#[derive(Clone, Debug, PartialEq)]
pub struct SubOp {
    pub label: &'static str,
    /// `0` is the block input, `i + 1` the output of sub-op `i`.
    pub inputs: Vec<usize>,
    pub output: Shape,
    pub macs: u64,
}

/// Channel count of the squeeze-excitation bottleneck: a quarter of the
/// gated width, rounded to a multiple of 8 as MobileNetV3 does.
pub fn se_channels(channels: usize) -> usize {
    make_divisible(channels / 4, 8)
}

fn make_divisible(v: usize, divisor: usize) -> usize {
    let rounded = ((v + divisor / 2) / divisor * divisor).max(divisor);
    if (rounded as f64) < 0.9 * v as f64 {
        rounded + divisor
    } else {
        rounded
    }
}

impl BlockSpec {
    pub fn conv(name: impl Into<String>, in_ch: usize, out_ch: usize, kernel: usize, stride: usize) -> Self {
        BlockSpec {
            name: name.into(),
            kind: BlockKind::Conv,
            in_ch,
            out_ch,
            kernel,
            stride,
            dilation: 1,
            activation: Activation::LEAKY,
            expanded_ch: in_ch,
            use_se: false,
        }
    }

    pub fn ds_conv(name: impl Into<String>, in_ch: usize, out_ch: usize, kernel: usize, stride: usize) -> Self {
        BlockSpec {
            kind: BlockKind::DsConv,
            ..Self::conv(name, in_ch, out_ch, kernel, stride)
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn inverted_residual(
        name: impl Into<String>,
        in_ch: usize,
        kernel: usize,
        expanded_ch: usize,
        out_ch: usize,
        use_se: bool,
        activation: Activation,
        stride: usize,
    ) -> Self {
        BlockSpec {
            name: name.into(),
            kind: BlockKind::InvertedResidual,
            in_ch,
            out_ch,
            kernel,
            stride,
            dilation: 1,
            activation,
            expanded_ch,
            use_se,
        }
    }

    pub fn with_dilation(mut self, dilation: usize) -> Self {
        self.dilation = dilation;
        self
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }

    pub fn expand_ratio(&self) -> f32 {
        self.expanded_ch as f32 / self.in_ch as f32
    }

    pub fn has_skip(&self) -> bool {
        self.kind == BlockKind::InvertedResidual && self.stride == 1 && self.in_ch == self.out_ch
    }

    fn padding(&self) -> usize {
        self.dilation * (self.kernel / 2)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("block `{}`: {msg}", self.name)));
        if self.in_ch == 0 || self.out_ch == 0 {
            return bad("zero channels".into());
        }
        if self.kernel % 2 == 0 {
            return bad(format!("kernel {} must be odd", self.kernel));
        }
        if self.stride == 0 || self.dilation == 0 {
            return bad("stride and dilation must be >= 1".into());
        }
        if self.kind == BlockKind::InvertedResidual && self.expanded_ch < self.in_ch {
            return bad(format!(
                "expanded width {} below input width {} (ratio < 1)",
                self.expanded_ch, self.in_ch
            ));
        }
        Ok(())
    }

    pub fn output_shape(&self, input: Shape) -> Result<Shape> {
        if input.channels != self.in_ch {
            return Err(Error::shape(
                "block",
                format!(
                    "`{}` expects {} channels, got {}",
                    self.name, self.in_ch, input.channels
                ),
            ));
        }
        let dim = |n| conv_output_dim(n, self.kernel, self.stride, self.padding(), self.dilation);
        match (dim(input.height), dim(input.width)) {
            (Some(h), Some(w)) => Ok(Shape::new(self.out_ch, h, w)),
            _ => Err(Error::shape(
                "block",
                format!("`{}`: input {input} too small", self.name),
            )),
        }
    }

    fn has_expand(&self) -> bool {
        self.expanded_ch != self.in_ch
    }

    /// Learnable tensors in consumption order.
    pub fn param_slots(&self) -> Vec<ParamSlot> {
        let k = self.kernel;
        let mut slots = Vec::new();
        let mut conv = |prefix: String, out: usize, inp: usize, kh: usize| {
            let fan_in = inp * kh * kh;
            slots.push(ParamSlot {
                name: format!("{prefix}.weight"),
                dims: vec![out, inp, kh, kh],
                fan_in,
            });
            slots.push(ParamSlot {
                name: format!("{prefix}.bias"),
                dims: vec![out],
                fan_in,
            });
        };
        let n = &self.name;
        match self.kind {
            BlockKind::Conv => conv(n.clone(), self.out_ch, self.in_ch, k),
            BlockKind::DsConv => {
                conv(format!("{n}.dw"), self.in_ch, 1, k);
                conv(format!("{n}.pw"), self.out_ch, self.in_ch, 1);
            }
            BlockKind::InvertedResidual => {
                let e = self.expanded_ch;
                if self.has_expand() {
                    conv(format!("{n}.expand"), e, self.in_ch, 1);
                }
                conv(format!("{n}.dw"), e, 1, k);
                if self.use_se {
                    let s = se_channels(e);
                    conv(format!("{n}.se.reduce"), s, e, 1);
                    conv(format!("{n}.se.expand"), e, s, 1);
                }
                conv(format!("{n}.project"), self.out_ch, e, 1);
            }
        }
        slots
    }

    pub fn param_count(&self) -> usize {
        self.param_slots().iter().map(ParamSlot::numel).sum()
    }

    /// Primitive steps with their output shapes and multiply-accumulates.
    /// Biases, activations, pooling and elementwise ops count zero MACs.
    pub fn sub_ops(&self, input: Shape) -> Result<Vec<SubOp>> {
        let out = self.output_shape(input)?;
        let k2 = (self.kernel * self.kernel) as u64;
        let plane = |s: Shape| s.plane() as u64;
        let op = |label, inputs: Vec<usize>, output: Shape, macs| SubOp {
            label,
            inputs,
            output,
            macs,
        };
        let ops = match self.kind {
            BlockKind::Conv => vec![op(
                "conv",
                vec![0],
                out,
                (self.out_ch * self.in_ch) as u64 * k2 * plane(out),
            )],
            BlockKind::DsConv => {
                let dw = Shape::new(self.in_ch, out.height, out.width);
                vec![
                    op("depthwise", vec![0], dw, self.in_ch as u64 * k2 * plane(out)),
                    op("pointwise", vec![1], out, (self.in_ch * self.out_ch) as u64 * plane(out)),
                ]
            }
            BlockKind::InvertedResidual => {
                let e = self.expanded_ch;
                let mut ops = Vec::new();
                let mut cur = 0;
                if self.has_expand() {
                    let s = Shape::new(e, input.height, input.width);
                    ops.push(op("expand", vec![0], s, (e * self.in_ch) as u64 * plane(input)));
                    cur = ops.len();
                }
                let dw = Shape::new(e, out.height, out.width);
                ops.push(op("depthwise", vec![cur], dw, e as u64 * k2 * plane(out)));
                cur = ops.len();
                if self.use_se {
                    let s = se_channels(e);
                    let pooled = Shape::new(e, 1, 1);
                    ops.push(op("se_pool", vec![cur], pooled, 0));
                    ops.push(op("se_reduce", vec![ops.len()], Shape::new(s, 1, 1), (s * e) as u64));
                    ops.push(op("se_expand", vec![ops.len()], pooled, (s * e) as u64));
                    ops.push(op("se_scale", vec![cur, ops.len()], dw, 0));
                    cur = ops.len();
                }
                ops.push(op("project", vec![cur], out, (e * self.out_ch) as u64 * plane(out)));
                if self.has_skip() {
                    ops.push(op("residual_add", vec![ops.len(), 0], out, 0));
                }
                ops
            }
        };
        Ok(ops)
    }

    pub fn macs(&self, input: Shape) -> Result<u64> {
        Ok(self.sub_ops(input)?.iter().map(|o| o.macs).sum())
    }
}

/// Squeeze-excitation gate: global average pool, 1x1 reduce + ReLU,
/// 1x1 expand + hard sigmoid, then per-channel rescaling of the input.
#[derive(Clone, Debug, PartialEq)]
pub struct SqueezeExcitation {
    pub reduce: ConvParams,
    pub expand: ConvParams,
}

impl SqueezeExcitation {
    pub fn forward(&self, input: &Tensor) -> Result<Tensor> {
        let c = input.channels();
        let n = (input.height() * input.width()) as f32;
        let pooled: Vec<f32> = (0..c)
            .map(|ch| input.channel(ch).iter().sum::<f32>() / n)
            .collect();
        let mut squeezed = conv2d(&Tensor::new(c, 1, 1, pooled)?, &self.reduce)?;
        apply_activation_in_place(&mut squeezed, Activation::Relu);
        let mut gate = conv2d(&squeezed, &self.expand)?;
        apply_activation_in_place(&mut gate, Activation::HardSigmoid);
        if gate.channels() != c {
            return Err(Error::shape(
                "squeeze_excitation",
                format!("gate has {} channels for {c}-channel input", gate.channels()),
            ));
        }
        let mut out = input.clone();
        for ch in 0..c {
            let g = gate.data()[ch];
            out.channel_mut(ch).iter_mut().for_each(|v| *v *= g);
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Layers {
    Conv(ConvParams),
    DsConv {
        depthwise: ConvParams,
        pointwise: ConvParams,
    },
    InvertedResidual {
        expand: Option<ConvParams>,
        depthwise: ConvParams,
        se: Option<SqueezeExcitation>,
        project: ConvParams,
    },
}

/// A block bound to its weights.
#[derive(Clone, Debug, PartialEq)]
pub struct PreparedBlock {
    pub spec: BlockSpec,
    layers: Layers,
}

impl PreparedBlock {
    /// Pull this block's tensors out of `store`, checking every shape.
    pub fn load(spec: &BlockSpec, store: &WeightStore) -> Result<Self> {
        spec.validate()?;
        let slots = spec.param_slots();
        let mut it = slots.chunks(2);
        let mut next = |stride: usize, padding: usize, dilation: usize| -> Result<ConvParams> {
            let pair = it.next().expect("param slots come in weight/bias pairs");
            let w = store.expect(&pair[0].name, &pair[0].dims)?;
            let b = store.expect(&pair[1].name, &pair[1].dims)?;
            let d = &pair[0].dims;
            ConvParams::new(
                Kernel::new(d[0], d[1], d[2], d[3], w.data.clone())?,
                Some(b.data.clone()),
                stride,
                padding,
                dilation,
            )
        };
        let (s, p, d) = (spec.stride, spec.padding(), spec.dilation);
        let layers = match spec.kind {
            BlockKind::Conv => Layers::Conv(next(s, p, d)?),
            BlockKind::DsConv => Layers::DsConv {
                depthwise: next(s, p, d)?,
                pointwise: next(1, 0, 1)?,
            },
            BlockKind::InvertedResidual => {
                let expand = if spec.has_expand() {
                    Some(next(1, 0, 1)?)
                } else {
                    None
                };
                let depthwise = next(s, p, d)?;
                let se = if spec.use_se {
                    Some(SqueezeExcitation {
                        reduce: next(1, 0, 1)?,
                        expand: next(1, 0, 1)?,
                    })
                } else {
                    None
                };
                Layers::InvertedResidual {
                    expand,
                    depthwise,
                    se,
                    project: next(1, 0, 1)?,
                }
            }
        };
        Ok(PreparedBlock {
            spec: spec.clone(),
            layers,
        })
    }

    pub fn forward(&self, input: &Tensor) -> Result<Tensor> {
        let act = self.spec.activation;
        match &self.layers {
            Layers::Conv(p) => {
                let mut y = conv2d(input, p)?;
                apply_activation_in_place(&mut y, act);
                Ok(y)
            }
            Layers::DsConv {
                depthwise,
                pointwise,
            } => ds_conv_forward(input, depthwise, pointwise, act),
            Layers::InvertedResidual {
                expand,
                depthwise,
                se,
                project,
            } => {
                let expanded;
                let x = match expand {
                    Some(p) => {
                        let mut y = conv2d(input, p)?;
                        apply_activation_in_place(&mut y, act);
                        expanded = y;
                        &expanded
                    }
                    None => input,
                };
                let mut y = depthwise_conv2d(x, depthwise)?;
                apply_activation_in_place(&mut y, act);
                if let Some(se) = se {
                    y = se.forward(&y)?;
                }
                let y = conv2d(&y, project)?;
                if self.spec.has_skip() {
                    y.add(input)
                } else {
                    Ok(y)
                }
            }
        }
    }
}

/// Depthwise `k x k` then pointwise `1 x 1`, activation after each stage.
pub fn ds_conv_forward(
    input: &Tensor,
    depthwise: &ConvParams,
    pointwise: &ConvParams,
    activation: Activation,
) -> Result<Tensor> {
    let mut y = depthwise_conv2d(input, depthwise)?;
    apply_activation_in_place(&mut y, activation);
    let mut y = conv2d(&y, pointwise)?;
    apply_activation_in_place(&mut y, activation);
    Ok(y)
}
