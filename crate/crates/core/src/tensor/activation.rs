use serde::{Deserialize, Serialize};

use super::Tensor;

/// Pointwise nonlinearities used by the flow networks and the MobileNetV3
/// backbone. `Linear` is the identity (used for prediction heads and
/// bottleneck projections).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "alpha")]
pub enum Activation {
    Linear,
    Relu,
    Relu6,
    LeakyRelu(f32),
    HardSigmoid,
    HardSwish,
}

impl Activation {
    /// Slope used throughout the PWC-style estimators.
    pub const LEAKY: Activation = Activation::LeakyRelu(0.1);

    #[inline]
    pub fn apply(self, x: f32) -> f32 {
        match self {
            Activation::Linear => x,
            Activation::Relu => x.max(0.0),
            Activation::Relu6 => x.clamp(0.0, 6.0),
            Activation::LeakyRelu(alpha) => {
                if x >= 0.0 {
                    x
                } else {
                    alpha * x
                }
            }
            Activation::HardSigmoid => hard_sigmoid(x),
            Activation::HardSwish => x * hard_sigmoid(x),
        }
    }
}

#[inline]
fn hard_sigmoid(x: f32) -> f32 {
    ((x + 3.0) / 6.0).clamp(0.0, 1.0)
}

pub fn apply_activation(input: &Tensor, kind: Activation) -> Tensor {
    input.map(|v| kind.apply(v))
}

pub fn apply_activation_in_place(t: &mut Tensor, kind: Activation) {
    if kind == Activation::Linear {
        return;
    }
    t.data_mut().iter_mut().for_each(|v| *v = kind.apply(*v));
}
