//! Network definitions, the shared forward graph, and its two interpreters:
//! [`Network`] runs it on tensors, [`trace`] walks it symbolically for
//! FLOP, parameter and memory accounting.

mod graph;
mod mobilenet;
mod network;
mod spec;
pub mod trace;

pub use network::{ForwardOutput, Network, PyramidFeatures};
pub use spec::{
    build_model, prediction_heads, Backbone, Connectivity, ConvKind, EstimatorKind, EstimatorLevel,
    ModelOverrides, ModelSpec, PyramidLevel, PyramidSpec, RefinerDepth, RefinerKind, RefinerSpec,
    Stage, Variant, ESTIMATOR_LEVELS, INPUT_ALIGNMENT, PYRAMID_LEVELS,
};
pub use trace::{
    count_flops, count_params, plan_memory, plan_peak_activation_memory, trace_model, BlockFlops, FlopReport, MemoryPlan,
    ParamReport, Trace,
};
