//! Optical flow networks in the PWC-Net family, with a compact variant
//! built from depthwise-separable convolutions and a MobileNetV3 pyramid.
//!
//! The crate covers the numerical kernels, the model definitions, weight
//! serialisation, accuracy metrics and training losses, flow file formats,
//! and a benchmark harness that profiles cost and latency.

pub mod bench;
pub mod blocks;
pub mod error;
pub mod flow;
pub mod io;
pub mod memory;
pub mod metrics;
pub mod model;
pub mod tensor;
pub mod weights;

pub use error::{Error, Result};
pub use tensor::{Shape, Tensor};
