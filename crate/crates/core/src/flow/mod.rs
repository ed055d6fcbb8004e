//! Flow fields and the flow-specific kernels: backward warping, the local
//! correlation cost volume, and flow rescaling between pyramid levels.

mod correlation;
mod warp;

pub use correlation::{correlation, CostVolume};
pub use warp::{warp, warp_scaled};

use crate::error::{Error, Result};
use crate::tensor::{bilinear_resize, Tensor};

/// Per-pixel `(u, v)` displacements, in pixels of the field's own grid.
///
/// Channel 0 holds horizontal motion `u`, channel 1 vertical motion `v`.
/// The optional mask marks pixels with known ground truth (KITTI sparsity).
#[derive(Clone, Debug, PartialEq)]
pub struct FlowField {
    flow: Tensor,
    valid: Option<Vec<bool>>,
}

impl FlowField {
    pub fn new(flow: Tensor) -> Result<Self> {
        if flow.channels() != 2 {
            return Err(Error::shape(
                "flow",
                format!("flow needs 2 channels, got {}", flow.channels()),
            ));
        }
        Ok(FlowField { flow, valid: None })
    }

    pub fn with_mask(flow: Tensor, valid: Vec<bool>) -> Result<Self> {
        let mut f = Self::new(flow)?;
        f.set_mask(Some(valid))?;
        Ok(f)
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        FlowField {
            flow: Tensor::zeros(2, height, width),
            valid: None,
        }
    }

    pub fn constant(height: usize, width: usize, u: f32, v: f32) -> Self {
        FlowField {
            flow: Tensor::from_fn(2, height, width, |c, _, _| if c == 0 { u } else { v }),
            valid: None,
        }
    }

    pub fn height(&self) -> usize {
        self.flow.height()
    }

    pub fn width(&self) -> usize {
        self.flow.width()
    }

    pub fn tensor(&self) -> &Tensor {
        &self.flow
    }

    pub fn into_tensor(self) -> Tensor {
        self.flow
    }

    pub fn u(&self) -> &[f32] {
        self.flow.channel(0)
    }

    pub fn v(&self) -> &[f32] {
        self.flow.channel(1)
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.valid.as_deref()
    }

    pub fn set_mask(&mut self, valid: Option<Vec<bool>>) -> Result<()> {
        if let Some(m) = &valid {
            if m.len() != self.height() * self.width() {
                return Err(Error::shape(
                    "flow",
                    format!(
                        "mask of {} entries for {}x{} field",
                        m.len(),
                        self.height(),
                        self.width()
                    ),
                ));
            }
        }
        self.valid = valid;
        Ok(())
    }

    pub fn is_valid(&self, idx: usize) -> bool {
        self.valid.as_ref().map_or(true, |m| m[idx])
    }
}

/// Multiply both displacement channels by `s`; the mask is kept.
pub fn scale_flow(flow: &FlowField, s: f32) -> FlowField {
    FlowField {
        flow: flow.flow.scale(s),
        valid: flow.valid.clone(),
    }
}

/// Bilinear 2x resize followed by doubling the displacements so they are
/// expressed in pixels of the finer grid. The mask is dropped.
pub fn upsample_flow2x(flow: &FlowField) -> FlowField {
    upsample_flow(flow, 2)
}

pub(crate) fn upsample_flow(flow: &FlowField, factor: usize) -> FlowField {
    let resized = bilinear_resize(&flow.flow, flow.height() * factor, flow.width() * factor);
    FlowField {
        flow: resized.scale(factor as f32),
        valid: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_channel_count() {
        assert!(FlowField::new(Tensor::zeros(3, 2, 2)).is_err());
        assert!(FlowField::with_mask(Tensor::zeros(2, 2, 2), vec![true; 3]).is_err());
    }

    #[test]
    fn scale_flow_cases() {
        let f = FlowField::constant(2, 3, 0.1, -0.2);
        assert_eq!(scale_flow(&f, 1.0), f);
        assert_eq!(scale_flow(&f, 0.0).tensor().data().iter().filter(|v| **v != 0.0).count(), 0);
        let s = scale_flow(&f, 20.0);
        assert!(s.u().iter().all(|&u| u == 2.0));
        assert!(s.v().iter().all(|&v| v == -4.0));
        let masked = FlowField::with_mask(Tensor::zeros(2, 1, 2), vec![true, false]).unwrap();
        assert_eq!(scale_flow(&masked, 3.0).mask(), Some(&[true, false][..]));
    }

    #[test]
    fn upsample_constant_and_zero() {
        let f = FlowField::constant(3, 4, 1.25, -0.5);
        let up = upsample_flow2x(&f);
        assert_eq!((up.height(), up.width()), (6, 8));
        assert!(up.u().iter().all(|&u| u == 2.5));
        assert!(up.v().iter().all(|&v| v == -1.0));
        let z = upsample_flow2x(&FlowField::zeros(2, 2));
        assert!(z.tensor().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn upsample_ramp_matches_resize_then_scale() {
        let ramp = Tensor::from_fn(2, 5, 7, |c, y, x| if c == 0 { x as f32 * 0.3 } else { -(y as f32) * 0.7 + 0.1 });
        let f = FlowField::new(ramp.clone()).unwrap();
        let up = upsample_flow2x(&f);
        let expected = bilinear_resize(&ramp, 10, 14).map(|v| v * 2.0);
        assert_eq!(up.tensor(), &expected);
    }
}
