//! MobileNetV3-Large as a six-level pyramid feature extractor.
//!
//! Stage table follows the published MobileNetV3-Large definition. Batch
//! norm is assumed folded into conv biases. The classifier head and the
//! final 1x1 960-channel conv are dropped; the trunk is tapped after the
//! last block at each stride, one extra depthwise-separable stride-2 block
//! supplies stride 64, and every tap gets a 1x1 projection to the pyramid
//! width the flow estimators expect.

use super::spec::{Backbone, PyramidLevel, PyramidSpec};
use crate::blocks::BlockSpec;
use crate::tensor::Activation::{self, HardSwish, Relu};

/// `(in, kernel, expanded, out, squeeze-excite, activation, stride)`
type Bneck = (usize, usize, usize, usize, bool, Activation, usize);

const STAGES: [&[Bneck]; 5] = [
    // stride 2 (after the stem)
    &[(16, 3, 16, 16, false, Relu, 1)],
    // stride 4
    &[(16, 3, 64, 24, false, Relu, 2), (24, 3, 72, 24, false, Relu, 1)],
    // stride 8
    &[
        (24, 5, 72, 40, true, Relu, 2),
        (40, 5, 120, 40, true, Relu, 1),
        (40, 5, 120, 40, true, Relu, 1),
    ],
    // stride 16
    &[
        (40, 3, 240, 80, false, HardSwish, 2),
        (80, 3, 200, 80, false, HardSwish, 1),
        (80, 3, 184, 80, false, HardSwish, 1),
        (80, 3, 184, 80, false, HardSwish, 1),
        (80, 3, 480, 112, true, HardSwish, 1),
        (112, 3, 672, 112, true, HardSwish, 1),
    ],
    // stride 32
    &[
        (112, 5, 672, 160, true, HardSwish, 2),
        (160, 5, 960, 160, true, HardSwish, 1),
        (160, 5, 960, 160, true, HardSwish, 1),
    ],
];

const STEM_CHANNELS: usize = 16;

pub(crate) fn mobilenet_v3_large_pyramid(widths: &[usize; 6]) -> PyramidSpec {
    let mut levels = Vec::with_capacity(6);
    for (i, stage) in STAGES.iter().enumerate() {
        let l = i + 1;
        let mut blocks = Vec::new();
        if l == 1 {
            blocks.push(
                BlockSpec::conv("pyramid.l1.stem", 3, STEM_CHANNELS, 3, 2).with_activation(HardSwish),
            );
        }
        for (j, &(in_ch, k, exp, out, se, act, s)) in stage.iter().enumerate() {
            blocks.push(BlockSpec::inverted_residual(
                format!("pyramid.l{l}.b{j}"),
                in_ch,
                k,
                exp,
                out,
                se,
                act,
                s,
            ));
        }
        let tap = blocks.last().expect("non-empty stage").out_ch;
        levels.push(PyramidLevel {
            level: l,
            blocks,
            projection: Some(BlockSpec::conv(format!("pyramid.l{l}.proj"), tap, widths[i], 1, 1)),
        });
    }
    let last = levels[4].blocks.last().expect("non-empty stage").out_ch;
    levels.push(PyramidLevel {
        level: 6,
        blocks: vec![BlockSpec::ds_conv("pyramid.l6.down", last, widths[5], 3, 2).with_activation(HardSwish)],
        projection: Some(BlockSpec::conv("pyramid.l6.proj", widths[5], widths[5], 1, 1)),
    });
    PyramidSpec {
        backbone: Backbone::MobileNetV3Large,
        levels,
    }
}
