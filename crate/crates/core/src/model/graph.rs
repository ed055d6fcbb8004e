use super::spec::{Connectivity, EstimatorLevel, ModelSpec, Stage, INPUT_ALIGNMENT};
use crate::blocks::BlockSpec;
use crate::error::{Error, Result};
use crate::tensor::Shape;

/// Interpreter for the forward graph. Every op takes a stable name used in
/// per-block breakdowns.
pub(crate) trait Executor {
    type Value: Clone;

    fn shape(&self, v: &Self::Value) -> Shape;
    fn set_stage(&mut self, stage: Stage);
    fn block(&mut self, spec: &BlockSpec, x: &Self::Value) -> Result<Self::Value>;
    /// Cost volume followed by leaky ReLU.
    fn correlation(&mut self, name: &str, f1: &Self::Value, f2: &Self::Value, radius: usize) -> Result<Self::Value>;
    fn warp(&mut self, name: &str, features: &Self::Value, flow: &Self::Value, scale: f32) -> Result<Self::Value>;
    fn concat(&mut self, name: &str, parts: &[&Self::Value]) -> Result<Self::Value>;
    /// Bilinear resize by `factor` with flow values multiplied by `factor`.
    fn upsample_flow(&mut self, name: &str, flow: &Self::Value, factor: usize) -> Result<Self::Value>;
    /// Plain bilinear resize by `factor`.
    fn upsample(&mut self, name: &str, x: &Self::Value, factor: usize) -> Result<Self::Value>;
    fn add(&mut self, name: &str, a: &Self::Value, b: &Self::Value) -> Result<Self::Value>;
    fn scale(&mut self, name: &str, x: &Self::Value, s: f32) -> Result<Self::Value>;
}

pub(crate) struct GraphOutput<V> {
    /// `(level, flow)` for levels 6..2, in units of `1/div_flow` pixels of
    /// that level; level 2 is the refined flow.
    pub level_flows: Vec<(usize, V)>,
    /// Full-resolution flow in pixels.
    pub flow: V,
}

pub(crate) fn check_input(op: &'static str, shape: Shape) -> Result<()> {
    if shape.channels != 3 {
        return Err(Error::shape(op, format!("expected a 3-channel image, got {shape}")));
    }
    if shape.height == 0
        || shape.width == 0
        || shape.height % INPUT_ALIGNMENT != 0
        || shape.width % INPUT_ALIGNMENT != 0
    {
        return Err(Error::shape(
            op,
            format!(
                "image {}x{} must be non-empty with both sides divisible by {INPUT_ALIGNMENT}",
                shape.height, shape.width
            ),
        ));
    }
    Ok(())
}

/// Pyramid features, index 0 holding level 1.
pub(crate) fn pyramid<E: Executor>(model: &ModelSpec, exec: &mut E, image: &E::Value) -> Result<Vec<E::Value>> {
    check_input("pyramid", exec.shape(image))?;
    let mut trunk = image.clone();
    let mut taps = Vec::with_capacity(model.pyramid.levels.len());
    for level in &model.pyramid.levels {
        for b in &level.blocks {
            trunk = exec.block(b, &trunk)?;
        }
        taps.push(match &level.projection {
            Some(p) => exec.block(p, &trunk)?,
            None => trunk.clone(),
        });
    }
    Ok(taps)
}

/// Runs one estimator level; returns `(flow, features feeding the head)`.
fn estimate<E: Executor>(
    model: &ModelSpec,
    exec: &mut E,
    est: &EstimatorLevel,
    input: E::Value,
) -> Result<(E::Value, E::Value)> {
    let mut x = input;
    for (i, layer) in est.layers.iter().enumerate() {
        let y = exec.block(layer, &x)?;
        x = match model.estimator_kind.connectivity {
            Connectivity::Dense => exec.concat(&format!("estimator.l{}.dense{i}", est.level), &[&y, &x])?,
            Connectivity::Sequential => y,
        };
    }
    let flow = exec.block(&est.predict, &x)?;
    Ok((flow, x))
}

pub(crate) fn forward<E: Executor>(
    model: &ModelSpec,
    exec: &mut E,
    image1: &E::Value,
    image2: &E::Value,
) -> Result<GraphOutput<E::Value>> {
    let (s1, s2) = (exec.shape(image1), exec.shape(image2));
    if s1 != s2 {
        return Err(Error::shape("forward", format!("image shapes differ: {s1} vs {s2}")));
    }
    check_input("forward", s1)?;

    exec.set_stage(Stage::FeatureExtractor);
    let p1 = pyramid(model, exec, image1)?;
    let p2 = pyramid(model, exec, image2)?;

    exec.set_stage(Stage::FlowEstimator);
    let mut level_flows = Vec::with_capacity(model.estimators.len());
    let mut carry: Option<(E::Value, E::Value)> = None;
    let mut finest = None;
    for est in &model.estimators {
        let l = est.level;
        let (f1, f2) = (&p1[l - 1], &p2[l - 1]);
        let input = match &carry {
            None => exec.correlation(&format!("estimator.l{l}.corr"), f1, f2, model.corr_radius)?,
            Some((upflow, upfeat)) => {
                let warped = exec.warp(&format!("estimator.l{l}.warp"), f2, upflow, model.warp_scale)?;
                let corr = exec.correlation(&format!("estimator.l{l}.corr"), f1, &warped, model.corr_radius)?;
                exec.concat(&format!("estimator.l{l}.input"), &[&corr, f1, upflow, upfeat])?
            }
        };
        let (flow, feat) = estimate(model, exec, est, input)?;
        carry = match &est.upfeat {
            Some(head) => {
                let upflow = exec.upsample_flow(&format!("estimator.l{l}.upflow"), &flow, 2)?;
                let up = exec.block(head, &feat)?;
                let upfeat = exec.upsample(&format!("estimator.l{l}.upsample_feat"), &up, 2)?;
                Some((upflow, upfeat))
            }
            None => {
                finest = Some(feat);
                None
            }
        };
        level_flows.push((l, flow));
    }

    exec.set_stage(Stage::FlowRefiner);
    let mut x = finest.expect("the finest estimator has no upfeat head");
    for layer in &model.refiner.layers {
        x = exec.block(layer, &x)?;
    }
    let (level, coarse) = level_flows.pop().expect("five estimator levels");
    let refined = exec.add("refiner.residual", &coarse, &x)?;

    exec.set_stage(Stage::Output);
    let pixels = exec.scale("output.scale", &refined, model.div_flow)?;
    let factor = 1usize << level;
    let flow = exec.upsample_flow("output.upsample", &pixels, factor)?;
    level_flows.push((level, refined));
    Ok(GraphOutput { level_flows, flow })
}
