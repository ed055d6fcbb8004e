use super::ConvParams;
use crate::error::{Error, Result};

/// Fold inference-mode batch normalisation into the preceding convolution.
///
/// `y = gamma * (conv(x) - mean) / sqrt(var + eps) + beta` becomes a single
/// convolution with per-output-channel rescaled filters and a shifted bias.
/// Works for dense and depthwise kernels alike since both index filters by
/// output channel.
pub fn fold_batchnorm(
    p: &ConvParams,
    gamma: &[f32],
    beta: &[f32],
    mean: &[f32],
    var: &[f32],
    eps: f32,
) -> Result<ConvParams> {
    let out_ch = p.kernel.out_ch;
    for (name, v) in [("gamma", gamma), ("beta", beta), ("mean", mean), ("var", var)] {
        if v.len() != out_ch {
            return Err(Error::shape(
                "fold_batchnorm",
                format!("{name} has {} entries for {out_ch} channels", v.len()),
            ));
        }
    }
    let mut kernel = p.kernel.clone();
    let per_filter = kernel.in_ch * kernel.kh * kernel.kw;
    let mut bias = Vec::with_capacity(out_ch);
    for o in 0..out_ch {
        let denom = var[o] + eps;
        if denom <= 0.0 || !denom.is_finite() {
            return Err(Error::invalid(
                "fold_batchnorm",
                format!("var + eps = {denom} for channel {o}"),
            ));
        }
        let scale = gamma[o] / denom.sqrt();
        for w in &mut kernel.data[o * per_filter..(o + 1) * per_filter] {
            *w *= scale;
        }
        let b = p.bias.as_ref().map_or(0.0, |b| b[o]);
        bias.push((b - mean[o]) * scale + beta[o]);
    }
    Ok(ConvParams {
        kernel,
        bias: Some(bias),
        ..p.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Kernel;

    fn params() -> ConvParams {
        ConvParams::same(
            Kernel::new(2, 1, 1, 1, vec![0.5, -1.5]).unwrap(),
            Some(vec![0.25, 1.0]),
        )
        .unwrap()
    }

    #[test]
    fn identity_normalisation_is_noop() {
        let p = params();
        let f = fold_batchnorm(&p, &[1.0; 2], &[0.0; 2], &[0.0; 2], &[1.0; 2], 0.0).unwrap();
        assert_eq!(f, p);
    }

    #[test]
    fn pure_scaling_doubles() {
        let p = params();
        let f = fold_batchnorm(&p, &[2.0; 2], &[0.0; 2], &[0.0; 2], &[1.0; 2], 0.0).unwrap();
        assert_eq!(f.kernel.data, vec![1.0, -3.0]);
        assert_eq!(f.bias, Some(vec![0.5, 2.0]));
    }

    #[test]
    fn rejects_non_positive_variance() {
        let p = params();
        assert!(fold_batchnorm(&p, &[1.0; 2], &[0.0; 2], &[0.0; 2], &[0.0, 1.0], 0.0).is_err());
        assert!(fold_batchnorm(&p, &[1.0; 2], &[0.0; 2], &[0.0; 2], &[-1.0, 1.0], 0.5).is_err());
        assert!(fold_batchnorm(&p, &[1.0; 3], &[0.0; 2], &[0.0; 2], &[1.0; 2], 0.0).is_err());
    }
}
