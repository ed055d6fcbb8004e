//! Convolution kernels on a small tensor: standard, depthwise, dilated and
//! strided, plus batch-norm folding and bilinear resizing.

use compactflow::tensor::{
    bilinear_resize, conv2d, depthwise_conv2d, fold_batchnorm, ConvParams, Kernel,
};
use compactflow::Tensor;

fn main() -> compactflow::Result<()> {
    let x = Tensor::from_fn(2, 6, 6, |c, y, x| (c * 36 + y * 6 + x) as f32 / 72.0);

    // 3x3 box filter summing both channels
    let box3 = Kernel::new(1, 2, 3, 3, vec![1.0 / 9.0; 18])?;
    let y = conv2d(&x, &ConvParams::same(box3.clone(), None)?)?;
    println!("box filter: {} -> {}, centre {:.4}", x.shape(), y.shape(), y.at(0, 3, 3));

    let strided = ConvParams::new(box3.clone(), None, 2, 1, 1)?;
    println!("stride 2: {}", conv2d(&x, &strided)?.shape());
    let dilated = ConvParams::new(box3, None, 1, 2, 2)?;
    println!("dilation 2: {}", conv2d(&x, &dilated)?.shape());

    // per-channel Laplacian
    let lap = [0.0, 1.0, 0.0, 1.0, -4.0, 1.0, 0.0, 1.0, 0.0];
    let dw = Kernel::new(2, 1, 3, 3, lap.repeat(2))?;
    let d = depthwise_conv2d(&x, &ConvParams::same(dw, None)?)?;
    println!("depthwise laplacian at (1,3,3): {:.4}", d.at(1, 3, 3));

    let ident = ConvParams::same(Kernel::new(1, 1, 1, 1, vec![1.0])?, Some(vec![0.0]))?;
    let folded = fold_batchnorm(&ident, &[2.0], &[0.5], &[1.0], &[4.0], 0.0)?;
    println!(
        "folded batch norm: weight {:.3}, bias {:.3}",
        folded.kernel.data[0],
        folded.bias.as_ref().map_or(0.0, |b| b[0])
    );

    let up = bilinear_resize(&x, 12, 12);
    println!("bilinear 2x: {} (corner {:.4})", up.shape(), up.at(0, 0, 0));
    Ok(())
}
