//! End-point error, Fl-all and the multi-scale training losses.

use compactflow::flow::FlowField;
use compactflow::metrics::{
    distillation_loss, downscale_ground_truth, epe, fl_all, multiscale_supervision_loss, total_loss,
    LossConfig, Norm, DEFAULT_GAMMA, LEVEL_WEIGHTS,
};

fn main() -> compactflow::Result<()> {
    let gt = FlowField::constant(64, 64, 12.0, -6.0);
    let pred = FlowField::constant(64, 64, 15.0, -2.0);
    println!("EPE {:.3}, Fl-all {:.3}", epe(&pred, &gt, None)?, fl_all(&pred, &gt, None)?);

    let cfg = LossConfig::default();
    let student: Vec<(usize, FlowField)> = [6, 5, 4, 3, 2]
        .iter()
        .map(|&l| Ok((l, downscale_ground_truth(&pred, l, cfg.div_flow)?)))
        .collect::<compactflow::Result<_>>()?;
    let teacher: Vec<(usize, FlowField)> = [6, 5, 4, 3, 2]
        .iter()
        .map(|&l| Ok((l, downscale_ground_truth(&gt, l, cfg.div_flow)?)))
        .collect::<compactflow::Result<_>>()?;

    let (sup, per_level) = multiscale_supervision_loss(&student, &gt, &LEVEL_WEIGHTS, &cfg)?;
    let dist = distillation_loss(&student, &teacher, &LEVEL_WEIGHTS, &cfg)?;
    let mut loss = total_loss(sup, dist, DEFAULT_GAMMA);
    loss.per_level = per_level;
    println!("supervision {:.4}, distillation {:.4}, total {:.4}", loss.sup, loss.dist, loss.total);
    println!("per level (6..2): {:?}", loss.per_level);

    let squared = LossConfig { norm: Norm::SquaredL2, ..cfg };
    let (sq, _) = multiscale_supervision_loss(&student, &gt, &LEVEL_WEIGHTS, &squared)?;
    println!("with squared distances: {sq:.4}");
    Ok(())
}
