//! A small grid in ℓ_{1/2} and its quasi-metric.

use coarsekit::kernels::{distance_kernel, is_negative_definite};
use coarsekit::spaces::{sample_grid, QuasiNormedSpace};

fn main() -> coarsekit::error::Result<()> {
    let space = QuasiNormedSpace::lq(2, 0.5)?;
    let grid = sample_grid(&space, 1, 1.0)?;
    println!("{} points, p = {}, diameter {}", grid.len(), space.p, grid.diameter());

    let x = [1.0, 1.0];
    println!("‖(1,1)‖_q = {}", space.quasi_norm(&x)?);
    println!("d((0,0), (1,1)) = {}", space.metric(&[0.0, 0.0], &x)?);

    // ℓ_q metrics with q ≤ 2 are negative definite kernels
    let n = distance_kernel(&grid);
    let verdict = is_negative_definite(&n, 1e-9)?;
    println!("distance kernel: {verdict}");
    Ok(())
}
