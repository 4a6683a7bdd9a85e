//! Growth along a chain `x, 2x, …` and propagation of a function modulus
//! from a small scale to a large one.

use coarsekit::kernels::{distance_kernel, InvariantFunctionTable};
use coarsekit::moduli::{growth_check, propagation_check, propagation_check_positive};
use coarsekit::spaces::{sample_grid, QuasiNormedSpace};

fn main() -> coarsekit::error::Result<()> {
    let space = QuasiNormedSpace::lq(1, 1.0)?;
    let grid = sample_grid(&space, 8, 1.0)?;
    let n = distance_kernel(&grid).map(f64::sqrt)?;
    let growth = growth_check(&grid, &n, "1", 4)?;
    println!("growth: {:?}", growth.outcome);
    for row in &growth.rows {
        println!("  k = {}: f(kx) = {:.4} ≤ {:.4}", row.k, row.f_kx, row.bound);
    }

    let rho = InvariantFunctionTable::from_fn(grid.clone(), |x| x[0].abs().sqrt())?;
    let report = propagation_check(&rho, 1.0, 6.0)?;
    println!("rho propagation: {:?} ({} ≤ {})", report.outcome, report.modulus_s, report.rhs);

    let h = InvariantFunctionTable::from_fn(grid, |x| (-x[0].abs()).exp())?;
    let report = propagation_check_positive(&h, 1.0, 6.0)?;
    println!("g propagation: {:?} ({} ≤ {})", report.outcome, report.modulus_s, report.rhs);
    Ok(())
}
