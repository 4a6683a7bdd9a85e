//! `N` negative definite ⇒ `e^{−tN}` positive definite and `N^a` negative
//! definite for `0 < a < 1`.

use coarsekit::kernels::{
    default_tolerance, distance_kernel, is_negative_definite, is_positive_definite, schoenberg_exp, snowflake_power,
};
use coarsekit::spaces::{sample_grid, QuasiNormedSpace};

fn main() -> coarsekit::error::Result<()> {
    let grid = sample_grid(&QuasiNormedSpace::lq(1, 1.0)?, 6, 0.5)?;
    let n = distance_kernel(&grid);
    println!("N: {}", is_negative_definite(&n, default_tolerance(&n))?);

    for t in [0.1, 1.0, 10.0] {
        let k = schoenberg_exp(&n, t)?;
        println!("exp(-{t} N): {}", is_positive_definite(&k, default_tolerance(&k))?);
    }
    for a in [0.25, 0.5, 0.75] {
        let na = snowflake_power(&n, a)?;
        println!("N^{a}: {}", is_negative_definite(&na, default_tolerance(&na))?);
    }
    Ok(())
}
