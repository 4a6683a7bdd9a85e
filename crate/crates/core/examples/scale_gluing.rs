//! Build a family of rescaled Gaussian sphere maps and glue them into one
//! coarse embedding of a line sample.

use coarsekit::constructions::{build_scale_family, dg_glue};
use coarsekit::maps::GaussianSphereMap;
use coarsekit::spaces::{sample_grid, QuasiNormedSpace};

fn main() -> coarsekit::error::Result<()> {
    let sample = sample_grid(&QuasiNormedSpace::euclidean(1), 24, 0.75)?;
    let family = build_scale_family(&GaussianSphereMap::default(), &sample, 1.0, 4)?;
    println!("δ = {:.4}", family.delta());
    for scale in family.scales() {
        println!("  n = {}: a = {:.6}, s = {}", scale.n, scale.a, scale.s);
    }

    let glued = dg_glue(&family, &sample, "0")?;
    let r = &glued.report;
    println!(
        "glued {} pairs: {} upper, {} lower, {} envelope violations; sum identity error {:e}",
        r.pairs, r.upper_violations, r.lower_violations, r.envelope_violations, r.sum_identity_error
    );
    println!("outcome {:?}", r.outcome);
    Ok(())
}
