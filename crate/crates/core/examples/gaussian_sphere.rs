//! The Gaussian map onto the unit sphere and its empirical moduli.

use coarsekit::maps::{EvaluableMap, GaussianSphereMap};
use coarsekit::moduli::{empirical_moduli, MappedSample};
use coarsekit::spaces::{sample_grid, QuasiNormedSpace};

fn main() -> coarsekit::error::Result<()> {
    let grid = sample_grid(&QuasiNormedSpace::euclidean(2), 3, 0.5)?;
    let map = GaussianSphereMap::default();
    let sample = MappedSample::from_map(grid, &map)?;
    println!("{} on {} points, sphere defect {:e}", map.name(), sample.len(), sample.sphere_defect());

    let profile = empirical_moduli(&sample, &[0.25, 0.5, 1.0, 2.0, 4.0])?;
    print!("{}", profile.to_csv());
    println!("monotone: {}", profile.is_monotone());
    Ok(())
}
