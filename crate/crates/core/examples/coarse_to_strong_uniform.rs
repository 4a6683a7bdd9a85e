//! The coarse-to-strong-uniform pipeline on a line sample.

use coarsekit::constructions::{pipeline_coarse_to_strong_uniform, PipelineConfig};
use coarsekit::maps::{ConstantMap, EvaluableMap, GaussianSphereMap};
use coarsekit::spaces::{sample_grid, QuasiNormedSpace};

fn main() -> coarsekit::error::Result<()> {
    let sample = sample_grid(&QuasiNormedSpace::euclidean(1), 5, 1.0)?;
    let config = PipelineConfig::default();
    let maps: [&dyn EvaluableMap; 2] = [&GaussianSphereMap::default(), &ConstantMap];
    for map in maps {
        let report = pipeline_coarse_to_strong_uniform(&sample, map, &config)?;
        println!("{}: {:?}", report.map, report.outcome);
        for stage in &report.stages {
            println!("  {:<26} {:?}", stage.stage, stage.outcome);
        }
        if let Some(stage) = &report.halted_at {
            println!("  halted at {stage}");
        }
    }
    Ok(())
}
