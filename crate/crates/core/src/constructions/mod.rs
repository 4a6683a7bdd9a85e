//! Desk-scale runs of the two embedding constructions: from a coarse map to a
//! strong uniform embedding (chaining, snowflaking, window averaging,
//! assembly), and from rescaled sphere-valued maps to a glued coarse
//! embedding with explicit constants.

mod gluing;
mod pipeline;
mod uniform;

pub use gluing::{build_scale_family, dg_glue, GlueReport, Glued, ScaleEntry, ScaleFamily, StepFunctionEnvelope};
pub use pipeline::{pipeline_coarse_to_strong_uniform, PipelineConfig, PipelineReport, StageReport, FIDELITY_NOTE};
pub use uniform::{
    averaged_kernel_quality, chain_bound_check, snowflake_map, strong_uniform_assembly, translation_average,
    translation_average_detailed, Assembly, AssemblyReport, ChainBoundReport, QualityReport, SnowflakedMap,
    WindowAverage, WorstCase,
};
