//! Parallel replicate execution.
//!
//! Replicates run on the rayon pool but are folded into the summary in
//! replicate order, so a design gives bit-identical summaries for any number
//! of threads.

use eoratio_core::{run_replicate, SimulationDesign, SimulationSummary, SummaryBuilder};
use rayon::prelude::*;

use crate::error::Result;

pub fn run_design(design: &SimulationDesign) -> Result<SimulationSummary> {
    design.validate()?;
    let outcomes = (0..design.replicates)
        .into_par_iter()
        .map(|r| run_replicate(design, r))
        .collect::<Result<Vec<_>, _>>()?;
    let mut builder = SummaryBuilder::new();
    for outcome in &outcomes {
        builder.push(design.n, outcome);
    }
    Ok(builder.finish(*design))
}

pub fn run_designs(designs: &[SimulationDesign]) -> Result<Vec<SimulationSummary>> {
    designs.par_iter().map(run_design).collect()
}

/// Runs `f` on a dedicated pool of `threads` workers (0 = rayon default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    if threads == 0 {
        return f();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
        .install(f)
}
