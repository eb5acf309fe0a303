//! Shared fixtures for the benchmarks.

use lsqkf_core::sysmodel::simulate;
use lsqkf_core::{Preset, Result};

/// Observations `y_0..y_N` of a preset driven from seed 0.
pub fn observations(preset: Preset, steps: usize) -> Result<Vec<Vec<f64>>> {
    let (model, _) = preset.model()?;
    Ok(simulate(&model, steps, 0)?.observations)
}
