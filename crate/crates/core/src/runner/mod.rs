//! Scenario orchestration: configuration, the scenario registry, post-processing
//! and reproducible outputs.

pub mod analysis;
pub mod config;
pub mod constants;
pub mod output;
pub mod scenarios;

use std::path::Path;

pub use config::{parse_config, parse_reals, parse_signs, ScenarioConfig};
pub use constants::{all_pass, verify_constants, ConstantCheck};
pub use output::{emit_outputs, Manifest, RunRecord, Series};
pub use scenarios::{scenario_by_name, scenario_names, RunContext, RunOutcome, Scenario};

use crate::error::Result;

/// Run a scenario and write its record into `out`. The returned exit code is
/// non-zero when the scenario stopped on a downstream error (recorded in the metadata).
pub fn run_and_emit(scenario: &dyn Scenario, ctx: &RunContext, out: &Path) -> Result<(RunOutcome, Manifest, i32)> {
    let outcome = scenario.run(ctx)?;
    let manifest = emit_outputs(&outcome.record, out)?;
    let code = outcome.exit_code();
    Ok((outcome, manifest, code))
}
