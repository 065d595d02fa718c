//! Eco-driving trajectory planning and CACC simulation for a heterogeneous
//! electric-vehicle platoon on a signalized arterial.
//!
//! The library combines three pieces:
//!
//! * a distance-based dynamic-programming planner ([`dp`]) that balances
//!   energy, mobility and comfort while refusing to arrive at a red light,
//! * a PID cooperative adaptive cruise control follower simulator ([`cacc`]),
//! * a leader-reassignment strategy ([`strategy`]) that promotes a follower
//!   to a new planned leader when it would hit a red light (Condition 1) or
//!   drop below an average motor-efficiency threshold (Condition 2).
//!
//! Scenarios are described in a TOML file ([`scenario`]); runs write
//! deterministic CSV artifacts ([`output`]). Everything is pure computation:
//! no randomness, no global state.

pub mod cacc;
pub mod dp;
pub mod error;
pub mod motor_map;
pub mod output;
pub mod route;
pub mod scenario;
pub mod signal;
pub mod strategy;
pub mod trajectory;
pub mod vehicle;

pub use error::{Error, Result};

use std::path::Path;

/// Load a scenario, run the platoon pipeline and write the CSV artifacts.
pub fn run_scenario_file(
    scenario_path: &Path,
    out_dir: &Path,
    grid_overrides: &[(String, String)],
) -> Result<strategy::PlatoonResult> {
    let mut scenario = scenario::Scenario::load(scenario_path)?;
    for (key, value) in grid_overrides {
        scenario.apply_grid_override(key, value)?;
    }
    let result = strategy::run_platoon(&scenario)?;
    output::write_outputs(&result, scenario.signals.len(), out_dir)?;
    Ok(result)
}
