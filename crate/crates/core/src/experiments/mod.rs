//! End-to-end scenario runners producing verdict reports.

pub mod config;
pub mod report;
mod theorem_a;
mod theorem_b;

pub use config::{Scenario, ScenarioConfig};
pub use report::{Check, VerdictReport};
pub use theorem_a::run_theorem_a;
pub use theorem_b::{run_corollary, run_theorem_b};

use crate::error::Result;

pub fn run(cfg: &ScenarioConfig) -> Result<VerdictReport> {
    match cfg.scenario {
        Scenario::TheoremA => run_theorem_a(cfg),
        Scenario::TheoremB => run_theorem_b(cfg),
        Scenario::Corollary => run_corollary(cfg),
    }
}
