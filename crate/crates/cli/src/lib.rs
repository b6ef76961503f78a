//! Scenario runner, seeded verification suites and report writer for `gte`.

pub mod check;
pub mod oracle;
pub mod report;
pub mod scenario;
pub mod suites;

pub use check::Check;
pub use report::Report;
pub use scenario::{run_scenario, Scenario};
