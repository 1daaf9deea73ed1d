//! Validation harness: KS statistics, numerical oracles and the suites that
//! check every module invariant.

pub mod constants;
pub mod ks;
pub mod oracle;
pub mod report;
pub mod suites;

pub use ks::ks_statistic;
pub use report::{CaseResult, ValidationReport};
pub use suites::{check_registry, run_suite, Budget, Suite};
