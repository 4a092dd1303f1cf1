//! Two-sample t-tests between reporting groups and the race-diversity index.

mod compare;
mod diversity;
pub mod special;
mod welch;

pub use compare::{compare_groups, Comparison, ComparisonRow, TestLevel};
pub use diversity::race_diversity;
pub use welch::{t_test, welch_t, TTestResult, TTestVariant};
