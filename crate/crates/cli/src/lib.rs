//! Batch experiments over the clustering simulator: plan files, parallel
//! seed sweeps, aggregate reports and plot-ready data.

pub mod ess_table;
pub mod plan;
pub mod plots;
pub mod report;

pub use plan::{load_plan, parse_plan, ExperimentPlan, PlanError};
pub use plots::emit_plots;
pub use report::{execute, AggregateReport};
