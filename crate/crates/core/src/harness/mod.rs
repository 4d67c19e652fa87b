//! Grids, sweeps, reports, oracle cross-checks and limit diagrams.

pub mod grid;
pub mod limits;
pub mod oracle;
pub mod report;
pub mod testfns;
pub mod verify;

pub use grid::{generate_grid, GridSpec};
pub use limits::{limit_diagram_check, EdgeReport, LimitReport};
pub use oracle::{ad_vs_fd_report, OracleReport};
pub use report::{Mode, ResidualRecord, ResidualReport, SkippedPair, SweepParams};
pub use verify::{run_verification, Sweep};
