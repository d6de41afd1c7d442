//! Analytic sweeps, utility simulations and empirical privacy audits.

pub mod audit;
pub mod metrics;
pub mod simulation;
pub mod sweep;

pub use audit::{audit_count_pair, audit_privacy, AuditOptions, PrivacyAuditReport};
pub use metrics::{error_cdf, mean_relative_error, within_bound_fraction, ErrorHistogram};
pub use simulation::{run_simulation, SimulationConfig, SimulationReport};
pub use sweep::{table1_grid, table_row, table_sweep, write_table_csv, TableRow, TABLE_COLUMNS};
