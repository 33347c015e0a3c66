//! Sweep harness: runs every check over a grid of `(n, k)`, fits the
//! constants of the asymptotic bounds and renders reports.

pub mod config;
pub mod coupling;
pub mod lemma;
pub mod report;
pub mod sweep;

pub use config::{KPolicy, OutputFormat, SweepConfig};
pub use coupling::{center_band_deviation, coupling_check, CouplingSummary};
pub use report::{emit_report, exit, exit_code};
pub use sweep::{
    run_sweep, sweep_points, ConstantsReport, HalfFit, SweepPoint, VerificationRecord,
};
