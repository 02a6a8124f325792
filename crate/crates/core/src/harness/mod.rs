//! Besov-calibrated targets, rate sweeps and machine-readable reports.
//!
//! All randomness flows from [`TargetSpec::seed`], and reports are
//! byte-identical across runs with the same inputs.

mod sweep;
mod target;

pub use sweep::{
    coefficient_sum_factor, emit, fit_line, fit_loglog, nterm_sweep, nterm_sweep_on, rate_sweep,
    rate_sweep_on, target_seminorm, validate_report_json, BudgetCheck, LinearFit, RateReport,
    ReportFormat, FIT_EXCLUDED, RATE_REPORT_SCHEMA,
};
pub use target::{
    format_p, generate_target, parse_p, ReferenceSeminorms, Target, TargetKind, TargetSpec,
};
