//! Invariant audits, a derivative-free oracle for single steps, and
//! refinement studies.

mod audit;
mod convergence;
mod oracle;

pub use audit::{
    audit, AuditReport, InvariantCheck, Status, BOUND_SLACK, DELTA2_SLACK, DELTA_SLACK, DISSIPATION_SLACK, EL_FACTOR,
    INVARIANT_NAMES,
};
pub use convergence::{convergence_study, fit_slope, Axis, ConvergenceResult, LevelError, Scenario};
pub use oracle::{brute_force_detailed, brute_force_step, OracleResult, ORACLE_MAX_K, ORACLE_STARTS};
