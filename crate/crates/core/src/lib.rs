//! Two-stage screen-then-test procedures for union hypotheses
//! H_i = H_i1 ∪ H_i2, such as the hypothesis that a variable mediates an
//! exposure–outcome effect.
//!
//! ScreenMin selects the hypotheses whose smaller component p-value is at
//! most a threshold `c` and tests the larger one at α/|S|. The crate covers
//! the procedure itself ([`procedures`]), its exact and plug-in error and
//! power ([`error_power`]), the choice of `c` ([`thresholds`]) and a seeded
//! Monte Carlo harness ([`simulate`]).

pub mod convolution;
pub mod dist;
pub mod error;
pub mod error_power;
pub mod procedures;
pub mod screen;
pub mod simulate;
pub mod thresholds;

pub use dist::{alt_cdf, alt_pdf, std_normal_cdf, std_normal_quantile, AlternativeLaw};
pub use error::{Error, Result};
pub use error_power::{
    bonferroni_power, conditional_power, fwer_approx, fwer_exact, power_approx, power_exact,
    ErrorPowerReport,
};
pub use procedures::{
    adaptive_screenmin, bonferroni_max, holm_max, screenmin, AdjustBasis, PValueMatrix, PValueRow,
    ProcedureKind, ProcedureResult, RowOutcome,
};
pub use screen::{
    expected_selected, joint_cdf_max_min, p0, p00, selected_count_pmf, selection_prob, PairMixture,
    PairType, TypeCounts,
};
pub use simulate::{
    generate_pvalues, run_grid, run_study, MethodSummary, PairState, SimulationConfig,
    SimulationSummary, StudyMethod,
};
pub use thresholds::{
    adaptive_gamma, cbar, continuous_adaptive, default_threshold, oracle_threshold,
    AdaptiveThreshold, ContinuousThreshold, ThresholdChoice, ThresholdDiagnostics, ThresholdKind,
};
