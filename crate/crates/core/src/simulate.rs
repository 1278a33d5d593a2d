//! Seeded generation of p-value matrices and Monte Carlo estimation of
//! FWER and power.
//!
//! Every (replication, column) pair owns a ChaCha stream keyed by the master
//! seed, so results do not depend on how replications are scheduled across
//! worker threads.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{std_normal_sf, AlternativeLaw};
use crate::error::{Error, Result};
use crate::procedures::{
    adaptive_screenmin, bonferroni_max, holm_max, screenmin, PValueMatrix, PValueRow,
    ProcedureResult,
};
use crate::screen::{PairMixture, TypeCounts};
use crate::thresholds::{default_threshold, oracle_threshold, ThresholdKind};

/// A procedure evaluated in a study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StudyMethod {
    ScreenMin(ThresholdKind),
    Bonferroni,
    Holm,
}

impl StudyMethod {
    /// Oracle, adaptive and default ScreenMin followed by Bonferroni.
    pub fn standard_set() -> Vec<StudyMethod> {
        vec![
            StudyMethod::ScreenMin(ThresholdKind::Oracle),
            StudyMethod::ScreenMin(ThresholdKind::Adaptive),
            StudyMethod::ScreenMin(ThresholdKind::Default),
            StudyMethod::Bonferroni,
        ]
    }
}

impl fmt::Display for StudyMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StudyMethod::ScreenMin(kind) => kind.fmt(f),
            StudyMethod::Bonferroni => f.write_str("bonferroni"),
            StudyMethod::Holm => f.write_str("holm"),
        }
    }
}

impl FromStr for StudyMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bonferroni" => Ok(StudyMethod::Bonferroni),
            "holm" => Ok(StudyMethod::Holm),
            other => other.parse().map(StudyMethod::ScreenMin).map_err(|_| Error::Config {
                field: "methods",
                reason: format!(
                    "unknown method `{other}` (expected oracle, adaptive, default, fixed:<c>, bonferroni or holm)"
                ),
            }),
        }
    }
}

impl Serialize for StudyMethod {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for StudyMethod {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn default_methods() -> Vec<StudyMethod> {
    StudyMethod::standard_set()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub m: usize,
    pub pi0: f64,
    pub pi1: f64,
    pub pi2: f64,
    /// Mean shift of the statistic for a false first component.
    pub snr1: f64,
    /// Mean shift of the statistic for a false second component.
    pub snr2: f64,
    /// Within-column equicorrelation of the test statistics.
    #[serde(default)]
    pub rho: f64,
    pub alpha: f64,
    pub replications: usize,
    pub seed: u64,
    #[serde(default = "default_methods")]
    pub methods: Vec<StudyMethod>,
    /// Optional sweep over pi1; each point uses pi0 = 1 - pi1 - pi2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi1_grid: Option<Vec<f64>>,
    /// Worker threads; the global rayon pool when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

fn config_err(field: &'static str, reason: impl Into<String>) -> Error {
    Error::Config {
        field,
        reason: reason.into(),
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(config_err("m", "must be at least 1"));
        }
        for (field, pi) in [("pi0", self.pi0), ("pi1", self.pi1), ("pi2", self.pi2)] {
            if !(pi.is_finite() && (0.0..=1.0).contains(&pi)) {
                return Err(config_err(field, format!("{pi} is not a probability")));
            }
        }
        let total = self.pi0 + self.pi1 + self.pi2;
        if (total - 1.0).abs() > 1e-12 {
            return Err(config_err(
                "pi0",
                format!("proportions sum to {total}, expected 1"),
            ));
        }
        for (field, snr) in [("snr1", self.snr1), ("snr2", self.snr2)] {
            if !(snr.is_finite() && snr >= 0.0) {
                return Err(config_err(
                    field,
                    format!("{snr} must be finite and nonnegative"),
                ));
            }
        }
        if !(self.rho.is_finite() && (0.0..1.0).contains(&self.rho)) {
            return Err(config_err("rho", format!("{} is outside [0, 1)", self.rho)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(config_err(
                "alpha",
                format!("{} is outside (0, 1)", self.alpha),
            ));
        }
        if self.replications == 0 {
            return Err(config_err("replications", "must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(config_err("methods", "at least one method is required"));
        }
        if let Some(grid) = &self.pi1_grid {
            if grid.is_empty() {
                return Err(config_err("pi1_grid", "must not be empty"));
            }
            for &pi1 in grid {
                if !(pi1.is_finite() && pi1 >= 0.0 && pi1 + self.pi2 <= 1.0 + 1e-12) {
                    return Err(config_err("pi1_grid", format!("{pi1} leaves no valid pi0")));
                }
            }
        }
        if self.workers == Some(0) {
            return Err(config_err("workers", "must be at least 1"));
        }
        Ok(())
    }

    /// One config per pi1 grid point, or just `self` without a grid.
    pub fn grid_points(&self) -> Vec<SimulationConfig> {
        match &self.pi1_grid {
            None => vec![self.clone()],
            Some(grid) => grid
                .iter()
                .map(|&pi1| SimulationConfig {
                    pi0: (1.0 - pi1 - self.pi2).max(0.0),
                    pi1,
                    pi1_grid: None,
                    ..self.clone()
                })
                .collect(),
        }
    }

    fn type_counts(&self) -> Result<TypeCounts> {
        Ok(self.model_mixture()?.type_counts())
    }

    /// Single-law model with `snr1` for every false component; this is what
    /// the oracle threshold is computed under, misspecified when the two
    /// SNRs differ.
    pub fn model_mixture(&self) -> Result<PairMixture> {
        PairMixture::new(
            self.m,
            self.pi0,
            self.pi1,
            self.pi2,
            AlternativeLaw::new(self.snr1)?,
        )
    }
}

/// Truth pattern of a simulated pair: whether each component null is false.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairState {
    NullNull,
    AltNull,
    NullAlt,
    AltAlt,
}

impl PairState {
    pub fn first_false(self) -> bool {
        matches!(self, PairState::AltNull | PairState::AltAlt)
    }

    pub fn second_false(self) -> bool {
        matches!(self, PairState::NullAlt | PairState::AltAlt)
    }

    /// Whether the union null H_i = H_i1 ∪ H_i2 is true.
    pub fn union_true(self) -> bool {
        self != PairState::AltAlt
    }
}

/// Row layout: both-false rows first, then the one-false rows (first half
/// with the first component false, the rest with the second), then
/// both-null rows.
pub fn pair_layout(counts: TypeCounts) -> Vec<PairState> {
    let first_half = counts.one_false.div_ceil(2);
    let mut layout = Vec::with_capacity(counts.total());
    layout.extend(std::iter::repeat_n(PairState::AltAlt, counts.both_false));
    layout.extend(std::iter::repeat_n(PairState::AltNull, first_half));
    layout.extend(std::iter::repeat_n(
        PairState::NullAlt,
        counts.one_false - first_half,
    ));
    layout.extend(std::iter::repeat_n(PairState::NullNull, counts.both_null));
    layout
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedData {
    pub matrix: PValueMatrix,
    pub states: Vec<PairState>,
}

/// RNG for one column of one replication.
pub fn column_rng(seed: u64, replication: u64, column: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication.wrapping_mul(2).wrapping_add(column));
    rng
}

/// One-sided statistics Z = √ρ·W + √(1-ρ)·ε + shift for one replication,
/// with W shared down each column.
pub fn generate_statistics(
    config: &SimulationConfig,
    replication: u64,
) -> Result<(Vec<[f64; 2]>, Vec<PairState>)> {
    let states = pair_layout(config.type_counts()?);
    let mut cols = [0u64, 1].map(|col| {
        let mut rng = column_rng(config.seed, replication, col);
        let common: f64 = if config.rho > 0.0 {
            StandardNormal.sample(&mut rng)
        } else {
            0.0
        };
        (rng, common)
    });
    let (a, b) = (config.rho.sqrt(), (1.0 - config.rho).sqrt());
    let mut stats = Vec::with_capacity(states.len());
    for s in &states {
        let mut z = [0.0; 2];
        for (j, (rng, common)) in cols.iter_mut().enumerate() {
            let eps: f64 = StandardNormal.sample(rng);
            let shift = match j {
                0 if s.first_false() => config.snr1,
                1 if s.second_false() => config.snr2,
                _ => 0.0,
            };
            z[j] = a * *common + b * eps + shift;
        }
        stats.push(z);
    }
    Ok((stats, states))
}

/// p-value matrix and ground truth for one replication.
pub fn generate_pvalues(config: &SimulationConfig, replication: u64) -> Result<SimulatedData> {
    let (stats, states) = generate_statistics(config, replication)?;
    let rows = stats
        .iter()
        .enumerate()
        .map(|(i, z)| PValueRow {
            id: format!("h{}", i + 1),
            p1: std_normal_sf(z[0]),
            p2: std_normal_sf(z[1]),
        })
        .collect();
    Ok(SimulatedData {
        matrix: PValueMatrix::new(rows)?,
        states,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: StudyMethod,
    pub replications: usize,
    /// Share of datasets with at least one true union hypothesis rejected.
    pub fwer: f64,
    pub fwer_se: f64,
    /// Mean share of false union hypotheses rejected; absent without any.
    pub power: Option<f64>,
    /// Absent with fewer than two replications.
    pub power_se: Option<f64>,
    pub fwer_events: usize,
    pub false_rejections: usize,
    pub true_rejections: usize,
    pub mean_selected: f64,
    /// Mean selection threshold across datasets, for two-stage methods.
    pub mean_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub config: SimulationConfig,
    pub methods: Vec<MethodSummary>,
}

impl SimulationSummary {
    pub fn method(&self, method: StudyMethod) -> Option<&MethodSummary> {
        self.methods.iter().find(|s| s.method == method)
    }
}

#[derive(Debug, Clone, Copy)]
struct ReplicationOutcome {
    any_false_rejection: bool,
    false_rejections: usize,
    true_rejections: usize,
    selected: usize,
    threshold: Option<f64>,
}

/// A method with any model-based threshold resolved for one configuration.
#[derive(Debug, Clone, Copy)]
enum Resolved {
    Fixed(f64),
    Adaptive,
    Bonferroni,
    Holm,
}

fn resolve(method: StudyMethod, config: &SimulationConfig) -> Result<Resolved> {
    Ok(match method {
        StudyMethod::ScreenMin(ThresholdKind::Default) => {
            Resolved::Fixed(default_threshold(config.alpha, config.m))
        }
        StudyMethod::ScreenMin(ThresholdKind::Fixed(c)) => Resolved::Fixed(c),
        StudyMethod::ScreenMin(ThresholdKind::Oracle) => {
            Resolved::Fixed(oracle_threshold(config.alpha, &config.model_mixture()?)?.value)
        }
        StudyMethod::ScreenMin(ThresholdKind::Adaptive) => Resolved::Adaptive,
        StudyMethod::Bonferroni => Resolved::Bonferroni,
        StudyMethod::Holm => Resolved::Holm,
    })
}

fn apply(method: Resolved, pmat: &PValueMatrix, alpha: f64) -> ProcedureResult {
    match method {
        Resolved::Fixed(c) => screenmin(pmat, alpha, c),
        Resolved::Adaptive => adaptive_screenmin(pmat, alpha),
        Resolved::Bonferroni => bonferroni_max(pmat, alpha),
        Resolved::Holm => holm_max(pmat, alpha),
    }
}

fn score(result: &ProcedureResult, states: &[PairState]) -> ReplicationOutcome {
    let mut false_rejections = 0;
    let mut true_rejections = 0;
    for (row, state) in result.rows.iter().zip(states) {
        if row.rejected {
            if state.union_true() {
                false_rejections += 1;
            } else {
                true_rejections += 1;
            }
        }
    }
    ReplicationOutcome {
        any_false_rejection: false_rejections > 0,
        false_rejections,
        true_rejections,
        selected: result.selected_count,
        threshold: result.selection_threshold,
    }
}

fn summarize(
    method: StudyMethod,
    outcomes: &[ReplicationOutcome],
    n_false: usize,
) -> MethodSummary {
    let r = outcomes.len();
    let rf = r as f64;
    let fwer_events = outcomes.iter().filter(|o| o.any_false_rejection).count();
    let fwer = fwer_events as f64 / rf;
    let (power, power_se) = if n_false == 0 {
        (None, None)
    } else {
        let shares: Vec<f64> = outcomes
            .iter()
            .map(|o| o.true_rejections as f64 / n_false as f64)
            .collect();
        let mean = shares.iter().sum::<f64>() / rf;
        let se = (r >= 2).then(|| {
            let var = shares.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (rf - 1.0);
            (var / rf).sqrt()
        });
        (Some(mean), se)
    };
    let thresholds: Vec<f64> = outcomes.iter().filter_map(|o| o.threshold).collect();
    MethodSummary {
        method,
        replications: r,
        fwer,
        fwer_se: (fwer * (1.0 - fwer) / rf).sqrt(),
        power,
        power_se,
        fwer_events,
        false_rejections: outcomes.iter().map(|o| o.false_rejections).sum(),
        true_rejections: outcomes.iter().map(|o| o.true_rejections).sum(),
        mean_selected: outcomes.iter().map(|o| o.selected as f64).sum::<f64>() / rf,
        mean_threshold: (thresholds.len() == r).then(|| thresholds.iter().sum::<f64>() / rf),
    }
}

/// Monte Carlo FWER and power of every configured method at the config's
/// own (pi0, pi1, pi2); any pi1 grid is ignored here, see [`run_grid`].
pub fn run_study(config: &SimulationConfig) -> Result<SimulationSummary> {
    config.validate()?;
    let config = SimulationConfig {
        pi1_grid: None,
        ..config.clone()
    };
    let resolved: Vec<Resolved> = config
        .methods
        .iter()
        .map(|&m| resolve(m, &config))
        .collect::<Result<_>>()?;
    let n_false = config.type_counts()?.both_false;

    let work = |rep: usize| -> Result<Vec<ReplicationOutcome>> {
        let data = generate_pvalues(&config, rep as u64)?;
        Ok(resolved
            .iter()
            .map(|&method| score(&apply(method, &data.matrix, config.alpha), &data.states))
            .collect())
    };
    let run = || {
        (0..config.replications)
            .into_par_iter()
            .map(work)
            .collect::<Result<Vec<_>>>()
    };
    let per_rep = match config.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| config_err("workers", e.to_string()))?
            .install(run)?,
        None => run()?,
    };

    let methods = config
        .methods
        .iter()
        .enumerate()
        .map(|(k, &method)| {
            let outcomes: Vec<ReplicationOutcome> = per_rep.iter().map(|rep| rep[k]).collect();
            summarize(method, &outcomes, n_false)
        })
        .collect();
    Ok(SimulationSummary { config, methods })
}

/// [`run_study`] at every pi1 grid point.
pub fn run_grid(config: &SimulationConfig) -> Result<Vec<SimulationSummary>> {
    config.validate()?;
    config.grid_points().iter().map(run_study).collect()
}
