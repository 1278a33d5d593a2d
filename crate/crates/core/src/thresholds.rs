//! Selection thresholds: the default α/m, the root c̄ of c·E|S(c)| = α,
//! the model-based oracle, and the data-adaptive γ.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_open_unit, Error, Result};
use crate::error_power::{fwer_approx, power_approx};
use crate::screen::{expected_selected, PairMixture};

/// Number of log-spaced points scanned by the oracle search.
pub const ORACLE_GRID_POINTS: usize = 2000;
/// Lower end of the oracle scan.
pub const ORACLE_GRID_MIN: f64 = 1e-10;
/// Relative bracket width at which oracle bisection stops.
const ORACLE_REL_TOL: f64 = 1e-12;

/// How a selection threshold is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdKind {
    Default,
    Fixed(f64),
    Oracle,
    Adaptive,
}

impl fmt::Display for ThresholdKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThresholdKind::Default => f.write_str("default"),
            ThresholdKind::Fixed(c) => write!(f, "fixed:{c}"),
            ThresholdKind::Oracle => f.write_str("oracle"),
            ThresholdKind::Adaptive => f.write_str("adaptive"),
        }
    }
}

impl FromStr for ThresholdKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(ThresholdKind::Default),
            "oracle" => Ok(ThresholdKind::Oracle),
            "adaptive" => Ok(ThresholdKind::Adaptive),
            _ => {
                let parse_err = |expected| Error::Parse {
                    name: "threshold",
                    input: s.to_string(),
                    expected,
                };
                let raw = s
                    .strip_prefix("fixed:")
                    .ok_or_else(|| parse_err("default | oracle | adaptive | fixed:<c>"))?;
                let c: f64 = raw
                    .trim()
                    .parse()
                    .map_err(|_| parse_err("fixed:<c> with a numeric c"))?;
                check_open_unit("c", c)?;
                Ok(ThresholdKind::Fixed(c))
            }
        }
    }
}

impl Serialize for ThresholdKind {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ThresholdKind {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Model-based quantities at a resolved threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdDiagnostics {
    /// g(c), the plug-in FWER.
    pub fwer_approx: f64,
    /// E|S(c)|.
    pub expected_selected: f64,
    /// u_c = α / E|S(c)|, the average testing threshold.
    pub testing_threshold: f64,
    /// P₁(c); absent without false union hypotheses.
    pub power_approx: Option<f64>,
    /// False when the oracle fell back to the unconstrained maximizer.
    pub constraint_binds: bool,
    /// First point where g crosses below α, when the scan found one.
    pub smallest_root: Option<f64>,
}

impl ThresholdDiagnostics {
    pub fn at(c: f64, alpha: f64, mix: &PairMixture) -> Self {
        let expected = expected_selected(c, mix);
        Self {
            fwer_approx: fwer_approx(c, alpha, mix),
            expected_selected: expected,
            testing_threshold: if expected > 0.0 {
                alpha / expected
            } else {
                f64::INFINITY
            },
            power_approx: power_approx(c, alpha, mix).ok(),
            constraint_binds: true,
            smallest_root: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdChoice {
    pub kind: ThresholdKind,
    pub value: f64,
    pub diagnostics: Option<ThresholdDiagnostics>,
}

pub fn default_threshold(alpha: f64, m: usize) -> f64 {
    alpha / m.max(1) as f64
}

/// Unique root of c·E|S(c)| = α in (0, 1), by bisection to machine
/// resolution.
pub fn cbar(alpha: f64, mix: &PairMixture) -> f64 {
    let h = |c: f64| c * expected_selected(c, mix) - alpha;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    debug_assert!(h(hi) > 0.0, "bracket: c·E|S(c)| must exceed alpha at c = 1");
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if h(lo).abs() < h(hi).abs() {
        lo
    } else {
        hi
    }
}

/// Log-spaced oracle scan grid over [`ORACLE_GRID_MIN`, α].
pub fn oracle_grid(alpha: f64) -> Vec<f64> {
    let (lo, hi) = (ORACLE_GRID_MIN.ln(), alpha.ln());
    let n = ORACLE_GRID_POINTS;
    (0..n)
        .map(|i| {
            if i + 1 == n {
                alpha
            } else {
                (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Bisection between an infeasible `lo` and a feasible `hi`; returns the
/// feasible end.
fn refine_crossing(mut lo: f64, mut hi: f64, alpha: f64, mix: &PairMixture) -> f64 {
    for _ in 0..200 {
        if hi - lo <= ORACLE_REL_TOL * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if fwer_approx(mid, alpha, mix) <= alpha {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Power-maximizing selection threshold under the plug-in FWER constraint
/// g(c) ≤ α, searched on (0, α].
///
/// g is not monotone: besides the main feasible interval that starts just
/// below c̄ it can dip under α in a band of tiny c where E|S(c)| is of
/// order one. Every descending crossing of g − α on the scan grid is
/// refined by bisection, and the crossing with the largest P₁ wins (the
/// smallest crossing when P₁ is undefined). If g ≤ α already at the bottom
/// of the grid the constraint does not bind and the feasible grid point
/// with the largest P₁ is returned with `constraint_binds = false`.
pub fn oracle_threshold(alpha: f64, mix: &PairMixture) -> Result<ThresholdChoice> {
    check_open_unit("alpha", alpha)?;
    let grid = oracle_grid(alpha);
    let fwer: Vec<f64> = grid.iter().map(|&c| fwer_approx(c, alpha, mix)).collect();
    let feasible: Vec<bool> = fwer.iter().map(|&g| g <= alpha).collect();

    let crossings: Vec<f64> = (1..grid.len())
        .filter(|&i| !feasible[i - 1] && feasible[i])
        .map(|i| refine_crossing(grid[i - 1], grid[i], alpha, mix))
        .collect();
    let smallest_root = crossings.first().copied();
    let objective = |c: f64| power_approx(c, alpha, mix).ok();

    let mut candidates: Vec<(f64, bool)> = crossings.iter().map(|&c| (c, true)).collect();
    if feasible[0] {
        let run = feasible.iter().take_while(|&&f| f).count();
        let best = grid[..run]
            .iter()
            .copied()
            .max_by(|&a, &b| {
                let (pa, pb) = (objective(a).unwrap_or(0.0), objective(b).unwrap_or(0.0));
                pa.total_cmp(&pb).then(b.total_cmp(&a))
            })
            .expect("nonempty run");
        candidates.push((best, false));
    }
    if candidates.is_empty() {
        return Err(Error::Infeasible);
    }

    let (value, binds) = if objective(candidates[0].0).is_some() {
        candidates
            .iter()
            .copied()
            .max_by(|a, b| {
                let (pa, pb) = (objective(a.0).unwrap(), objective(b.0).unwrap());
                pa.total_cmp(&pb).then(b.0.total_cmp(&a.0))
            })
            .unwrap()
    } else {
        candidates
            .iter()
            .copied()
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap()
    };

    let mut diagnostics = ThresholdDiagnostics::at(value, alpha, mix);
    diagnostics.constraint_binds = binds;
    diagnostics.smallest_root = smallest_root;
    Ok(ThresholdChoice {
        kind: ThresholdKind::Oracle,
        value,
        diagnostics: Some(diagnostics),
    })
}

/// Grid-restricted adaptive threshold γ = α/k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveThreshold {
    pub gamma: f64,
    /// k in γ = α/k.
    pub divisor: usize,
    /// |S(γ)|, never larger than `divisor`.
    pub selected: usize,
}

fn sorted_minima(minima: &[f64]) -> Vec<f64> {
    let mut sorted = minima.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
}

fn count_at_most(sorted: &[f64], c: f64) -> usize {
    sorted.partition_point(|&p| p <= c)
}

/// Largest γ ∈ {α/m, …, α/2, α} with γ·|S(γ)| ≤ α.
///
/// For γ = α/k the condition is |S(γ)| ≤ k, which is tested on integers.
pub fn adaptive_gamma(minima: &[f64], alpha: f64) -> AdaptiveThreshold {
    let sorted = sorted_minima(minima);
    let m = sorted.len().max(1);
    for k in 1..=m {
        let gamma = alpha / k as f64;
        let selected = count_at_most(&sorted, gamma);
        if selected <= k {
            return AdaptiveThreshold {
                gamma,
                divisor: k,
                selected,
            };
        }
    }
    unreachable!("k = m always satisfies |S| <= m")
}

/// Supremum of {c ≤ α : c·|S(c)| ≤ α} over the reals.
///
/// `inclusive` tells whether `value` itself is feasible. When it is not
/// (the supremum sits at the next jump of |S(c)|) the feasible set is
/// recovered with a strict comparison, see [`ContinuousThreshold::selects`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuousThreshold {
    pub value: f64,
    pub inclusive: bool,
    pub selected: usize,
}

impl ContinuousThreshold {
    pub fn selects(&self, pmin: f64) -> bool {
        if self.inclusive {
            pmin <= self.value
        } else {
            pmin < self.value
        }
    }
}

pub fn continuous_adaptive(minima: &[f64], alpha: f64) -> ContinuousThreshold {
    let sorted = sorted_minima(minima);
    // |S| = 0 on (0, p₍₁₎).
    let first = sorted.first().copied().unwrap_or(f64::INFINITY);
    let mut best = ContinuousThreshold {
        value: first,
        inclusive: false,
        selected: 0,
    };
    for i in 0..sorted.len() {
        let next = sorted.get(i + 1).copied().unwrap_or(f64::INFINITY);
        if next == sorted[i] {
            continue;
        }
        // |S(c)| = k on [p₍ₖ₎, next).
        let k = i + 1;
        let cap = alpha / k as f64;
        if sorted[i] > cap {
            continue;
        }
        let candidate = if cap < next {
            ContinuousThreshold {
                value: cap,
                inclusive: true,
                selected: k,
            }
        } else {
            ContinuousThreshold {
                value: next,
                inclusive: false,
                selected: k,
            }
        };
        if candidate.value > best.value || (candidate.value == best.value && candidate.inclusive) {
            best = candidate;
        }
    }
    if best.value > alpha {
        // Only possible with nothing selected: every minimum exceeds α.
        best = ContinuousThreshold {
            value: alpha,
            inclusive: true,
            selected: 0,
        };
    }
    best
}
