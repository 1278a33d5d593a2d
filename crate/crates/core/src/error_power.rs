//! Familywise error rate and power of ScreenMin at a fixed selection
//! threshold, both exact over the law of |S| and in the plug-in form that
//! replaces |S| by E|S|.

use serde::{Deserialize, Serialize};

use crate::dist::AlternativeLaw;
use crate::error::{Error, Result};
use crate::screen::{
    expected_selected, p0, selected_count_pmf, selected_count_pmf_for, PairMixture,
};

/// Largest m for which the exact calculators run in [`ErrorPowerReport`].
pub const EXACT_MAX_M: usize = 10_000;

/// Tail mass of the |S| pmf that [`fwer_exact`] is allowed to skip.
const PMF_TAIL: f64 = 1e-12;

/// 1 - (1 - p)^n for real n, without cancellation for tiny p.
fn at_least_one(p: f64, n: f64) -> f64 {
    -(n * (-p).ln_1p()).exp_m1()
}

/// E([1 - {1 - P0(α/|S|, c)}^|S|] I[|S| > 0]).
///
/// Upper bound on the FWER of ScreenMin at threshold `c`, attained when
/// every pair is one-false. Returns 0 when the mixture holds no true union
/// hypotheses.
pub fn fwer_exact(c: f64, alpha: f64, mix: &PairMixture) -> f64 {
    if mix.type_counts().true_nulls() == 0 {
        return 0.0;
    }
    let law = mix.law();
    let pmf = selected_count_pmf(c, mix);
    let mut mass = pmf[0];
    let mut total = 0.0;
    for (s, &prob) in pmf.iter().enumerate().skip(1) {
        if mass > 1.0 - PMF_TAIL {
            break;
        }
        mass += prob;
        if prob == 0.0 {
            continue;
        }
        let size = s as f64;
        total += prob * at_least_one(p0(alpha / size, c, law), size);
    }
    total
}

/// Plug-in FWER g(c) = 1 - {1 - P0(α/E|S(c)|, c)}^E|S(c)|.
pub fn fwer_approx(c: f64, alpha: f64, mix: &PairMixture) -> f64 {
    let expected = expected_selected(c, mix);
    if expected <= 0.0 {
        return 0.0;
    }
    let testing = (alpha / expected).min(1.0);
    at_least_one(p0(testing, c, mix.law()), expected)
}

/// P(max ≤ α/s, min ≤ c) for a both-false pair, given |S| = s.
pub fn conditional_power(s: usize, c: f64, alpha: f64, law: AlternativeLaw) -> f64 {
    if s == 0 {
        return 0.0;
    }
    let testing = alpha / s as f64;
    let f_test = law.cdf(testing);
    if c * s as f64 <= alpha {
        let f_sel = law.cdf(c);
        (2.0 * f_sel * f_test - f_sel * f_sel).max(0.0)
    } else {
        f_test * f_test
    }
}

/// Unconditional probability that a given both-false pair is rejected.
///
/// The other `m - 1` pairs contribute through the exact pmf of their
/// selected count, so |S| = 1 + |S₋ᵢ|.
pub fn power_exact(c: f64, alpha: f64, mix: &PairMixture) -> Result<f64> {
    let mut rest = mix.type_counts();
    if rest.both_false == 0 {
        return Err(Error::NoFalseHypotheses);
    }
    rest.both_false -= 1;
    let law = mix.law();
    let pmf = selected_count_pmf_for(c, rest, law);
    Ok(pmf
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(others, &p)| p * conditional_power(others + 1, c, alpha, law))
        .sum())
}

/// Plug-in power P₁(c) = P(max ≤ α/E|S(c)|, min ≤ c).
pub fn power_approx(c: f64, alpha: f64, mix: &PairMixture) -> Result<f64> {
    if mix.type_counts().both_false == 0 {
        return Err(Error::NoFalseHypotheses);
    }
    let law = mix.law();
    let expected = expected_selected(c, mix);
    let testing = if expected > 0.0 {
        (alpha / expected).min(1.0)
    } else {
        1.0
    };
    let f_test = law.cdf(testing);
    if c <= testing {
        let f_sel = law.cdf(c);
        Ok((2.0 * f_sel * f_test - f_sel * f_sel).max(0.0))
    } else {
        Ok(f_test * f_test)
    }
}

/// Power of one-stage Bonferroni on max p-values, F(α/m)².
pub fn bonferroni_power(alpha: f64, m: usize, law: AlternativeLaw) -> f64 {
    let f = law.cdf(alpha / m.max(1) as f64);
    f * f
}

/// Error and power summary at one selection threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorPowerReport {
    pub c: f64,
    pub alpha: f64,
    /// Absent when m exceeds [`EXACT_MAX_M`].
    pub fwer_exact: Option<f64>,
    /// Whether `fwer_exact` is the FWER itself rather than an upper bound.
    pub fwer_is_exact: bool,
    pub fwer_approx: f64,
    /// Absent when there are no false union hypotheses or m is too large.
    pub power_exact: Option<f64>,
    pub power_approx: Option<f64>,
}

impl ErrorPowerReport {
    pub fn evaluate(c: f64, alpha: f64, mix: &PairMixture) -> Self {
        let exact_ok = mix.m() <= EXACT_MAX_M;
        let counts = mix.type_counts();
        Self {
            c,
            alpha,
            fwer_exact: exact_ok.then(|| fwer_exact(c, alpha, mix)),
            fwer_is_exact: counts.both_null == 0 && counts.both_false == 0
                || counts.true_nulls() == 0,
            fwer_approx: fwer_approx(c, alpha, mix),
            power_exact: if exact_ok {
                power_exact(c, alpha, mix).ok()
            } else {
                None
            },
            power_approx: power_approx(c, alpha, mix).ok(),
        }
    }
}
