//! Laws induced by screening a hypothesis pair on its minimum p-value.
//!
//! All formulas assume the two component p-values of a pair are
//! independent, null components are standard uniform and non-null ones
//! follow a common [`AlternativeLaw`].

use serde::{Deserialize, Serialize};

use crate::convolution::{binomial_pmf, convolve};
use crate::dist::AlternativeLaw;
use crate::error::{Error, Result};

/// Truth pattern of a pair of component hypotheses.
///
/// (0,1) and (1,0) pairs share [`PairType::OneFalse`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairType {
    BothNull,
    OneFalse,
    BothFalse,
}

impl PairType {
    /// Distribution functions of the two components.
    fn component_cdfs(self, law: AlternativeLaw, x: f64) -> (f64, f64) {
        let u = x.clamp(0.0, 1.0);
        match self {
            PairType::BothNull => (u, u),
            PairType::OneFalse => (u, law.cdf(u)),
            PairType::BothFalse => {
                let f = law.cdf(u);
                (f, f)
            }
        }
    }
}

/// Integer number of pairs of each type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeCounts {
    pub both_null: usize,
    pub one_false: usize,
    pub both_false: usize,
}

impl TypeCounts {
    pub fn total(&self) -> usize {
        self.both_null + self.one_false + self.both_false
    }

    /// Number of true union hypotheses.
    pub fn true_nulls(&self) -> usize {
        self.both_null + self.one_false
    }
}

/// Generative model for `m` hypothesis pairs: proportions of each pair type
/// plus the common non-null p-value law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairMixture {
    m: usize,
    pi0: f64,
    pi1: f64,
    pi2: f64,
    law: AlternativeLaw,
}

impl PairMixture {
    pub fn new(m: usize, pi0: f64, pi1: f64, pi2: f64, law: AlternativeLaw) -> Result<Self> {
        if m == 0 {
            return Err(Error::Mixture("m must be at least 1".into()));
        }
        for (name, pi) in [("pi0", pi0), ("pi1", pi1), ("pi2", pi2)] {
            if !(pi.is_finite() && (0.0..=1.0).contains(&pi)) {
                return Err(Error::Mixture(format!(
                    "{name} = {pi} is not a probability"
                )));
            }
        }
        let total = pi0 + pi1 + pi2;
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Mixture(format!(
                "proportions sum to {total}, expected 1"
            )));
        }
        Ok(Self {
            m,
            pi0,
            pi1,
            pi2,
            law,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn proportions(&self) -> [f64; 3] {
        [self.pi0, self.pi1, self.pi2]
    }

    pub fn law(&self) -> AlternativeLaw {
        self.law
    }

    /// Same proportions, different alternative law.
    pub fn with_law(&self, law: AlternativeLaw) -> Self {
        Self { law, ..*self }
    }

    /// Largest-remainder rounding of `(pi0 m, pi1 m, pi2 m)`.
    ///
    /// Leftover units go to the largest fractional parts; ties go to the
    /// lower pair-type index (both-null first).
    pub fn type_counts(&self) -> TypeCounts {
        let quotas = [self.pi0, self.pi1, self.pi2].map(|p| p * self.m as f64);
        let mut counts = quotas.map(|q| q.floor() as usize);
        let assigned: usize = counts.iter().sum();
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| {
            let ra = quotas[a] - quotas[a].floor();
            let rb = quotas[b] - quotas[b].floor();
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for &k in order.iter().take(self.m.saturating_sub(assigned)) {
            counts[k] += 1;
        }
        TypeCounts {
            both_null: counts[0],
            one_false: counts[1],
            both_false: counts[2],
        }
    }
}

/// P(min ≤ c) for a pair of the given type.
pub fn selection_prob(kind: PairType, c: f64, law: AlternativeLaw) -> f64 {
    let (g1, g2) = kind.component_cdfs(law, c);
    1.0 - (1.0 - g1) * (1.0 - g2)
}

/// P(max ≤ u, min ≤ c).
pub fn joint_cdf_max_min(u: f64, c: f64, kind: PairType, law: AlternativeLaw) -> f64 {
    let (g1u, g2u) = kind.component_cdfs(law, u);
    if u <= c {
        return g1u * g2u;
    }
    let (g1c, g2c) = kind.component_cdfs(law, c);
    g1c * g2c + g1c * (g2u - g2c) + g2c * (g1u - g1c)
}

/// Conditional law of the max p-value of a one-false pair given selection,
/// P(max ≤ u | min ≤ c).
pub fn p0(u: f64, c: f64, law: AlternativeLaw) -> f64 {
    if u >= 1.0 {
        return 1.0;
    }
    if u <= 0.0 {
        return 0.0;
    }
    let fc = law.cdf(c);
    let selected = fc + c - c * fc;
    let joint = if u <= c {
        u * law.cdf(u)
    } else {
        c * law.cdf(u) + u * fc - c * fc
    };
    (joint / selected).min(1.0)
}

/// Conditional law of the max p-value of a both-null pair given selection.
pub fn p00(u: f64, c: f64) -> f64 {
    if u >= 1.0 {
        return 1.0;
    }
    if u <= 0.0 {
        return 0.0;
    }
    if u <= c {
        u * u / (c * (2.0 - c))
    } else {
        (2.0 * u - c) / (2.0 - c)
    }
}

/// `p0(u, c) - p00(u, c)`: how much the one-false conditional law dominates
/// the both-null one. Nonnegative on every grid checked so far, which makes
/// the FWER bound conservative for both-null pairs.
pub fn conditional_null_gap(u: f64, c: f64, law: AlternativeLaw) -> f64 {
    p0(u, c, law) - p00(u, c)
}

/// E|S(c)| under the mixture's (real-valued) proportions.
pub fn expected_selected(c: f64, mix: &PairMixture) -> f64 {
    let law = mix.law;
    mix.m as f64
        * (mix.pi0 * selection_prob(PairType::BothNull, c, law)
            + mix.pi1 * selection_prob(PairType::OneFalse, c, law)
            + mix.pi2 * selection_prob(PairType::BothFalse, c, law))
}

/// Exact pmf of |S(c)| on 0..=m, using the rounded type counts.
pub fn selected_count_pmf(c: f64, mix: &PairMixture) -> Vec<f64> {
    selected_count_pmf_for(c, mix.type_counts(), mix.law)
}

/// Exact pmf of |S(c)| for explicit type counts.
pub fn selected_count_pmf_for(c: f64, counts: TypeCounts, law: AlternativeLaw) -> Vec<f64> {
    let parts = [
        (counts.both_null, PairType::BothNull),
        (counts.one_false, PairType::OneFalse),
        (counts.both_false, PairType::BothFalse),
    ];
    parts
        .iter()
        .map(|&(n, kind)| binomial_pmf(n, selection_prob(kind, c, law)))
        .reduce(|acc, next| convolve(&acc, &next))
        .expect("three parts")
}
