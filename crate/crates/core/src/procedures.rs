//! Testing procedures applied to an observed m × 2 p-value matrix.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::thresholds::adaptive_gamma;

/// Component p-values of one union hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValueRow {
    pub id: String,
    pub p1: f64,
    pub p2: f64,
}

impl PValueRow {
    pub fn pmin(&self) -> f64 {
        self.p1.min(self.p2)
    }

    pub fn pmax(&self) -> f64 {
        self.p1.max(self.p2)
    }
}

/// Validated p-value matrix: at least one row, p-values in [0, 1], unique ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValueMatrix {
    rows: Vec<PValueRow>,
}

impl PValueMatrix {
    pub fn new(rows: Vec<PValueRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Matrix("no rows".into()));
        }
        let mut seen = HashSet::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            for (name, p) in [("p1", row.p1), ("p2", row.p2)] {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::Matrix(format!(
                        "row {} ({}): {name} = {p} is outside [0, 1]",
                        i + 1,
                        row.id
                    )));
                }
            }
            if !seen.insert(row.id.as_str()) {
                return Err(Error::Matrix(format!("duplicate id `{}`", row.id)));
            }
        }
        Ok(Self { rows })
    }

    /// Builds a matrix with ids `h1, h2, …`.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .enumerate()
                .map(|(i, &(p1, p2))| PValueRow {
                    id: format!("h{}", i + 1),
                    p1,
                    p2,
                })
                .collect(),
        )
    }

    pub fn rows(&self) -> &[PValueRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn minima(&self) -> Vec<f64> {
        self.rows.iter().map(PValueRow::pmin).collect()
    }

    pub fn maxima(&self) -> Vec<f64> {
        self.rows.iter().map(PValueRow::pmax).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProcedureKind {
    ScreenMin,
    Adaptive,
    Bonferroni,
    Holm,
}

impl fmt::Display for ProcedureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProcedureKind::ScreenMin => "screenmin",
            ProcedureKind::Adaptive => "adaptive",
            ProcedureKind::Bonferroni => "bonferroni",
            ProcedureKind::Holm => "holm",
        })
    }
}

/// Which p-value Procedure 1's adjusted p-value multiplies by |S|.
///
/// `Max` is the reading consistent with the α/|S| testing rule; `Min`
/// reproduces the displayed formula literally and exists only for
/// compatibility checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum AdjustBasis {
    #[default]
    Max,
    Min,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowOutcome {
    pub id: String,
    pub p1: f64,
    pub p2: f64,
    pub pmin: f64,
    pub pmax: f64,
    pub selected: bool,
    pub adjusted_p: f64,
    pub rejected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcedureResult {
    pub method: ProcedureKind,
    pub alpha: f64,
    /// Absent for one-stage procedures.
    pub selection_threshold: Option<f64>,
    /// Absent when nothing was selected, and for Holm.
    pub testing_threshold: Option<f64>,
    pub selected_count: usize,
    pub rows: Vec<RowOutcome>,
}

impl ProcedureResult {
    pub fn rejection_count(&self) -> usize {
        self.rows.iter().filter(|r| r.rejected).count()
    }

    pub fn rejected_indices(&self) -> Vec<usize> {
        self.rows
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.rejected.then_some(i))
            .collect()
    }
}

fn outcome(row: &PValueRow, selected: bool, adjusted_p: f64, alpha: f64) -> RowOutcome {
    RowOutcome {
        id: row.id.clone(),
        p1: row.p1,
        p2: row.p2,
        pmin: row.pmin(),
        pmax: row.pmax(),
        selected,
        adjusted_p,
        rejected: adjusted_p <= alpha,
    }
}

/// Select rows with min ≤ `c` and test the selected max p-values at α/|S|.
pub fn screenmin(pmat: &PValueMatrix, alpha: f64, c: f64) -> ProcedureResult {
    screenmin_with_basis(pmat, alpha, c, AdjustBasis::Max)
}

pub fn screenmin_with_basis(
    pmat: &PValueMatrix,
    alpha: f64,
    c: f64,
    basis: AdjustBasis,
) -> ProcedureResult {
    let selected: Vec<bool> = pmat.rows.iter().map(|r| r.pmin() <= c).collect();
    let size = selected.iter().filter(|&&s| s).count();
    let rows = pmat
        .rows
        .iter()
        .zip(&selected)
        .map(|(row, &sel)| {
            let adjusted = if sel {
                let p = match basis {
                    AdjustBasis::Max => row.pmax(),
                    AdjustBasis::Min => row.pmin(),
                };
                (size as f64 * p).min(1.0)
            } else {
                1.0
            };
            outcome(row, sel, adjusted, alpha)
        })
        .collect();
    ProcedureResult {
        method: ProcedureKind::ScreenMin,
        alpha,
        selection_threshold: Some(c),
        testing_threshold: (size > 0).then(|| alpha / size as f64),
        selected_count: size,
        rows,
    }
}

/// One threshold γ for both selection and testing.
///
/// Adjusted p-values are `min(k·pmax, 1)` on the selected rows, with
/// γ = α/k, so that rejection coincides with pmax ≤ γ.
pub fn adaptive_screenmin(pmat: &PValueMatrix, alpha: f64) -> ProcedureResult {
    let threshold = adaptive_gamma(&pmat.minima(), alpha);
    let gamma = threshold.gamma;
    let scale = threshold.divisor as f64;
    let rows: Vec<RowOutcome> = pmat
        .rows
        .iter()
        .map(|row| {
            let sel = row.pmin() <= gamma;
            let adjusted = if sel {
                (scale * row.pmax()).min(1.0)
            } else {
                1.0
            };
            outcome(row, sel, adjusted, alpha)
        })
        .collect();
    ProcedureResult {
        method: ProcedureKind::Adaptive,
        alpha,
        selection_threshold: Some(gamma),
        testing_threshold: Some(gamma),
        selected_count: threshold.selected,
        rows,
    }
}

/// One-stage Bonferroni on the max p-values.
pub fn bonferroni_max(pmat: &PValueMatrix, alpha: f64) -> ProcedureResult {
    let m = pmat.len();
    let rows = pmat
        .rows
        .iter()
        .map(|row| outcome(row, true, (m as f64 * row.pmax()).min(1.0), alpha))
        .collect();
    ProcedureResult {
        method: ProcedureKind::Bonferroni,
        alpha,
        selection_threshold: None,
        testing_threshold: Some(alpha / m as f64),
        selected_count: m,
        rows,
    }
}

/// Holm step-down on the max p-values.
pub fn holm_max(pmat: &PValueMatrix, alpha: f64) -> ProcedureResult {
    let m = pmat.len();
    let maxima = pmat.maxima();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| maxima[a].total_cmp(&maxima[b]));
    let mut adjusted = vec![1.0; m];
    let mut running = 0.0_f64;
    for (rank, &i) in order.iter().enumerate() {
        let step = ((m - rank) as f64 * maxima[i]).min(1.0);
        running = running.max(step);
        adjusted[i] = running;
    }
    let rows = pmat
        .rows
        .iter()
        .zip(&adjusted)
        .map(|(row, &adj)| outcome(row, true, adj, alpha))
        .collect();
    ProcedureResult {
        method: ProcedureKind::Holm,
        alpha,
        selection_threshold: None,
        testing_threshold: None,
        selected_count: m,
        rows,
    }
}
