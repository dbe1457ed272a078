//! Data-dependent constraint functions `C(f; x_{1:n}) ≥ 0`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::policy::{Context, PolicyMatrix};

/// Degree to which a policy's labeling of the realized contexts violates
/// a global constraint. Always nonnegative.
pub trait ConstraintFunction: Send + Sync {
    fn violation(&self, m: &PolicyMatrix, contexts: &[Context]) -> Result<f64>;
}

/// Symmetric nonnegative weights between contexts.
#[derive(Clone, Debug, PartialEq)]
pub enum PairWeights {
    /// `w ≡ 1`.
    Uniform,
    /// `w(a, b) = matrix[a][b]`, indexed by context id.
    Matrix(Vec<Vec<f64>>),
}

impl PairWeights {
    pub fn matrix(m: Vec<Vec<f64>>) -> Result<Self> {
        let size = m.len();
        for (a, row) in m.iter().enumerate() {
            if row.len() != size {
                return domain("pair weight matrix must be square");
            }
            for (b, w) in row.iter().enumerate() {
                if !(*w >= 0.0) || !w.is_finite() {
                    return domain(format!("pair weight w({a},{b}) = {w} must be finite and nonnegative"));
                }
                if *w != m[b][a] {
                    return domain(format!("pair weights not symmetric at ({a},{b})"));
                }
            }
        }
        Ok(PairWeights::Matrix(m))
    }

    pub fn weight(&self, a: Context, b: Context) -> Result<f64> {
        match self {
            PairWeights::Uniform => Ok(1.0),
            PairWeights::Matrix(m) => {
                let w = m
                    .get(a.0)
                    .and_then(|row| row.get(b.0))
                    .copied()
                    .ok_or_else(|| Error::Domain(format!("no pair weight for contexts ({}, {})", a.0, b.0)))?;
                if w < 0.0 {
                    return domain(format!("negative pair weight {w}"));
                }
                Ok(w)
            }
        }
    }
}

/// `Σ_{s,r ∈ [n]} w(x_s, x_r)·1{f(x_s) ≠ f(x_r)}` over ordered pairs.
pub fn pairwise_disagreement_cost(
    m: &PolicyMatrix,
    contexts: &[Context],
    weights: &PairWeights,
) -> Result<f64> {
    if m.n() != contexts.len() {
        return domain("policy matrix and context sequence lengths differ");
    }
    let labels = m.actions();
    let mut total = 0.0;
    for s in 0..labels.len() {
        for r in 0..labels.len() {
            if labels[s] != labels[r] {
                total += weights.weight(contexts[s], contexts[r])?;
            }
        }
    }
    Ok(total)
}

/// `Σ_ℓ Σ_j [k − Σ_{s ∈ T_ℓ} M_s(j)]_+` for a partition `{T_ℓ}` of the rounds
/// (0-based indices).
pub fn coverage_cost(m: &PolicyMatrix, partition: &[Vec<usize>], k: usize) -> Result<f64> {
    let n = m.n();
    let mut seen = vec![false; n];
    for block in partition {
        for &s in block {
            if s >= n {
                return domain(format!("partition index {s} outside 0..{n}"));
            }
            if std::mem::replace(&mut seen[s], true) {
                return domain(format!("round {s} appears in two partition blocks"));
            }
        }
    }
    if let Some(missing) = seen.iter().position(|v| !v) {
        return domain(format!("partition misses round {missing}"));
    }
    let mut total = 0.0;
    let mut counts = vec![0usize; m.d()];
    for block in partition {
        counts.iter_mut().for_each(|c| *c = 0);
        for &s in block {
            counts[m.actions()[s]] += 1;
        }
        total += counts.iter().map(|c| k.saturating_sub(*c) as f64).sum::<f64>();
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairwiseDisagreement {
    weights: PairWeights,
}

impl PairwiseDisagreement {
    pub fn new(weights: PairWeights) -> Self {
        Self { weights }
    }

    pub fn uniform() -> Self {
        Self { weights: PairWeights::Uniform }
    }

    pub fn weights(&self) -> &PairWeights {
        &self.weights
    }
}

impl ConstraintFunction for PairwiseDisagreement {
    fn violation(&self, m: &PolicyMatrix, contexts: &[Context]) -> Result<f64> {
        pairwise_disagreement_cost(m, contexts, &self.weights)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Coverage {
    pub partition: Vec<Vec<usize>>,
    pub k: usize,
}

impl ConstraintFunction for Coverage {
    fn violation(&self, m: &PolicyMatrix, _contexts: &[Context]) -> Result<f64> {
        coverage_cost(m, &self.partition, self.k)
    }
}

/// JSON form of a constraint. Partition entries are 1-based round indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ConstraintDoc {
    Pairwise { weights: WeightsDoc },
    Coverage { partition: Vec<Vec<usize>>, k: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightsDoc {
    Keyword(String),
    Matrix(Vec<Vec<f64>>),
}

impl ConstraintDoc {
    pub fn build(&self) -> Result<Arc<dyn ConstraintFunction>> {
        match self {
            ConstraintDoc::Pairwise { weights: WeightsDoc::Keyword(k) } if k == "uniform" => {
                Ok(Arc::new(PairwiseDisagreement::uniform()))
            }
            ConstraintDoc::Pairwise { weights: WeightsDoc::Keyword(k) } => {
                Err(Error::Config(format!("unknown pair weights `{k}`")))
            }
            ConstraintDoc::Pairwise { weights: WeightsDoc::Matrix(m) } => {
                Ok(Arc::new(PairwiseDisagreement::new(PairWeights::matrix(m.clone())?)))
            }
            ConstraintDoc::Coverage { partition, k } => {
                let partition = partition
                    .iter()
                    .map(|block| {
                        block
                            .iter()
                            .map(|&s| {
                                s.checked_sub(1).ok_or_else(|| {
                                    Error::Config("partition indices are 1-based".into())
                                })
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Arc::new(Coverage { partition, k: *k }))
            }
        }
    }
}
