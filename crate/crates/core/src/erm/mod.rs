//! Value-of-ERM oracles.
//!
//! An oracle answers `min_{M ∈ 𝓜} Σ_t M_tᵀ Y_t` for a cost matrix `Y` over the
//! matrix representations `𝓜` of a policy class on the given contexts. Only
//! the value is returned, never the minimizer.
//!
//! Shipped oracles:
//! - [`ExactErm`]: enumeration over a finite class.
//! - [`NoisyErm`]: wraps another oracle and perturbs every answer by seeded
//!   uniform noise in `[-δ, δ]`.
//! - [`RegularizedErm`]: minimizes the linear objective plus `λ'·C(M)` for a
//!   [`ConstraintFunction`] `C`.
//! - [`BoxRelaxedErm`]: the loosest superset with nonnegative entries and
//!   column sums at most one; closed form.

mod constraint;
mod mlc;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::Rng;

use crate::error::{domain, parameter, Result};
use crate::policy::{policy_cost, Context, CostMatrix, PolicyClass};
use crate::rng::stream_rng;

pub use constraint::{
    coverage_cost, pairwise_disagreement_cost, ConstraintDoc, ConstraintFunction, Coverage,
    PairWeights, PairwiseDisagreement, WeightsDoc,
};
pub use mlc::{mlc_bruteforce, uniform_metric, MAX_MLC_LABELINGS};

/// Contract for value-of-ERM oracles.
///
/// Implementations are reentrant; the call counter increments by exactly one
/// per [`value`](ErmOracle::value) query, successful or not.
pub trait ErmOracle: Send + Sync {
    fn value(&self, contexts: &[Context], y: &CostMatrix) -> Result<f64>;

    /// Number of value queries answered so far.
    fn calls(&self) -> u64;

    /// Declared accuracy: answers lie within `delta` of the true minimum.
    fn delta(&self) -> f64 {
        0.0
    }

    /// Number of actions the oracle expects as matrix rows.
    fn d(&self) -> usize;
}

fn check_shape(d: usize, contexts: &[Context], y: &CostMatrix) -> Result<()> {
    if y.d() != d {
        return domain(format!("cost matrix has {} rows, expected d = {d}", y.d()));
    }
    if y.n() != contexts.len() {
        return domain(format!(
            "cost matrix has {} columns for {} contexts",
            y.n(),
            contexts.len()
        ));
    }
    Ok(())
}

#[inline]
fn linear_cost(class: &PolicyClass, p: usize, contexts: &[Context], y: &CostMatrix) -> f64 {
    let mut total = 0.0;
    for (t, x) in contexts.iter().enumerate() {
        total += y.get(class.action(p, *x), t);
    }
    total
}

/// Exact minimum of `Σ_t M_tᵀ Y_t` over a finite class.
pub fn exact_erm_value(class: &PolicyClass, contexts: &[Context], y: &CostMatrix) -> Result<f64> {
    if class.is_empty() {
        return domain("ERM over an empty policy class");
    }
    check_shape(class.d(), contexts, y)?;
    class.check_contexts(contexts)?;
    Ok((0..class.len())
        .map(|p| linear_cost(class, p, contexts, y))
        .fold(f64::INFINITY, f64::min))
}

/// Enumerating oracle over a finite policy class.
#[derive(Debug)]
pub struct ExactErm {
    class: Arc<PolicyClass>,
    calls: AtomicU64,
}

impl ExactErm {
    pub fn new(class: Arc<PolicyClass>) -> Self {
        Self { class, calls: AtomicU64::new(0) }
    }

    pub fn class(&self) -> &Arc<PolicyClass> {
        &self.class
    }
}

impl ErmOracle for ExactErm {
    fn value(&self, contexts: &[Context], y: &CostMatrix) -> Result<f64> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        exact_erm_value(&self.class, contexts, y)
    }

    fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    fn d(&self) -> usize {
        self.class.d()
    }
}

/// δ-approximate oracle: the wrapped value plus noise uniform in `[-δ, δ]`.
///
/// The noise for the k-th query depends only on `(seed, k)`, so a fixed
/// seed reproduces the perturbation sequence.
pub struct NoisyErm {
    inner: Arc<dyn ErmOracle>,
    delta: f64,
    seed: u64,
    calls: AtomicU64,
}

impl NoisyErm {
    pub fn new(inner: Arc<dyn ErmOracle>, delta: f64, seed: u64) -> Result<Self> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return parameter(format!("oracle noise delta {delta} must be finite and nonnegative"));
        }
        Ok(Self { inner, delta, seed, calls: AtomicU64::new(0) })
    }
}

/// Wraps `oracle` into a δ-approximate oracle with seeded noise.
pub fn approximate_erm(oracle: Arc<dyn ErmOracle>, delta: f64, seed: u64) -> Result<NoisyErm> {
    NoisyErm::new(oracle, delta, seed)
}

impl ErmOracle for NoisyErm {
    fn value(&self, contexts: &[Context], y: &CostMatrix) -> Result<f64> {
        let k = self.calls.fetch_add(1, Ordering::Relaxed);
        let exact = self.inner.value(contexts, y)?;
        if self.delta == 0.0 {
            return Ok(exact);
        }
        let mut rng = stream_rng(self.seed, k);
        Ok(exact + rng.gen_range(-self.delta..=self.delta))
    }

    fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    fn delta(&self) -> f64 {
        self.inner.delta() + self.delta
    }

    fn d(&self) -> usize {
        self.inner.d()
    }
}

/// Penalized ERM query: `min_M { Σ_t M_tᵀ Y_t + λ'·C(M) }`.
#[derive(Clone)]
pub struct RegularizedErmQuery {
    pub y: CostMatrix,
    pub lambda_scaled: f64,
    pub constraint: Arc<dyn ConstraintFunction>,
}

/// Exact minimum of the linear-plus-penalty objective over the whole class.
pub fn regularized_erm_value(
    class: &PolicyClass,
    contexts: &[Context],
    query: &RegularizedErmQuery,
) -> Result<f64> {
    regularized_value(class, contexts, &query.y, query.lambda_scaled, query.constraint.as_ref())
}

fn regularized_value(
    class: &PolicyClass,
    contexts: &[Context],
    y: &CostMatrix,
    lambda_scaled: f64,
    constraint: &dyn ConstraintFunction,
) -> Result<f64> {
    if !(lambda_scaled >= 0.0) {
        return parameter(format!("penalty coefficient {lambda_scaled} must be nonnegative"));
    }
    if lambda_scaled == 0.0 {
        return exact_erm_value(class, contexts, y);
    }
    if class.is_empty() {
        return domain("regularized ERM over an empty policy class");
    }
    check_shape(class.d(), contexts, y)?;
    let mut best = f64::INFINITY;
    for p in 0..class.len() {
        let m = class.matrix(p, contexts)?;
        let value = policy_cost(&m, y)? + lambda_scaled * constraint.violation(&m, contexts)?;
        best = best.min(value);
    }
    Ok(best)
}

/// Oracle form of [`regularized_erm_value`] with a fixed penalty.
pub struct RegularizedErm {
    class: Arc<PolicyClass>,
    constraint: Arc<dyn ConstraintFunction>,
    lambda_scaled: f64,
    calls: AtomicU64,
}

impl RegularizedErm {
    pub fn new(
        class: Arc<PolicyClass>,
        constraint: Arc<dyn ConstraintFunction>,
        lambda_scaled: f64,
    ) -> Result<Self> {
        if !(lambda_scaled >= 0.0 && lambda_scaled.is_finite()) {
            return parameter(format!("penalty coefficient {lambda_scaled} must be finite and nonnegative"));
        }
        Ok(Self { class, constraint, lambda_scaled, calls: AtomicU64::new(0) })
    }

    pub fn lambda_scaled(&self) -> f64 {
        self.lambda_scaled
    }
}

impl ErmOracle for RegularizedErm {
    fn value(&self, contexts: &[Context], y: &CostMatrix) -> Result<f64> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        regularized_value(&self.class, contexts, y, self.lambda_scaled, self.constraint.as_ref())
    }

    fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    fn d(&self) -> usize {
        self.class.d()
    }
}

/// `Σ_t min(0, min_j Y_t(j))`: ERM over all nonnegative matrices with column
/// sums at most one.
pub fn box_relaxed_erm_value(contexts: &[Context], y: &CostMatrix) -> Result<f64> {
    if y.n() != contexts.len() {
        return domain(format!("cost matrix has {} columns for {} contexts", y.n(), contexts.len()));
    }
    Ok((0..y.n())
        .map(|t| y.column(t).iter().copied().fold(0.0, f64::min))
        .sum())
}

/// Closed-form Rademacher average of the box superset:
/// `n · E max(0, max_j ε(j)) = n·(1 − 2^{-d})`.
pub fn box_rademacher(n: usize, d: usize) -> f64 {
    n as f64 * (1.0 - 0.5f64.powi(d as i32))
}

#[derive(Debug)]
pub struct BoxRelaxedErm {
    d: usize,
    calls: AtomicU64,
}

impl BoxRelaxedErm {
    pub fn new(d: usize) -> Self {
        Self { d, calls: AtomicU64::new(0) }
    }
}

impl ErmOracle for BoxRelaxedErm {
    fn value(&self, contexts: &[Context], y: &CostMatrix) -> Result<f64> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        check_shape(self.d, contexts, y)?;
        box_relaxed_erm_value(contexts, y)
    }

    fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    fn d(&self) -> usize {
        self.d
    }
}

/// `{f ∈ class : C(M_f; contexts) ≤ k}`. The result may be empty.
pub fn filter_class(
    class: &PolicyClass,
    contexts: &[Context],
    constraint: &dyn ConstraintFunction,
    k: f64,
) -> Result<PolicyClass> {
    let mut keep = Vec::new();
    for p in 0..class.len() {
        let m = class.matrix(p, contexts)?;
        if constraint.violation(&m, contexts)? <= k {
            keep.push(p);
        }
    }
    Ok(class.subclass(&keep))
}

impl std::fmt::Debug for NoisyErm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NoisyErm").field("delta", &self.delta).field("seed", &self.seed).finish()
    }
}
