//! Core domain types: contexts, cost vectors, distributions over actions,
//! policy classes and the one-hot matrix representation of a policy on a
//! realized context sequence.
//!
//! Actions are 0-based everywhere in the library. File formats and display
//! are 1-based; the conversion lives only in the (de)serialization code.

use std::sync::Arc;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, parameter, Error, Result};

/// Tolerance used when validating that a vector lies on the simplex.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Largest class the `all_labelings` family will materialize.
pub const MAX_ENUMERATED_CLASS: usize = 1_000_000;

/// Index into a finite context universe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Context(pub usize);

impl Context {
    pub fn id(self) -> usize {
        self.0
    }
}

/// The finite set of contexts, optionally carrying a feature vector per id.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextUniverse {
    size: usize,
    features: Option<Vec<Vec<f64>>>,
}

impl ContextUniverse {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return domain("context universe must be nonempty");
        }
        Ok(Self { size, features: None })
    }

    pub fn with_features(features: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = features.first() else {
            return domain("context universe must be nonempty");
        };
        let dim = first.len();
        if features.iter().any(|f| f.len() != dim) {
            return domain("feature vectors must share one length");
        }
        if features.iter().flatten().any(|v| !v.is_finite()) {
            return domain("feature vectors must be finite");
        }
        Ok(Self { size: features.len(), features: Some(features) })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn contains(&self, x: Context) -> bool {
        x.0 < self.size
    }

    pub fn features(&self, x: Context) -> Option<&[f64]> {
        self.features.as_ref().and_then(|f| f.get(x.0)).map(Vec::as_slice)
    }

    pub fn check(&self, x: Context) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            domain(format!("context {} outside universe of size {}", x.0, self.size))
        }
    }

    pub fn contexts(&self) -> impl Iterator<Item = Context> {
        (0..self.size).map(Context)
    }
}

/// Categorical distribution over context ids (the i.i.d. context law).
#[derive(Clone, Debug)]
pub struct ContextDistribution {
    probs: Vec<f64>,
    sampler: WeightedIndex<f64>,
}

impl ContextDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return domain("context distribution must be nonempty");
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return domain("context probabilities must be finite and nonnegative");
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return domain(format!("context probabilities sum to {total}, expected 1"));
        }
        let sampler = WeightedIndex::new(&probs)
            .map_err(|e| Error::Domain(format!("context distribution: {e}")))?;
        Ok(Self { probs, sampler })
    }

    pub fn uniform(size: usize) -> Result<Self> {
        if size == 0 {
            return domain("context distribution must be nonempty");
        }
        Self::new(vec![1.0 / size as f64; size])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn size(&self) -> usize {
        self.probs.len()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Context {
        Context(self.sampler.sample(rng))
    }

    pub fn sample_n<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Context> {
        (0..n).map(|_| self.sample(rng)).collect()
    }
}

/// A cost assignment `c ∈ [0,1]^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostVector(Vec<f64>);

impl CostVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return domain("cost vector must have at least one action");
        }
        if let Some(bad) = entries.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return domain(format!("cost {bad} outside [0, 1]"));
        }
        Ok(Self(entries))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, j: usize) -> f64 {
        self.0[j]
    }

    pub fn dot(&self, q: &ActionDistribution) -> f64 {
        self.0.iter().zip(q.probs()).map(|(c, p)| c * p).sum()
    }
}

/// Inverse-propensity estimate of a cost vector: at most one nonzero
/// coordinate, stored sparsely.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatedCostVector {
    dim: usize,
    index: usize,
    value: f64,
}

impl EstimatedCostVector {
    pub fn zero(dim: usize) -> Self {
        Self { dim, index: 0, value: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The coordinate that may be nonzero and its value.
    pub fn support(&self) -> (usize, f64) {
        (self.index, self.value)
    }

    pub fn get(&self, j: usize) -> f64 {
        if j == self.index {
            self.value
        } else {
            0.0
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        if self.value != 0.0 {
            v[self.index] = self.value;
        }
        v
    }

    /// `scale · c̃` as a dense vector.
    pub fn scaled(&self, scale: f64) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        if self.value != 0.0 {
            v[self.index] = scale * self.value;
        }
        v
    }
}

/// A distribution over the `d` actions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionDistribution(Vec<f64>);

impl ActionDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return domain("distribution over zero actions");
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return domain(format!("invalid probabilities {probs:?}"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return domain(format!("probabilities sum to {total}, expected 1"));
        }
        Ok(Self(probs))
    }

    pub fn uniform(d: usize) -> Self {
        Self(vec![1.0 / d as f64; d])
    }

    pub fn point_mass(d: usize, j: usize) -> Self {
        let mut probs = vec![0.0; d];
        probs[j] = 1.0;
        Self(probs)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, j: usize) -> f64 {
        self.0[j]
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Inverse-CDF draw from a single uniform variate.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        self.quantile(u)
    }

    pub fn quantile(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (j, p) in self.0.iter().enumerate() {
            acc += p;
            if u < acc {
                return j;
            }
        }
        // u landed in the rounding gap at the top; pick the last action with mass.
        self.0.iter().rposition(|p| *p > 0.0).unwrap_or(self.0.len() - 1)
    }
}

/// A deterministic policy `X → [d]`.
#[derive(Clone, Debug, PartialEq)]
pub enum Policy {
    /// Explicit action per context id.
    Table(Vec<usize>),
    /// `argmax_j ⟨w_j, features(x)⟩`, ties broken toward the lowest action.
    ArgmaxLinear(Vec<Vec<f64>>),
}

impl Policy {
    pub fn constant(universe: usize, action: usize) -> Self {
        Policy::Table(vec![action; universe])
    }

    pub fn action(&self, universe: &ContextUniverse, x: Context) -> Result<usize> {
        universe.check(x)?;
        match self {
            Policy::Table(actions) => actions.get(x.0).copied().ok_or_else(|| {
                Error::Domain(format!("policy table has no entry for context {}", x.0))
            }),
            Policy::ArgmaxLinear(weights) => {
                let feats = universe.features(x).ok_or_else(|| {
                    Error::Domain("argmax-linear policy needs context features".into())
                })?;
                let mut best = 0;
                let mut best_score = f64::NEG_INFINITY;
                for (j, w) in weights.iter().enumerate() {
                    if w.len() != feats.len() {
                        return domain("weight and feature dimensions differ");
                    }
                    let score: f64 = w.iter().zip(feats).map(|(a, b)| a * b).sum();
                    if score > best_score {
                        best = j;
                        best_score = score;
                    }
                }
                Ok(best)
            }
        }
    }
}

/// A finite, ordered class of policies sharing `d` and the context universe.
///
/// The action of every policy on every context is tabulated at construction,
/// so oracle queries are plain lookups.
#[derive(Clone, Debug)]
pub struct PolicyClass {
    d: usize,
    universe: Arc<ContextUniverse>,
    policies: Vec<Policy>,
    table: Vec<usize>,
}

impl PolicyClass {
    pub fn new(d: usize, universe: Arc<ContextUniverse>, policies: Vec<Policy>) -> Result<Self> {
        if policies.is_empty() {
            return domain("policy class must be nonempty");
        }
        Self::build(d, universe, policies)
    }

    fn build(d: usize, universe: Arc<ContextUniverse>, policies: Vec<Policy>) -> Result<Self> {
        if d == 0 {
            return parameter("d must be at least 1");
        }
        let mut table = Vec::with_capacity(policies.len() * universe.size());
        for policy in &policies {
            if let Policy::Table(actions) = policy {
                if actions.len() != universe.size() {
                    return domain(format!(
                        "policy table has {} entries for a universe of {}",
                        actions.len(),
                        universe.size()
                    ));
                }
            }
            if let Policy::ArgmaxLinear(w) = policy {
                if w.len() != d {
                    return domain(format!("argmax policy has {} weight vectors, d = {d}", w.len()));
                }
            }
            for x in universe.contexts() {
                let a = policy.action(&universe, x)?;
                if a >= d {
                    return domain(format!("action {a} out of range for d = {d}"));
                }
                table.push(a);
            }
        }
        Ok(Self { d, universe, policies, table })
    }

    /// Every map from the universe to `[d]`, in lexicographic order with the
    /// first context varying slowest.
    pub fn all_labelings(d: usize, universe: Arc<ContextUniverse>) -> Result<Self> {
        let size = universe.size();
        let count = (d as f64).powi(size as i32);
        if count > MAX_ENUMERATED_CLASS as f64 {
            return Err(Error::Capacity(format!(
                "all_labelings would create {d}^{size} policies (limit {MAX_ENUMERATED_CLASS})"
            )));
        }
        let count = d.pow(size as u32);
        let policies = (0..count)
            .map(|mut code| {
                let mut actions = vec![0; size];
                for slot in actions.iter_mut().rev() {
                    *slot = code % d;
                    code /= d;
                }
                Policy::Table(actions)
            })
            .collect();
        Self::new(d, universe, policies)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn universe(&self) -> &Arc<ContextUniverse> {
        &self.universe
    }

    pub fn policies(&self) -> &[Policy] {
        &self.policies
    }

    pub fn len(&self) -> usize {
        self.policies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.policies.is_empty()
    }

    /// Tabulated action of policy `p` on `x`. Panics if either index is out of range.
    #[inline]
    pub fn action(&self, p: usize, x: Context) -> usize {
        self.table[p * self.universe.size() + x.0]
    }

    pub fn check_contexts(&self, contexts: &[Context]) -> Result<()> {
        contexts.iter().try_for_each(|x| self.universe.check(*x))
    }

    pub fn matrix(&self, p: usize, contexts: &[Context]) -> Result<PolicyMatrix> {
        self.check_contexts(contexts)?;
        Ok(PolicyMatrix {
            d: self.d,
            actions: contexts.iter().map(|x| self.action(p, *x)).collect(),
        })
    }

    /// Subclass keeping the listed policies in order. May be empty.
    pub fn subclass(&self, keep: &[usize]) -> Self {
        let size = self.universe.size();
        let mut policies = Vec::with_capacity(keep.len());
        let mut table = Vec::with_capacity(keep.len() * size);
        for &p in keep {
            policies.push(self.policies[p].clone());
            table.extend_from_slice(&self.table[p * size..(p + 1) * size]);
        }
        Self { d: self.d, universe: Arc::clone(&self.universe), policies, table }
    }

    pub fn from_json_str(doc: &str) -> Result<Self> {
        let doc: PolicyClassDoc = serde_json::from_str(doc)?;
        doc.build(None)
    }
}

/// JSON description of a policy class. Actions are 1-based.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PolicyClassDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub universe: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policies: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<Vec<Vec<f64>>>>,
}

impl PolicyClassDoc {
    /// Builds the class, taking the universe from `universe` when the document
    /// does not pin one (argmax-linear classes always need it for features).
    pub fn build(&self, universe: Option<Arc<ContextUniverse>>) -> Result<PolicyClass> {
        let resolve = |size_hint: Option<usize>| -> Result<Arc<ContextUniverse>> {
            match (&universe, self.universe.or(size_hint)) {
                (Some(u), Some(size)) if u.size() != size => Err(Error::Config(format!(
                    "policy class declares a universe of {size}, context distribution has {}",
                    u.size()
                ))),
                (Some(u), _) => Ok(Arc::clone(u)),
                (None, Some(size)) => Ok(Arc::new(ContextUniverse::new(size)?)),
                (None, None) => Err(Error::Config("policy class needs a universe size".into())),
            }
        };
        match self.family.as_deref() {
            None => {
                let rows = self
                    .policies
                    .as_ref()
                    .ok_or_else(|| Error::Config("policy class needs `policies` or `family`".into()))?;
                let d = self.d.ok_or_else(|| Error::Config("policy class needs `d`".into()))?;
                let universe = resolve(rows.first().map(Vec::len))?;
                let policies = rows
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|&a| {
                                if (1..=d).contains(&a) {
                                    Ok(a - 1)
                                } else {
                                    Err(Error::Config(format!("action {a} outside 1..={d}")))
                                }
                            })
                            .collect::<Result<Vec<_>>>()
                            .map(Policy::Table)
                    })
                    .collect::<Result<Vec<_>>>()?;
                PolicyClass::new(d, universe, policies)
            }
            Some("all_labelings") => {
                let d = self.d.ok_or_else(|| Error::Config("all_labelings needs `d`".into()))?;
                PolicyClass::all_labelings(d, resolve(None)?)
            }
            Some("argmax_linear") => {
                let weights = self
                    .weights
                    .as_ref()
                    .ok_or_else(|| Error::Config("argmax_linear needs `weights`".into()))?;
                let d = match (self.d, weights.first()) {
                    (Some(d), _) => d,
                    (None, Some(w)) => w.len(),
                    (None, None) => return Err(Error::Config("argmax_linear needs weights".into())),
                };
                let universe = resolve(None)?;
                let policies = weights.iter().cloned().map(Policy::ArgmaxLinear).collect();
                PolicyClass::new(d, universe, policies)
            }
            Some(other) => Err(Error::Config(format!("unknown policy family `{other}`"))),
        }
    }
}

/// The `d × n` one-hot matrix of a policy on a context sequence, stored as
/// the chosen action per column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolicyMatrix {
    d: usize,
    actions: Vec<usize>,
}

impl PolicyMatrix {
    pub fn from_actions(d: usize, actions: Vec<usize>) -> Result<Self> {
        if let Some(a) = actions.iter().find(|a| **a >= d) {
            return domain(format!("action {a} out of range for d = {d}"));
        }
        Ok(Self { d, actions })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.actions.len()
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    pub fn entry(&self, j: usize, t: usize) -> f64 {
        if self.actions[t] == j {
            1.0
        } else {
            0.0
        }
    }

    pub fn column(&self, t: usize) -> Vec<f64> {
        let mut col = vec![0.0; self.d];
        col[self.actions[t]] = 1.0;
        col
    }
}

/// A real `d × n` matrix whose columns are ERM objective vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix {
    d: usize,
    n: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn zeros(d: usize, n: usize) -> Self {
        Self { d, n, data: vec![0.0; d * n] }
    }

    pub fn from_columns(d: usize, columns: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(d * columns.len());
        for col in columns {
            if col.len() != d {
                return domain(format!("column of length {} in a matrix with d = {d}", col.len()));
            }
            data.extend_from_slice(col);
        }
        Ok(Self { d, n: columns.len(), data })
    }

    /// Builds from action-major rows: `rows[j][t]`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return domain("ragged cost matrix rows");
        }
        let mut m = Self::zeros(d, n);
        for (j, row) in rows.iter().enumerate() {
            for (t, v) in row.iter().enumerate() {
                m.set(j, t, *v);
            }
        }
        Ok(m)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, j: usize, t: usize) -> f64 {
        self.data[t * self.d + j]
    }

    #[inline]
    pub fn set(&mut self, j: usize, t: usize, v: f64) {
        self.data[t * self.d + j] = v;
    }

    #[inline]
    pub fn column(&self, t: usize) -> &[f64] {
        &self.data[t * self.d..(t + 1) * self.d]
    }

    pub fn column_mut(&mut self, t: usize) -> &mut [f64] {
        &mut self.data[t * self.d..(t + 1) * self.d]
    }

    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { d: self.d, n: self.n, data: self.data.iter().map(|v| a * v).collect() }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.d != other.d || self.n != other.n {
            return domain("matrix shapes differ");
        }
        let data = self.data.iter().zip(&other.data).map(|(x, y)| a * x + b * y).collect();
        Ok(Self { d: self.d, n: self.n, data })
    }
}

/// `M_f` for a single policy on `contexts`.
pub fn policy_to_matrix(
    policy: &Policy,
    universe: &ContextUniverse,
    d: usize,
    contexts: &[Context],
) -> Result<PolicyMatrix> {
    let actions = contexts
        .iter()
        .map(|x| policy.action(universe, *x))
        .collect::<Result<Vec<_>>>()?;
    PolicyMatrix::from_actions(d, actions)
}

/// `Σ_t M_tᵀ Y_t`.
pub fn policy_cost(m: &PolicyMatrix, y: &CostMatrix) -> Result<f64> {
    if m.d() != y.d() || m.n() != y.n() {
        return domain(format!(
            "policy matrix is {}x{}, cost matrix is {}x{}",
            m.d(),
            m.n(),
            y.d(),
            y.n()
        ));
    }
    Ok(m.actions().iter().enumerate().map(|(t, &a)| y.get(a, t)).sum())
}

/// `(1 − γd)·q* + γ·1`.
pub fn mix_with_uniform(q_star: &ActionDistribution, gamma: f64) -> Result<ActionDistribution> {
    let d = q_star.dim();
    if !(gamma > 0.0 && gamma <= 1.0 / d as f64) {
        return parameter(format!("gamma {gamma} outside (0, 1/{d}]"));
    }
    let keep = 1.0 - gamma * d as f64;
    Ok(ActionDistribution(q_star.probs().iter().map(|p| keep * p + gamma).collect()))
}

/// Raises coordinates below `gamma` to `gamma` and rescales the rest, leaving
/// large coordinates untouched when possible. Experimental alternative to
/// [`mix_with_uniform`].
pub fn mix_small_coordinates(
    q_star: &ActionDistribution,
    gamma: f64,
) -> Result<ActionDistribution> {
    let d = q_star.dim();
    if !(gamma > 0.0 && gamma <= 1.0 / d as f64) {
        return parameter(format!("gamma {gamma} outside (0, 1/{d}]"));
    }
    let mut floored = vec![false; d];
    let mut q = q_star.probs().to_vec();
    loop {
        let mut changed = false;
        for j in 0..d {
            if !floored[j] && q[j] < gamma {
                floored[j] = true;
                changed = true;
            }
        }
        let free_mass: f64 = (0..d).filter(|j| !floored[*j]).map(|j| q_star.get(j)).sum();
        let budget = 1.0 - gamma * floored.iter().filter(|f| **f).count() as f64;
        for j in 0..d {
            q[j] = if floored[j] {
                gamma
            } else if free_mass > 0.0 {
                q_star.get(j) * budget / free_mass
            } else {
                0.0
            };
        }
        if !changed {
            break;
        }
    }
    let total: f64 = q.iter().sum();
    q.iter_mut().for_each(|p| *p /= total);
    ActionDistribution::new(q)
}

/// Inverse-propensity estimate `c̃(j) = 1{chosen = j}·c/q(j)`.
pub fn ips_estimate(
    c_observed: f64,
    chosen: usize,
    q: &ActionDistribution,
) -> Result<EstimatedCostVector> {
    if chosen >= q.dim() {
        return domain(format!("action {chosen} out of range for d = {}", q.dim()));
    }
    if !(0.0..=1.0).contains(&c_observed) {
        return domain(format!("observed cost {c_observed} outside [0, 1]"));
    }
    let p = q.get(chosen);
    if p <= 0.0 {
        return domain(format!("cannot reweight action {chosen} played with probability 0"));
    }
    Ok(EstimatedCostVector { dim: q.dim(), index: chosen, value: c_observed / p })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn universe(size: usize) -> Arc<ContextUniverse> {
        Arc::new(ContextUniverse::new(size).unwrap())
    }

    #[test]
    fn constant_policy_matrix() {
        let u = universe(1);
        let m = policy_to_matrix(&Policy::constant(1, 0), &u, 2, &[Context(0); 3]).unwrap();
        for t in 0..3 {
            assert_eq!(m.column(t), vec![1.0, 0.0]);
        }
    }

    #[test]
    fn table_policy_matrix() {
        let u = universe(2);
        let m = policy_to_matrix(&Policy::Table(vec![0, 1]), &u, 2, &[Context(0), Context(1), Context(0)])
            .unwrap();
        assert_eq!(m.column(0), vec![1.0, 0.0]);
        assert_eq!(m.column(1), vec![0.0, 1.0]);
        assert_eq!(m.column(2), vec![1.0, 0.0]);
    }

    #[test]
    fn argmax_policy_matrix() {
        let u = ContextUniverse::with_features(vec![vec![0.3, 0.9]]).unwrap();
        let p = Policy::ArgmaxLinear(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let m = policy_to_matrix(&p, &u, 2, &[Context(0)]).unwrap();
        assert_eq!(m.column(0), vec![0.0, 1.0]);
    }

    #[test]
    fn context_outside_universe() {
        let u = universe(2);
        let err = policy_to_matrix(&Policy::Table(vec![0, 1]), &u, 2, &[Context(2)]);
        assert!(matches!(err, Err(Error::Domain(_))));
    }

    #[test]
    fn policy_cost_examples() {
        let y = CostMatrix::from_rows(&[vec![0.2, 0.5], vec![0.9, 0.1]]).unwrap();
        let first = PolicyMatrix::from_actions(2, vec![0, 0]).unwrap();
        let second = PolicyMatrix::from_actions(2, vec![1, 1]).unwrap();
        assert!((policy_cost(&first, &y).unwrap() - 0.7).abs() < 1e-15);
        assert!((policy_cost(&second, &y).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(policy_cost(&first, &CostMatrix::zeros(2, 2)).unwrap(), 0.0);
        assert!(policy_cost(&first, &CostMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn mixing_examples() {
        let q = mix_with_uniform(&ActionDistribution::point_mass(2, 0), 0.1).unwrap();
        assert!((q.get(0) - 0.9).abs() < 1e-15 && (q.get(1) - 0.1).abs() < 1e-15);
        let q = mix_with_uniform(&ActionDistribution::new(vec![0.5, 0.5, 0.0]).unwrap(), 0.1).unwrap();
        for (got, want) in q.probs().iter().zip([0.45, 0.45, 0.1]) {
            assert!((got - want).abs() < 1e-15);
        }
        let u = ActionDistribution::uniform(4);
        let q = mix_with_uniform(&u, 0.2).unwrap();
        for p in q.probs() {
            assert!((p - 0.25).abs() < 1e-15);
        }
        assert!(matches!(mix_with_uniform(&u, 0.0), Err(Error::Parameter(_))));
        assert!(matches!(mix_with_uniform(&u, 0.26), Err(Error::Parameter(_))));
    }

    #[test]
    fn partial_mixing_floors_small_coordinates() {
        let q = mix_small_coordinates(&ActionDistribution::new(vec![0.7, 0.3, 0.0]).unwrap(), 0.1)
            .unwrap();
        assert!(q.min() >= 0.1 - 1e-12);
        assert!((q.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((q.get(0) / q.get(1) - 0.7 / 0.3).abs() < 1e-9);
    }

    #[test]
    fn ips_examples() {
        let half = ActionDistribution::uniform(2);
        assert_eq!(ips_estimate(0.8, 0, &half).unwrap().to_dense(), vec![1.6, 0.0]);
        assert_eq!(ips_estimate(0.0, 1, &half).unwrap().to_dense(), vec![0.0, 0.0]);
        let q = ActionDistribution::new(vec![0.25, 0.75]).unwrap();
        let est = ips_estimate(1.0, 1, &q).unwrap().to_dense();
        assert_eq!(est[0], 0.0);
        assert!((est[1] - 4.0 / 3.0).abs() < 1e-15);
        let degenerate = ActionDistribution::point_mass(2, 0);
        assert!(matches!(ips_estimate(0.5, 1, &degenerate), Err(Error::Domain(_))));
    }

    #[test]
    fn all_labelings_refuses_huge_classes() {
        let u = universe(21);
        assert!(matches!(PolicyClass::all_labelings(2, u), Err(Error::Capacity(_))));
        let small = PolicyClass::all_labelings(3, universe(2)).unwrap();
        assert_eq!(small.len(), 9);
    }

    #[test]
    fn class_documents() {
        let c = PolicyClass::from_json_str(r#"{"d": 2, "universe": 2, "policies": [[1, 2], [2, 2]]}"#)
            .unwrap();
        assert_eq!(c.action(0, Context(1)), 1);
        assert_eq!(c.action(1, Context(0)), 1);
        assert!(PolicyClass::from_json_str(r#"{"d": 2, "policies": [[3]]}"#).is_err());
        let c = PolicyClass::from_json_str(r#"{"d": 2, "universe": 3, "family": "all_labelings"}"#)
            .unwrap();
        assert_eq!(c.len(), 8);
        let doc: PolicyClassDoc =
            serde_json::from_str(r#"{"family": "argmax_linear", "weights": [[[1, 0], [0, 1]]]}"#).unwrap();
        let u = Arc::new(ContextUniverse::with_features(vec![vec![0.3, 0.9], vec![1.0, 0.0]]).unwrap());
        let c = doc.build(Some(u)).unwrap();
        assert_eq!(c.action(0, Context(0)), 1);
        assert_eq!(c.action(0, Context(1)), 0);
    }

    proptest! {
        #[test]
        fn ips_is_unbiased(raw in prop::collection::vec(0.01f64..1.0, 2..6), costs in prop::collection::vec(0.0f64..=1.0, 6)) {
            let total: f64 = raw.iter().sum();
            let q = ActionDistribution::new(raw.iter().map(|p| p / total).collect::<Vec<_>>())
                .or_else(|_| {
                    // renormalization can miss the 1e-12 window; fold the residue into the last entry
                    let mut p: Vec<f64> = raw.iter().map(|p| p / total).collect();
                    let head: f64 = p[..p.len() - 1].iter().sum();
                    let last = p.len() - 1;
                    p[last] = 1.0 - head;
                    ActionDistribution::new(p)
                })
                .unwrap();
            let d = q.dim();
            let mut mean = vec![0.0; d];
            for j in 0..d {
                let est = ips_estimate(costs[j], j, &q).unwrap();
                for (i, m) in mean.iter_mut().enumerate() {
                    *m += q.get(j) * est.get(i);
                }
            }
            for j in 0..d {
                prop_assert!((mean[j] - costs[j]).abs() < 1e-12);
            }
        }

        #[test]
        fn policy_matrices_are_one_hot(table in prop::collection::vec(0usize..4, 1..6), seq in prop::collection::vec(0usize..100, 0..20)) {
            let u = ContextUniverse::new(table.len()).unwrap();
            let contexts: Vec<Context> = seq.iter().map(|s| Context(s % table.len())).collect();
            let m = policy_to_matrix(&Policy::Table(table.clone()), &u, 4, &contexts).unwrap();
            for t in 0..m.n() {
                let col = m.column(t);
                prop_assert_eq!(col.iter().filter(|v| **v == 1.0).count(), 1);
                prop_assert_eq!(col.iter().sum::<f64>(), 1.0);
                prop_assert_eq!(col[table[contexts[t].0]], 1.0);
            }
        }

        #[test]
        fn mixing_floors_every_coordinate(raw in prop::collection::vec(0.0f64..1.0, 2..8), frac in 0.01f64..=1.0) {
            let total: f64 = raw.iter().sum::<f64>() + 1e-3;
            let mut p: Vec<f64> = raw.iter().map(|v| v / total).collect();
            let head: f64 = p[1..].iter().sum();
            p[0] = 1.0 - head;
            let q_star = ActionDistribution::new(p).unwrap();
            let gamma = frac / q_star.dim() as f64;
            let q = mix_with_uniform(&q_star, gamma).unwrap();
            prop_assert!(q.min() >= gamma - 1e-15);
            prop_assert!((q.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn policy_cost_is_linear(actions in prop::collection::vec(0usize..3, 1..10), a in -3.0f64..3.0, b in -3.0f64..3.0, seed in any::<u64>()) {
            use rand::SeedableRng;
            let n = actions.len();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let cols = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<Vec<f64>> {
                (0..n).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
            };
            let y1 = CostMatrix::from_columns(3, &cols(&mut rng)).unwrap();
            let y2 = CostMatrix::from_columns(3, &cols(&mut rng)).unwrap();
            let m = PolicyMatrix::from_actions(3, actions).unwrap();
            let lhs = policy_cost(&m, &y1.combine(a, &y2, b).unwrap()).unwrap();
            let rhs = a * policy_cost(&m, &y1).unwrap() + b * policy_cost(&m, &y2).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-10);
        }
    }
}
