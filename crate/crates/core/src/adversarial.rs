//! Full-information to bandit reduction.
//!
//! Any admissible full-information relaxation becomes a bandit strategy by
//! feeding it the scaled estimates `γ·c̃_s ∈ [0,1]^d` and mixing its
//! distribution with uniform exploration. The resulting regret is at most
//! `γ⁻¹·Rel_full(∅) + n·d·γ`, i.e. `2√(d·n·Rel_full(∅))` at the best γ.

use std::sync::Arc;

use crate::error::{domain, parameter, Error, Result};
use crate::policy::{ips_estimate, mix_with_uniform, ActionDistribution, Context, CostVector, PolicyClass};
use crate::strategy::{take_pending, Strategy};

/// A full-information relaxation together with the strategy it certifies.
pub trait FullInfoRelaxation: Send + Sync {
    fn d(&self) -> usize;

    fn horizon(&self) -> usize;

    /// `Rel_full(c_{1:t})` for the realized contexts `x_{1:t}`.
    fn value(&self, costs: &[CostVector], contexts: &[Context]) -> Result<f64>;

    /// Distribution for round `t = costs.len() + 1` given `x_t`.
    fn strategy(&self, costs: &[CostVector], contexts: &[Context], x_t: Context) -> Result<ActionDistribution>;

    /// `Rel_full(∅)`.
    fn initial_value(&self) -> f64;
}

/// Exponential weights over a finite class:
/// `η⁻¹·log Σ_f exp(−η·L_t(f)) + (n − t)·η/2`.
#[derive(Clone, Debug)]
pub struct ExpWeightsRelaxation {
    eta: f64,
    class: Arc<PolicyClass>,
    n: usize,
}

impl ExpWeightsRelaxation {
    pub fn new(class: Arc<PolicyClass>, n: usize, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return parameter(format!("learning rate {eta} must be positive"));
        }
        if class.is_empty() {
            return domain("exponential weights over an empty class");
        }
        Ok(Self { eta, class, n })
    }

    /// `η = √(2·log|F| / n)`; falls back to `√(2/n)` for a single policy.
    pub fn default_eta(class_size: usize, n: usize) -> f64 {
        let log_f = (class_size.max(1) as f64).ln();
        let log_f = if log_f > 0.0 { log_f } else { 1.0 };
        (2.0 * log_f / n.max(1) as f64).sqrt()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn class(&self) -> &Arc<PolicyClass> {
        &self.class
    }

    fn losses(&self, costs: &[CostVector], contexts: &[Context]) -> Result<Vec<f64>> {
        if costs.len() != contexts.len() {
            return domain("cost history and contexts differ in length");
        }
        if costs.len() > self.n {
            return domain(format!("history of {} rounds exceeds horizon {}", costs.len(), self.n));
        }
        self.class.check_contexts(contexts)?;
        let d = self.class.d();
        if let Some(c) = costs.iter().find(|c| c.dim() != d) {
            return domain(format!("cost vector of dimension {} for d = {d}", c.dim()));
        }
        Ok((0..self.class.len())
            .map(|p| costs.iter().zip(contexts).map(|(c, x)| c.get(self.class.action(p, *x))).sum())
            .collect())
    }
}

/// `η⁻¹·log Σ exp(−η·L)` with a max shift.
fn soft_min_value(losses: &[f64], eta: f64) -> f64 {
    let best = losses.iter().copied().fold(f64::INFINITY, f64::min);
    let sum: f64 = losses.iter().map(|l| (-eta * (l - best)).exp()).sum();
    sum.ln() / eta - best
}

pub fn expweights_value(rel: &ExpWeightsRelaxation, costs: &[CostVector], contexts: &[Context]) -> Result<f64> {
    let losses = rel.losses(costs, contexts)?;
    let remaining = (rel.n - costs.len()) as f64;
    Ok(soft_min_value(&losses, rel.eta) + remaining * rel.eta / 2.0)
}

/// `q(j) ∝ Σ_{f : f(x_t) = j} exp(−η·L_{t−1}(f))`.
pub fn expweights_strategy(
    rel: &ExpWeightsRelaxation,
    costs: &[CostVector],
    contexts: &[Context],
    x_t: Context,
) -> Result<ActionDistribution> {
    let losses = rel.losses(costs, contexts)?;
    rel.class.universe().check(x_t)?;
    let best = losses.iter().copied().fold(f64::INFINITY, f64::min);
    let mut q = vec![0.0; rel.class.d()];
    for (p, l) in losses.iter().enumerate() {
        q[rel.class.action(p, x_t)] += (-rel.eta * (l - best)).exp();
    }
    let total: f64 = q.iter().sum();
    q.iter_mut().for_each(|v| *v /= total);
    ActionDistribution::new(q)
}

impl FullInfoRelaxation for ExpWeightsRelaxation {
    fn d(&self) -> usize {
        self.class.d()
    }

    fn horizon(&self) -> usize {
        self.n
    }

    fn value(&self, costs: &[CostVector], contexts: &[Context]) -> Result<f64> {
        expweights_value(self, costs, contexts)
    }

    fn strategy(&self, costs: &[CostVector], contexts: &[Context], x_t: Context) -> Result<ActionDistribution> {
        expweights_strategy(self, costs, contexts, x_t)
    }

    fn initial_value(&self) -> f64 {
        (self.class.len() as f64).ln() / self.eta + self.n as f64 * self.eta / 2.0
    }
}

/// `min(√(Rel_full(∅)/(n·d)), 1/d)`, or `1/(n·d)` when `Rel_full(∅) ≤ 0`.
pub fn reduction_gamma(rel_initial: f64, n: usize, d: usize) -> Result<f64> {
    if n == 0 || d == 0 {
        return parameter(format!("reduction needs n, d ≥ 1 (got n = {n}, d = {d})"));
    }
    let cap = 1.0 / d as f64;
    if rel_initial <= 0.0 {
        return Ok((1.0 / (n * d) as f64).min(cap));
    }
    Ok((rel_initial / (n * d) as f64).sqrt().min(cap))
}

/// `2√(d·n·Rel_full(∅))`.
pub fn reduction_bound(rel_initial: f64, n: usize, d: usize) -> f64 {
    2.0 * (d as f64 * n as f64 * rel_initial.max(0.0)).sqrt()
}

/// `γ⁻¹·Rel_full(∅) + n·d·γ`, valid for any γ; equals [`reduction_bound`] at
/// the unclamped [`reduction_gamma`].
pub fn reduction_bound_at(rel_initial: f64, n: usize, d: usize, gamma: f64) -> f64 {
    rel_initial.max(0.0) / gamma + (n * d) as f64 * gamma
}

/// The bandit strategy obtained from a full-information relaxation.
pub struct BanditReduction {
    rel: Arc<dyn FullInfoRelaxation>,
    gamma: f64,
    scaled_history: Vec<CostVector>,
    contexts: Vec<Context>,
    pending: Option<(Context, ActionDistribution)>,
}

impl BanditReduction {
    pub fn new(rel: Arc<dyn FullInfoRelaxation>, gamma: f64) -> Result<Self> {
        let d = rel.d();
        if !(gamma > 0.0 && gamma <= 1.0 / d as f64) {
            return parameter(format!("gamma {gamma} outside (0, 1/{d}]"));
        }
        Ok(Self { rel, gamma, scaled_history: Vec::new(), contexts: Vec::new(), pending: None })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `γ·c̃_1, …, γ·c̃_{t−1}`, each checked to lie in `[0,1]^d`.
    pub fn scaled_history(&self) -> &[CostVector] {
        &self.scaled_history
    }
}

impl Strategy for BanditReduction {
    fn name(&self) -> &str {
        "adversarial_reduction"
    }

    fn d(&self) -> usize {
        self.rel.d()
    }

    fn distribution(&mut self, x_t: Context) -> Result<ActionDistribution> {
        if self.pending.is_some() {
            return domain("distribution requested twice in one round");
        }
        let q_star = self.rel.strategy(&self.scaled_history, &self.contexts, x_t)?;
        let q = mix_with_uniform(&q_star, self.gamma)?;
        self.pending = Some((x_t, q.clone()));
        Ok(q)
    }

    fn observe(&mut self, action: usize, observed_cost: f64) -> Result<()> {
        let (x, q) = take_pending(&mut self.pending)?;
        let scaled = ips_estimate(observed_cost, action, &q)?.scaled(self.gamma);
        let scaled = CostVector::new(scaled.clone()).map_err(|_| {
            Error::Invariant(format!("scaled estimate {scaled:?} left [0,1]^d (gamma {})", self.gamma))
        })?;
        self.scaled_history.push(scaled);
        self.contexts.push(x);
        Ok(())
    }
}

/// `Rel_full(c_{1:n}) + min_f Σ_t f(x_t)ᵀc_t`; admissibility requires `≥ 0`.
pub fn initial_condition_margin(
    rel: &ExpWeightsRelaxation,
    costs: &[CostVector],
    contexts: &[Context],
) -> Result<f64> {
    let losses = rel.losses(costs, contexts)?;
    let best = losses.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(rel.value(costs, contexts)? + best)
}

/// Largest violation of the recursive condition after the history `c_{1:t−1}`:
/// `max_{x_t, c_t} { q_tᵀc_t + Rel(c_{1:t}) } − Rel(c_{1:t−1})`, with `x_t`
/// ranging over `candidates` and `c_t` over the vertices `{0,1}^d`.
/// Admissibility requires a nonpositive result.
pub fn recursive_condition_gap(
    rel: &dyn FullInfoRelaxation,
    costs: &[CostVector],
    contexts: &[Context],
    candidates: &[Context],
) -> Result<f64> {
    let d = rel.d();
    if d > 16 {
        return Err(Error::Capacity(format!("2^{d} cost vertices")));
    }
    let before = rel.value(costs, contexts)?;
    let mut worst = f64::NEG_INFINITY;
    let mut history = costs.to_vec();
    let mut ctx = contexts.to_vec();
    for &x in candidates {
        let q = rel.strategy(costs, contexts, x)?;
        ctx.push(x);
        for mask in 0..1usize << d {
            let c = CostVector::new((0..d).map(|j| ((mask >> j) & 1) as f64).collect())?;
            let expected = c.dot(&q);
            history.push(c);
            worst = worst.max(expected + rel.value(&history, &ctx)? - before);
            history.pop();
        }
        ctx.pop();
    }
    Ok(worst)
}
