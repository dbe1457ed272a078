//! The strategy interface driven by the episode runner, plus baselines.

use std::sync::Arc;

use crate::error::{domain, parameter, Result};
use crate::policy::{ips_estimate, ActionDistribution, Context, CostVector, PolicyClass};

/// A contextual-bandit learner.
///
/// Per round the runner calls [`distribution`](Strategy::distribution) once,
/// samples an action, then calls [`observe`](Strategy::observe) with the
/// revealed coordinate of the cost vector.
pub trait Strategy: Send {
    fn name(&self) -> &str;

    fn d(&self) -> usize;

    fn distribution(&mut self, x_t: Context) -> Result<ActionDistribution>;

    fn observe(&mut self, action: usize, observed_cost: f64) -> Result<()>;

    /// Full cost vector after the round. Only diagnostic baselines that are
    /// allowed to cheat use it.
    fn reveal_full_costs(&mut self, _costs: &CostVector) {}

    fn oracle_calls(&self) -> u64 {
        0
    }
}

/// Plays the uniform distribution every round.
#[derive(Clone, Debug)]
pub struct UniformStrategy {
    d: usize,
}

impl UniformStrategy {
    pub fn new(d: usize) -> Self {
        Self { d }
    }
}

impl Strategy for UniformStrategy {
    fn name(&self) -> &str {
        "uniform"
    }

    fn d(&self) -> usize {
        self.d
    }

    fn distribution(&mut self, _x_t: Context) -> Result<ActionDistribution> {
        Ok(ActionDistribution::uniform(self.d))
    }

    fn observe(&mut self, _action: usize, _observed_cost: f64) -> Result<()> {
        Ok(())
    }
}

fn leader(losses: &[f64]) -> usize {
    let mut best = 0;
    for (p, l) in losses.iter().enumerate() {
        if *l < losses[best] {
            best = p;
        }
    }
    best
}

/// Follow-the-leader on the *true* past costs. Sees full cost vectors, so it
/// is a diagnostic anchor rather than a bandit algorithm.
#[derive(Clone, Debug)]
pub struct FollowTheLeader {
    class: Arc<PolicyClass>,
    losses: Vec<f64>,
    current: Option<Context>,
}

impl FollowTheLeader {
    pub fn new(class: Arc<PolicyClass>) -> Self {
        let losses = vec![0.0; class.len()];
        Self { class, losses, current: None }
    }
}

impl Strategy for FollowTheLeader {
    fn name(&self) -> &str {
        "ftl"
    }

    fn d(&self) -> usize {
        self.class.d()
    }

    fn distribution(&mut self, x_t: Context) -> Result<ActionDistribution> {
        self.class.universe().check(x_t)?;
        self.current = Some(x_t);
        let p = leader(&self.losses);
        Ok(ActionDistribution::point_mass(self.class.d(), self.class.action(p, x_t)))
    }

    fn observe(&mut self, _action: usize, _observed_cost: f64) -> Result<()> {
        Ok(())
    }

    fn reveal_full_costs(&mut self, costs: &CostVector) {
        if let Some(x) = self.current.take() {
            for (p, loss) in self.losses.iter_mut().enumerate() {
                *loss += costs.get(self.class.action(p, x));
            }
        }
    }
}

/// ε-greedy over a finite class with inverse-propensity loss estimates.
#[derive(Clone, Debug)]
pub struct EpsilonGreedy {
    class: Arc<PolicyClass>,
    epsilon: f64,
    estimates: Vec<f64>,
    pending: Option<(Context, ActionDistribution)>,
}

impl EpsilonGreedy {
    pub fn new(class: Arc<PolicyClass>, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return parameter(format!("epsilon {epsilon} outside (0, 1]"));
        }
        let estimates = vec![0.0; class.len()];
        Ok(Self { class, epsilon, estimates, pending: None })
    }
}

impl Strategy for EpsilonGreedy {
    fn name(&self) -> &str {
        "egreedy"
    }

    fn d(&self) -> usize {
        self.class.d()
    }

    fn distribution(&mut self, x_t: Context) -> Result<ActionDistribution> {
        self.class.universe().check(x_t)?;
        let d = self.class.d();
        let greedy = self.class.action(leader(&self.estimates), x_t);
        let mut probs = vec![self.epsilon / d as f64; d];
        probs[greedy] += 1.0 - self.epsilon;
        let q = ActionDistribution::new(probs)?;
        self.pending = Some((x_t, q.clone()));
        Ok(q)
    }

    fn observe(&mut self, action: usize, observed_cost: f64) -> Result<()> {
        let (x, q) = take_pending(&mut self.pending)?;
        let est = ips_estimate(observed_cost, action, &q)?;
        for (p, e) in self.estimates.iter_mut().enumerate() {
            *e += est.get(self.class.action(p, x));
        }
        Ok(())
    }
}

pub(crate) fn take_pending<T>(slot: &mut Option<T>) -> Result<T> {
    match slot.take() {
        Some(v) => Ok(v),
        None => domain("observe called before distribution"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{ContextUniverse, Policy};

    fn constants() -> Arc<PolicyClass> {
        let u = Arc::new(ContextUniverse::new(1).unwrap());
        Arc::new(PolicyClass::new(2, u, vec![Policy::constant(1, 0), Policy::constant(1, 1)]).unwrap())
    }

    #[test]
    fn ftl_follows_true_costs() {
        let mut s = FollowTheLeader::new(constants());
        assert_eq!(s.distribution(Context(0)).unwrap().probs(), &[1.0, 0.0]);
        s.observe(0, 1.0).unwrap();
        s.reveal_full_costs(&CostVector::new(vec![1.0, 0.0]).unwrap());
        assert_eq!(s.distribution(Context(0)).unwrap().probs(), &[0.0, 1.0]);
    }

    #[test]
    fn egreedy_mixes_and_learns() {
        let mut s = EpsilonGreedy::new(constants(), 0.2).unwrap();
        let q = s.distribution(Context(0)).unwrap();
        assert!((q.get(0) - 0.9).abs() < 1e-15);
        s.observe(0, 1.0).unwrap();
        let q = s.distribution(Context(0)).unwrap();
        assert!((q.get(1) - 0.9).abs() < 1e-15);
        assert!(s.observe(1, 0.0).is_ok());
        assert!(s.observe(1, 0.0).is_err());
        assert!(EpsilonGreedy::new(constants(), 0.0).is_err());
    }
}
