//! Simulated environments: i.i.d. contexts and a cost process.

use std::path::Path;
use std::sync::Arc;

use rand::Rng;

use crate::error::{domain, Error, Result};
use crate::policy::{ActionDistribution, Context, ContextDistribution, ContextUniverse, CostVector};
use crate::rng::{stream_rng, streams, SimRng};

/// What an adaptive adversary may look at when committing `c_t`:
/// contexts `x_{1:t}` and the learner's distributions and actions of rounds
/// `1..t−1`. The current round's `q_t` and `ŷ_t` are not part of the view.
#[derive(Clone, Copy, Debug)]
pub struct AdversaryView<'a> {
    pub contexts: &'a [Context],
    pub past_distributions: &'a [ActionDistribution],
    pub past_actions: &'a [usize],
}

impl AdversaryView<'_> {
    /// 1-based index of the round being committed.
    pub fn round(&self) -> usize {
        self.contexts.len()
    }
}

/// A deterministic cost rule of the visible history.
pub trait AdaptiveRule: Send + Sync {
    fn commit(&self, view: &AdversaryView<'_>) -> Result<CostVector>;
}

/// Cost 1 on the action with the largest cumulative probability so far
/// (lowest index on ties), 0 elsewhere.
#[derive(Clone, Copy, Debug)]
pub struct ArgmaxPunish {
    pub d: usize,
}

impl AdaptiveRule for ArgmaxPunish {
    fn commit(&self, view: &AdversaryView<'_>) -> Result<CostVector> {
        let mut mass = vec![0.0; self.d];
        for q in view.past_distributions {
            mass.iter_mut().zip(q.probs()).for_each(|(m, p)| *m += p);
        }
        let mut top = 0;
        for j in 1..self.d {
            if mass[j] > mass[top] {
                top = j;
            }
        }
        let mut c = vec![0.0; self.d];
        c[top] = 1.0;
        CostVector::new(c)
    }
}

pub enum CostProcess {
    /// Row `t` is the cost vector of round `t`.
    FixedTable(Vec<CostVector>),
    /// Independent Bernoulli costs with means `means[x][j]`.
    IidBernoulli(Vec<Vec<f64>>),
    Adaptive(Box<dyn AdaptiveRule>),
}

impl std::fmt::Debug for CostProcess {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CostProcess::FixedTable(rows) => write!(f, "FixedTable({} rows)", rows.len()),
            CostProcess::IidBernoulli(m) => write!(f, "IidBernoulli({m:?})"),
            CostProcess::Adaptive(_) => write!(f, "Adaptive"),
        }
    }
}

/// Parses a headerless CSV with one row per round and one column per action.
pub fn parse_cost_table(text: &str, d: usize) -> Result<Vec<CostVector>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let entries = line
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("cost table line {}: {e}", i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        if entries.len() != d {
            return Err(Error::Config(format!("cost table line {} has {} entries, expected {d}", i + 1, entries.len())));
        }
        rows.push(CostVector::new(entries)?);
    }
    Ok(rows)
}

pub fn load_cost_table(path: &Path, d: usize) -> Result<Vec<CostVector>> {
    parse_cost_table(&std::fs::read_to_string(path)?, d)
}

#[derive(Debug)]
pub struct Environment {
    pub d: usize,
    pub universe: Arc<ContextUniverse>,
    pub contexts: ContextDistribution,
    pub costs: CostProcess,
    /// Unlabeled pool size as a multiple of the horizon.
    pub pool_factor: usize,
}

impl Environment {
    pub fn new(
        d: usize,
        universe: Arc<ContextUniverse>,
        contexts: ContextDistribution,
        costs: CostProcess,
    ) -> Result<Self> {
        if contexts.size() != universe.size() {
            return Err(Error::Config(format!(
                "context distribution has {} entries for a universe of {}",
                contexts.size(),
                universe.size()
            )));
        }
        match &costs {
            CostProcess::FixedTable(rows) => {
                if rows.iter().any(|c| c.dim() != d) {
                    return Err(Error::Config("cost table width differs from d".into()));
                }
            }
            CostProcess::IidBernoulli(means) => {
                if means.len() != universe.size() || means.iter().any(|m| m.len() != d) {
                    return Err(Error::Config("Bernoulli means must be |X| rows of d entries".into()));
                }
                if means.iter().flatten().any(|p| !(0.0..=1.0).contains(p)) {
                    return Err(Error::Config("Bernoulli means must lie in [0, 1]".into()));
                }
            }
            CostProcess::Adaptive(_) => {}
        }
        Ok(Self { d, universe, contexts, costs, pool_factor: 10 })
    }

    /// The episode's context sequence `x_{1:n}`.
    pub fn draw_contexts(&self, n: usize, seed: u64) -> Vec<Context> {
        self.contexts.sample_n(n, &mut stream_rng(seed, streams::CONTEXTS))
    }

    /// `pool_factor·n` fresh draws from the context law.
    pub fn draw_pool(&self, n: usize, seed: u64) -> Vec<Context> {
        self.contexts.sample_n(self.pool_factor * n.max(1), &mut stream_rng(seed, streams::POOL))
    }

    pub fn check_horizon(&self, n: usize) -> Result<()> {
        if let CostProcess::FixedTable(rows) = &self.costs {
            if rows.len() < n {
                return Err(Error::Config(format!("cost table has {} rows for horizon {n}", rows.len())));
            }
        }
        Ok(())
    }

    /// Commits `c_t`. `view.contexts` must end with `x_t`.
    pub fn commit(&self, view: &AdversaryView<'_>, rng: &mut SimRng) -> Result<CostVector> {
        let t = view.round();
        let Some(&x) = view.contexts.last() else {
            return domain("cost commitment before any context");
        };
        match &self.costs {
            CostProcess::FixedTable(rows) => rows
                .get(t - 1)
                .cloned()
                .ok_or_else(|| Error::Domain(format!("cost table exhausted at round {t}"))),
            CostProcess::IidBernoulli(means) => {
                let c = means[x.0].iter().map(|p| if rng.gen_bool(*p) { 1.0 } else { 0.0 }).collect();
                CostVector::new(c)
            }
            CostProcess::Adaptive(rule) => {
                let c = rule.commit(view)?;
                if c.dim() != self.d {
                    return Err(Error::Invariant("adaptive rule returned the wrong dimension".into()));
                }
                Ok(c)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_punish_follows_cumulative_mass() {
        let rule = ArgmaxPunish { d: 2 };
        let ctx = [Context(0); 3];
        let qs = [ActionDistribution::new(vec![0.3, 0.7]).unwrap(), ActionDistribution::new(vec![0.6, 0.4]).unwrap()];
        let first = rule.commit(&AdversaryView { contexts: &ctx[..1], past_distributions: &[], past_actions: &[] });
        assert_eq!(first.unwrap().entries(), &[1.0, 0.0]);
        let later = rule.commit(&AdversaryView { contexts: &ctx, past_distributions: &qs, past_actions: &[1, 0] });
        assert_eq!(later.unwrap().entries(), &[0.0, 1.0]);
    }

    #[test]
    fn cost_table_parsing() {
        let rows = parse_cost_table("1,0\n0.5, 0.25\n\n", 2).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].entries(), &[0.5, 0.25]);
        assert!(parse_cost_table("1,0,0\n", 2).is_err());
        assert!(parse_cost_table("1,2\n", 2).is_err());
        assert!(parse_cost_table("a,0\n", 2).is_err());
    }

    #[test]
    fn environment_validation() {
        let u = Arc::new(ContextUniverse::new(2).unwrap());
        let dist = ContextDistribution::uniform(2).unwrap();
        assert!(Environment::new(2, Arc::clone(&u), dist.clone(), CostProcess::IidBernoulli(vec![vec![0.5, 0.5]])).is_err());
        let env = Environment::new(2, u, dist, CostProcess::FixedTable(parse_cost_table("1,0\n", 2).unwrap())).unwrap();
        assert!(env.check_horizon(1).is_ok());
        assert!(env.check_horizon(2).is_err());
        assert_eq!(env.draw_contexts(20, 4), env.draw_contexts(20, 4));
        assert_eq!(env.draw_pool(3, 1).len(), 30);
    }
}
