//! The interaction protocol, transcripts and regret accounting.

use std::io::Write;

use serde::Serialize;

use crate::erm::{exact_erm_value, filter_class, ConstraintFunction};
use crate::error::{Error, Result};
use crate::harness::env::{AdversaryView, Environment};
use crate::policy::{ActionDistribution, Context, CostMatrix, CostVector, PolicyClass};
use crate::rng::{stream_rng, streams};
use crate::strategy::Strategy;

/// What the learner sees about one round.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InfoTuple {
    pub context: Context,
    pub distribution: Vec<f64>,
    pub action: usize,
    pub observed_cost: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord {
    pub info: InfoTuple,
    /// Full cost vector, private to the simulator.
    pub costs: CostVector,
    /// `q_tᵀc_t`.
    pub expected_cost: f64,
    pub cum_expected_cost: f64,
    pub cum_realized_cost: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Transcript {
    pub d: usize,
    pub rounds: Vec<RoundRecord>,
    pub oracle_calls: u64,
}

impl Transcript {
    pub fn n(&self) -> usize {
        self.rounds.len()
    }

    pub fn contexts(&self) -> Vec<Context> {
        self.rounds.iter().map(|r| r.info.context).collect()
    }

    pub fn cost_matrix(&self) -> Result<CostMatrix> {
        let cols: Vec<Vec<f64>> = self.rounds.iter().map(|r| r.costs.entries().to_vec()).collect();
        CostMatrix::from_columns(self.d, &cols)
    }

    pub fn total_expected_cost(&self) -> f64 {
        self.rounds.last().map_or(0.0, |r| r.cum_expected_cost)
    }

    pub fn total_realized_cost(&self) -> f64 {
        self.rounds.last().map_or(0.0, |r| r.cum_realized_cost)
    }

    /// Recomputes every derived field from the per-round entries.
    pub fn is_consistent(&self) -> bool {
        let (mut exp, mut real) = (0.0, 0.0);
        for r in &self.rounds {
            let q = &r.info.distribution;
            let e: f64 = q.iter().zip(r.costs.entries()).map(|(p, c)| p * c).sum();
            exp += e;
            real += r.info.observed_cost;
            if e != r.expected_cost
                || exp != r.cum_expected_cost
                || real != r.cum_realized_cost
                || r.costs.get(r.info.action) != r.info.observed_cost
            {
                return false;
            }
        }
        true
    }

    /// CSV with 1-based rounds and actions.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let q_cols: Vec<String> = (1..=self.d).map(|j| format!("q_{j}")).collect();
        writeln!(w, "round,context,action,{},observed_cost,expected_cost,cum_expected_cost", q_cols.join(","))?;
        for (t, r) in self.rounds.iter().enumerate() {
            let q: Vec<String> = r.info.distribution.iter().map(|p| p.to_string()).collect();
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                t + 1,
                r.info.context.0,
                r.info.action + 1,
                q.join(","),
                r.info.observed_cost,
                r.expected_cost,
                r.cum_expected_cost
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Invariant(e.to_string()))
    }
}

/// Runs `n` rounds: draw `x_t`, ask for `q_t`, let the environment commit
/// `c_t`, sample `ŷ_t ∼ q_t`, reveal `c_t(ŷ_t)`.
pub fn run_episode_with_contexts(
    strategy: &mut dyn Strategy,
    env: &Environment,
    contexts: &[Context],
    seed: u64,
) -> Result<Transcript> {
    if strategy.d() != env.d {
        return Err(Error::Config(format!("strategy has d = {}, environment has d = {}", strategy.d(), env.d)));
    }
    let n = contexts.len();
    env.check_horizon(n)?;
    let calls_before = strategy.oracle_calls();
    let mut cost_rng = stream_rng(seed, streams::COSTS);
    let mut action_rng = stream_rng(seed, streams::ACTIONS);
    let mut past_q: Vec<ActionDistribution> = Vec::with_capacity(n);
    let mut past_actions: Vec<usize> = Vec::with_capacity(n);
    let mut rounds = Vec::with_capacity(n);
    let (mut cum_exp, mut cum_real) = (0.0, 0.0);
    for t in 0..n {
        let x = contexts[t];
        env.universe.check(x)?;
        let q = strategy.distribution(x)?;
        if q.dim() != env.d {
            return Err(Error::Invariant("strategy returned a distribution of the wrong size".into()));
        }
        let view = AdversaryView { contexts: &contexts[..=t], past_distributions: &past_q, past_actions: &past_actions };
        let c = env.commit(&view, &mut cost_rng)?;
        let action = q.sample(&mut action_rng);
        let observed = c.get(action);
        strategy.observe(action, observed)?;
        strategy.reveal_full_costs(&c);
        let expected = c.dot(&q);
        cum_exp += expected;
        cum_real += observed;
        rounds.push(RoundRecord {
            info: InfoTuple { context: x, distribution: q.probs().to_vec(), action, observed_cost: observed },
            costs: c,
            expected_cost: expected,
            cum_expected_cost: cum_exp,
            cum_realized_cost: cum_real,
        });
        past_q.push(q);
        past_actions.push(action);
    }
    Ok(Transcript { d: env.d, rounds, oracle_calls: strategy.oracle_calls() - calls_before })
}

/// [`run_episode_with_contexts`] on the environment's own context draw.
pub fn run_episode(strategy: &mut dyn Strategy, env: &Environment, n: usize, seed: u64) -> Result<Transcript> {
    let contexts = env.draw_contexts(n, seed);
    run_episode_with_contexts(strategy, env, &contexts, seed)
}

/// Benchmark class for regret: the whole class, or `F_K[x_{1:n}]` when a
/// constraint and budget are given.
#[derive(Clone, Copy)]
pub struct Benchmark<'a> {
    pub class: &'a PolicyClass,
    pub constraint: Option<(&'a dyn ConstraintFunction, f64)>,
}

impl<'a> Benchmark<'a> {
    pub fn unconstrained(class: &'a PolicyClass) -> Self {
        Self { class, constraint: None }
    }

    /// `inf_f Σ_t f(x_t)ᵀc_t` over the benchmark class.
    pub fn value(&self, tr: &Transcript) -> Result<f64> {
        if tr.n() == 0 {
            return Ok(0.0);
        }
        let contexts = tr.contexts();
        let y = tr.cost_matrix()?;
        match self.constraint {
            None => exact_erm_value(self.class, &contexts, &y),
            Some((c, k)) => exact_erm_value(&filter_class(self.class, &contexts, c, k)?, &contexts, &y),
        }
    }
}

/// `Σ_t q_tᵀc_t − inf_f Σ_t f(x_t)ᵀc_t`.
pub fn expected_regret(tr: &Transcript, benchmark: &Benchmark<'_>) -> Result<f64> {
    Ok(tr.total_expected_cost() - benchmark.value(tr)?)
}

/// `Σ_t c_t(ŷ_t) − inf_f Σ_t f(x_t)ᵀc_t`.
pub fn realized_regret(tr: &Transcript, benchmark: &Benchmark<'_>) -> Result<f64> {
    Ok(tr.total_realized_cost() - benchmark.value(tr)?)
}
