//! Empirical admissibility checks on tiny instances.
//!
//! Recursive condition after a history `I_{1:t−1}`:
//! `E_{x_t} max_{c_t ∈ {0,1}^d} E_{ŷ∼q_t} [c_t(ŷ) + Rel(I_{1:t})] ≤ Rel(I_{1:t−1})`.
//! For the BISTRO relaxation both sides are Monte-Carlo estimates over
//! playouts and `q_t` is the playout-averaged strategy; for the reduction
//! everything is exact and `x_t` ranges adversarially over the universe.
//!
//! Initial condition: `E_ŷ Rel(I_{1:n}) ≥ −inf_f Σ_t f(x_t)ᵀc_t`, checked by
//! enumerating all `d^n` action sequences for fixed per-round distributions.

use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::adversarial::{ExpWeightsRelaxation, FullInfoRelaxation};
use crate::bistro::{playout_psi, relaxation_sample, BistroConfig, BistroState, PlayoutDraw};
use crate::erm::{exact_erm_value, ExactErm};
use crate::error::{Error, Result};
use crate::harness::config::Algorithm;
use crate::harness::suite::Experiment;
use crate::policy::{
    ips_estimate, mix_with_uniform, ActionDistribution, Context, CostMatrix, CostVector, EstimatedCostVector,
};
use crate::rademacher::{fill_signs, RademacherEstimate};
use crate::rng::{stream_rng, SimRng};
use crate::waterfill::waterfill;

pub const MAX_CHECK_D: usize = 3;
pub const MAX_CHECK_N: usize = 3;
pub const MAX_CHECK_CONTEXTS: usize = 3;
pub const MAX_CHECK_CLASS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RelaxationKind {
    Bistro,
    Reduction,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdmissibilityOptions {
    /// Playouts per relaxation estimate (and per strategy evaluation).
    pub samples: usize,
    pub histories_per_step: usize,
    pub endpoints: usize,
    pub seed: u64,
}

impl Default for AdmissibilityOptions {
    fn default() -> Self {
        Self { samples: 10_000, histories_per_step: 3, endpoints: 1000, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepCheck {
    pub t: usize,
    pub history: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub combined_se: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub kind: RelaxationKind,
    pub gamma: f64,
    pub steps: Vec<StepCheck>,
    pub endpoints: usize,
    pub min_initial_margin: f64,
    pub initial_passed: bool,
    pub passed: bool,
}

const INITIAL_TOL: f64 = 1e-10;
const EXACT_TOL: f64 = 1e-9;

fn random_vertex(rng: &mut SimRng, d: usize) -> CostVector {
    CostVector::new((0..d).map(|_| if rng.gen_bool(0.5) { 1.0 } else { 0.0 }).collect())
        .expect("vertex in [0,1]^d")
}

fn random_mixed(rng: &mut SimRng, d: usize, gamma: f64) -> Result<ActionDistribution> {
    let mut w: Vec<f64> = (0..d).map(|_| -rng.gen_range(f64::MIN_POSITIVE..1.0f64).ln()).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    mix_with_uniform(&ActionDistribution::new(w)?, gamma)
}

/// Relaxation and strategy of one kind, on the history representation used
/// by the checker (contexts plus raw estimates `c̃`).
trait Checked {
    fn d(&self) -> usize;
    fn gamma(&self) -> f64;
    /// `(mean, standard error)` of `Rel(I_{1:t})`.
    fn rel(&mut self, history: &BistroState) -> Result<(f64, f64)>;
    fn strategy(&mut self, history: &BistroState, x: Context) -> Result<ActionDistribution>;
    /// `Rel(I_{1:n})` for a complete history.
    fn final_rel(&mut self, history: &BistroState) -> Result<f64>;
    fn exact(&self) -> bool;
}

struct BistroCheck<'a> {
    exp: &'a Experiment,
    oracle: ExactErm,
    cfg: BistroConfig,
    samples: usize,
    seed: u64,
    draws: u64,
}

impl BistroCheck<'_> {
    fn draw(&mut self, future: usize) -> PlayoutDraw {
        let mut rng = stream_rng(self.seed, self.draws);
        self.draws += 1;
        let future_contexts = self.exp.env.contexts.sample_n(future, &mut rng);
        let future_signs = (0..future)
            .map(|_| {
                let mut eps = vec![0.0; self.cfg.d];
                fill_signs(&mut rng, &mut eps);
                eps
            })
            .collect();
        PlayoutDraw { future_contexts, future_signs }
    }
}

impl Checked for BistroCheck<'_> {
    fn d(&self) -> usize {
        self.cfg.d
    }

    fn gamma(&self) -> f64 {
        self.cfg.gamma
    }

    fn rel(&mut self, history: &BistroState) -> Result<(f64, f64)> {
        let future = self.cfg.n - history.len();
        let values = (0..self.samples)
            .map(|_| {
                let draw = self.draw(future);
                relaxation_sample(&self.oracle, history, &draw, &self.cfg)
            })
            .collect::<Result<Vec<_>>>()?;
        let est = RademacherEstimate::from_samples(&values);
        Ok((est.mean, est.std_error))
    }

    fn strategy(&mut self, history: &BistroState, x: Context) -> Result<ActionDistribution> {
        let future = self.cfg.n - history.len() - 1;
        let mut acc = vec![0.0; self.cfg.d];
        for _ in 0..self.samples {
            let draw = self.draw(future);
            let q = waterfill(&playout_psi(&self.oracle, history, x, &draw, &self.cfg)?)?;
            acc.iter_mut().zip(q.probs()).for_each(|(a, p)| *a += p);
        }
        acc.iter_mut().for_each(|a| *a /= self.samples as f64);
        mix_with_uniform(&ActionDistribution::new(acc)?, self.cfg.gamma)
    }

    fn final_rel(&mut self, history: &BistroState) -> Result<f64> {
        let none = PlayoutDraw { future_contexts: vec![], future_signs: vec![] };
        relaxation_sample(&self.oracle, history, &none, &self.cfg)
    }

    fn exact(&self) -> bool {
        false
    }
}

struct ReductionCheck {
    rel: ExpWeightsRelaxation,
    gamma: f64,
    n: usize,
}

impl ReductionCheck {
    fn scaled(&self, history: &BistroState) -> Result<Vec<CostVector>> {
        history.past_estimates().iter().map(|e| CostVector::new(e.scaled(self.gamma))).collect()
    }

    fn value(&self, history: &BistroState) -> Result<f64> {
        let t = history.len();
        let full = self.rel.value(&self.scaled(history)?, history.past_contexts())?;
        Ok(full / self.gamma + ((self.n - t) * self.rel.d()) as f64 * self.gamma)
    }
}

impl Checked for ReductionCheck {
    fn d(&self) -> usize {
        self.rel.d()
    }

    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn rel(&mut self, history: &BistroState) -> Result<(f64, f64)> {
        Ok((self.value(history)?, 0.0))
    }

    fn strategy(&mut self, history: &BistroState, x: Context) -> Result<ActionDistribution> {
        let q = self.rel.strategy(&self.scaled(history)?, history.past_contexts(), x)?;
        mix_with_uniform(&q, self.gamma)
    }

    fn final_rel(&mut self, history: &BistroState) -> Result<f64> {
        self.value(history)
    }

    fn exact(&self) -> bool {
        true
    }
}

fn extend(history: &BistroState, x: Context, est: EstimatedCostVector) -> BistroState {
    let mut h = history.clone();
    h.push(x, est);
    h
}

/// One recursive-condition check after `history`.
fn step(
    checker: &mut dyn Checked,
    history: &BistroState,
    universe: &[Context],
    probs: &[f64],
) -> Result<(f64, f64, f64, f64)> {
    let d = checker.d();
    let (rhs, rhs_se) = checker.rel(history)?;
    let mut lhs = if checker.exact() { f64::NEG_INFINITY } else { 0.0 };
    let mut lhs_var = 0.0;
    for (&x, &px) in universe.iter().zip(probs) {
        if px == 0.0 && !checker.exact() {
            continue;
        }
        let q = checker.strategy(history, x)?;
        // Rel after observing cost 0 does not depend on the action taken.
        let zero = checker.rel(&extend(history, x, EstimatedCostVector::zero(d)))?;
        let ones = (0..d)
            .map(|a| checker.rel(&extend(history, x, ips_estimate(1.0, a, &q)?)))
            .collect::<Result<Vec<_>>>()?;
        let mut best = (f64::NEG_INFINITY, 0.0);
        for mask in 0..1usize << d {
            let mut value = 0.0;
            let mut zero_weight = 0.0;
            let mut var = 0.0;
            for a in 0..d {
                if (mask >> a) & 1 == 1 {
                    value += q.get(a) * (1.0 + ones[a].0);
                    var += (q.get(a) * ones[a].1).powi(2);
                } else {
                    value += q.get(a) * zero.0;
                    zero_weight += q.get(a);
                }
            }
            var += (zero_weight * zero.1).powi(2);
            if value > best.0 {
                best = (value, var);
            }
        }
        if checker.exact() {
            lhs = lhs.max(best.0);
        } else {
            lhs += px * best.0;
            lhs_var += px * px * best.1;
        }
    }
    Ok((lhs, lhs_var.sqrt(), rhs, rhs_se))
}

fn sample_history(
    checker: &mut dyn Checked,
    t: usize,
    exp: &Experiment,
    rng: &mut SimRng,
) -> Result<BistroState> {
    let d = checker.d();
    let mut h = BistroState::new();
    for _ in 0..t {
        let x = exp.env.contexts.sample(rng);
        let q = checker.strategy(&h, x)?;
        let c = random_vertex(rng, d);
        let a = q.sample(rng);
        h.push(x, ips_estimate(c.get(a), a, &q)?);
    }
    Ok(h)
}

/// `E_ŷ Rel(I_{1:n}) + inf_f Σ_t f(x_t)ᵀc_t` for fixed per-round distributions.
fn initial_margin(
    checker: &mut dyn Checked,
    exp: &Experiment,
    contexts: &[Context],
    costs: &[CostVector],
    qs: &[ActionDistribution],
) -> Result<f64> {
    let d = checker.d();
    let n = contexts.len();
    let mut expectation = 0.0;
    for code in 0..d.pow(n as u32) {
        let mut c = code;
        let mut prob = 1.0;
        let mut h = BistroState::new();
        for t in 0..n {
            let a = c % d;
            c /= d;
            prob *= qs[t].get(a);
            h.push(contexts[t], ips_estimate(costs[t].get(a), a, &qs[t])?);
        }
        expectation += prob * checker.final_rel(&h)?;
    }
    let cols: Vec<Vec<f64>> = costs.iter().map(|c| c.entries().to_vec()).collect();
    let best = exact_erm_value(&exp.class, contexts, &CostMatrix::from_columns(d, &cols)?)?;
    Ok(expectation + best)
}

/// Runs both conditions for the chosen relaxation on `exp`'s instance.
pub fn admissibility_check(
    kind: RelaxationKind,
    exp: &Experiment,
    opts: &AdmissibilityOptions,
) -> Result<AdmissibilityReport> {
    let c = &exp.config;
    if c.d > MAX_CHECK_D || c.n > MAX_CHECK_N || exp.universe.size() > MAX_CHECK_CONTEXTS || exp.class.len() > MAX_CHECK_CLASS {
        return Err(Error::Capacity(format!(
            "admissibility check limited to d ≤ {MAX_CHECK_D}, n ≤ {MAX_CHECK_N}, |X| ≤ {MAX_CHECK_CONTEXTS}, |F| ≤ {MAX_CHECK_CLASS}"
        )));
    }
    if opts.samples < 2 {
        return Err(Error::Parameter("admissibility check needs at least two samples".into()));
    }
    let mut checker: Box<dyn Checked + '_> = match kind {
        RelaxationKind::Bistro => {
            let tuned = exp.with_algorithm(Algorithm::Bistro)?;
            let gamma = tuned.tuning.gamma.ok_or_else(|| Error::Invariant("untuned gamma".into()))?;
            let mut cfg = BistroConfig::new(c.d, c.n, gamma);
            cfg.sign_scale = c.sign_scale;
            Box::new(BistroCheck {
                exp,
                oracle: ExactErm::new(Arc::clone(&exp.class)),
                cfg,
                samples: opts.samples,
                seed: opts.seed,
                draws: 0,
            })
        }
        RelaxationKind::Reduction => {
            let tuned = exp.with_algorithm(Algorithm::AdversarialReduction)?;
            let gamma = tuned.tuning.gamma.ok_or_else(|| Error::Invariant("untuned gamma".into()))?;
            let eta = tuned.tuning.eta.ok_or_else(|| Error::Invariant("untuned eta".into()))?;
            Box::new(ReductionCheck { rel: ExpWeightsRelaxation::new(Arc::clone(&exp.class), c.n, eta)?, gamma, n: c.n })
        }
    };
    let universe: Vec<Context> = exp.universe.contexts().collect();
    let probs = exp.env.contexts.probs().to_vec();
    // a stream id far from the playout counter
    let mut rng = stream_rng(opts.seed, u64::MAX);

    let mut steps = Vec::new();
    for t in 1..=c.n {
        for h in 0..opts.histories_per_step {
            let history = sample_history(checker.as_mut(), t - 1, exp, &mut rng)?;
            let (lhs, lhs_se, rhs, rhs_se) = step(checker.as_mut(), &history, &universe, &probs)?;
            let combined_se = (lhs_se * lhs_se + rhs_se * rhs_se).sqrt();
            let passed = if checker.exact() { lhs <= rhs + EXACT_TOL } else { lhs <= rhs + 3.0 * combined_se };
            steps.push(StepCheck { t, history: h, lhs, rhs, combined_se, passed });
            if t == 1 {
                break;
            }
        }
    }

    let mut min_margin = f64::INFINITY;
    let gamma = checker.gamma();
    for _ in 0..opts.endpoints {
        let contexts = exp.env.contexts.sample_n(c.n, &mut rng);
        let costs: Vec<CostVector> = (0..c.n)
            .map(|_| {
                if rng.gen_bool(0.5) {
                    Ok(random_vertex(&mut rng, c.d))
                } else {
                    CostVector::new((0..c.d).map(|_| rng.gen_range(0.0..=1.0)).collect())
                }
            })
            .collect::<Result<_>>()?;
        let qs = (0..c.n).map(|_| random_mixed(&mut rng, c.d, gamma)).collect::<Result<Vec<_>>>()?;
        min_margin = min_margin.min(initial_margin(checker.as_mut(), exp, &contexts, &costs, &qs)?);
    }
    let initial_passed = opts.endpoints == 0 || min_margin >= -INITIAL_TOL;
    let passed = initial_passed && steps.iter().all(|s| s.passed);
    Ok(AdmissibilityReport {
        kind,
        gamma,
        steps,
        endpoints: opts.endpoints,
        min_initial_margin: min_margin,
        initial_passed,
        passed,
    })
}
