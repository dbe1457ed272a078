//! The BISTRO learner.
//!
//! Round `t` proceeds as follows:
//! 1. Draw a playout `ρ`: future contexts `x_{t+1:n}` (from the unlabeled pool,
//!    or the known future in transductive mode) and signs `ε_{t+1:n}`.
//! 2. For each action `j`, query the oracle on the matrix
//!    `[γc̃_1, …, γc̃_{t−1}, e_j, s·ε_{t+1}, …, s·ε_n]` (`s` is the sign scale)
//!    to get `ψ_j`.
//! 3. Water-fill `ψ` into `q*`, averaging over playouts when `m > 1`.
//! 4. Play `q = (1 − γd)·q* + γ·1`.
//! 5. Store the inverse-propensity estimate of the revealed cost.
//!
//! A larger `ψ_j` means the class pays more when forced to action `j` now,
//! so `j` receives more mass.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::erm::{BoxRelaxedErm, ConstraintFunction, ErmOracle, RegularizedErm};
use crate::error::{domain, parameter, Error, Result};
use crate::policy::{
    ips_estimate, mix_small_coordinates, mix_with_uniform, ActionDistribution, Context, CostMatrix,
    EstimatedCostVector, PolicyClass,
};
use crate::rademacher::fill_signs;
use crate::rng::{stream_rng, streams, SimRng};
use crate::strategy::{take_pending, Strategy};
use crate::waterfill::{waterfill, ErmValues};

/// Where the future contexts of a playout come from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HorizonMode {
    /// Sample with replacement from an unlabeled pool.
    #[default]
    IidPool,
    /// The whole context sequence is known in advance.
    Transductive,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BistroConfig {
    pub d: usize,
    pub n: usize,
    pub gamma: f64,
    pub sign_scale: f64,
    pub playouts: usize,
    pub mode: HorizonMode,
    /// Experimental: floor only the coordinates below γ instead of mixing.
    pub partial_mixing: bool,
}

impl BistroConfig {
    pub fn new(d: usize, n: usize, gamma: f64) -> Self {
        Self { d, n, gamma, sign_scale: 2.0, playouts: 1, mode: HorizonMode::IidPool, partial_mixing: false }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return parameter("BISTRO needs at least one action");
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0 / self.d as f64) {
            return parameter(format!("gamma {} outside (0, 1/{}]", self.gamma, self.d));
        }
        if !(self.sign_scale > 0.0 && self.sign_scale.is_finite()) {
            return parameter(format!("sign scale {} must be positive", self.sign_scale));
        }
        if self.playouts == 0 {
            return parameter("at least one playout per round is required");
        }
        Ok(())
    }
}

/// Contexts and estimates of the rounds played so far.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BistroState {
    past_estimates: Vec<EstimatedCostVector>,
    past_contexts: Vec<Context>,
}

impl BistroState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_history(contexts: Vec<Context>, estimates: Vec<EstimatedCostVector>) -> Result<Self> {
        if contexts.len() != estimates.len() {
            return domain("history contexts and estimates differ in length");
        }
        Ok(Self { past_estimates: estimates, past_contexts: contexts })
    }

    /// Number of completed rounds, `t − 1`.
    pub fn len(&self) -> usize {
        self.past_contexts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.past_contexts.is_empty()
    }

    pub fn past_estimates(&self) -> &[EstimatedCostVector] {
        &self.past_estimates
    }

    pub fn past_contexts(&self) -> &[Context] {
        &self.past_contexts
    }

    pub fn push(&mut self, x: Context, estimate: EstimatedCostVector) {
        self.past_contexts.push(x);
        self.past_estimates.push(estimate);
    }
}

/// One playout `ρ = (x_{t+1:n}, ε_{t+1:n})`.
#[derive(Clone, Debug, PartialEq)]
pub struct PlayoutDraw {
    pub future_contexts: Vec<Context>,
    pub future_signs: Vec<Vec<f64>>,
}

fn check_draw(state: &BistroState, draw: &PlayoutDraw, cfg: &BistroConfig) -> Result<()> {
    let t = state.len() + 1;
    if t > cfg.n {
        return domain(format!("round {t} beyond horizon {}", cfg.n));
    }
    let future = cfg.n - t;
    if draw.future_contexts.len() != future || draw.future_signs.len() != future {
        return domain(format!(
            "playout has {} contexts and {} sign vectors, round {t} of {} needs {future}",
            draw.future_contexts.len(),
            draw.future_signs.len(),
            cfg.n
        ));
    }
    for eps in &draw.future_signs {
        if eps.len() != cfg.d || eps.iter().any(|e| e.abs() != 1.0) {
            return domain("playout signs must be ±1 vectors of length d");
        }
    }
    if let Some(bad) = state.past_estimates.iter().find(|e| e.dim() != cfg.d) {
        return domain(format!("estimate of dimension {} for d = {}", bad.dim(), cfg.d));
    }
    Ok(())
}

/// The query matrix with column `t` left at zero.
pub fn assemble_base_matrix(state: &BistroState, draw: &PlayoutDraw, cfg: &BistroConfig) -> Result<CostMatrix> {
    check_draw(state, draw, cfg)?;
    let t0 = state.len();
    let mut y = CostMatrix::zeros(cfg.d, cfg.n);
    for (s, est) in state.past_estimates.iter().enumerate() {
        let (j, v) = est.support();
        y.set(j, s, cfg.gamma * v);
    }
    for (k, eps) in draw.future_signs.iter().enumerate() {
        for (slot, e) in y.column_mut(t0 + 1 + k).iter_mut().zip(eps) {
            *slot = cfg.sign_scale * e;
        }
    }
    Ok(y)
}

/// `[γc̃_1, …, γc̃_{t−1}, e_j, s·ε_{t+1}, …, s·ε_n]`.
pub fn assemble_query_matrix(
    state: &BistroState,
    draw: &PlayoutDraw,
    j: usize,
    cfg: &BistroConfig,
) -> Result<CostMatrix> {
    if j >= cfg.d {
        return domain(format!("action {j} out of range for d = {}", cfg.d));
    }
    let mut y = assemble_base_matrix(state, draw, cfg)?;
    y.set(j, state.len(), 1.0);
    Ok(y)
}

/// `x_1, …, x_{t−1}, x_t, x_{t+1}, …, x_n` for a playout.
pub fn query_contexts(state: &BistroState, x_t: Context, draw: &PlayoutDraw) -> Vec<Context> {
    let mut contexts = Vec::with_capacity(state.len() + 1 + draw.future_contexts.len());
    contexts.extend_from_slice(&state.past_contexts);
    contexts.push(x_t);
    contexts.extend_from_slice(&draw.future_contexts);
    contexts
}

/// `ψ_j` for every action: exactly `d` oracle queries.
pub fn playout_psi(
    oracle: &dyn ErmOracle,
    state: &BistroState,
    x_t: Context,
    draw: &PlayoutDraw,
    cfg: &BistroConfig,
) -> Result<ErmValues> {
    let contexts = query_contexts(state, x_t, draw);
    let mut y = assemble_base_matrix(state, draw, cfg)?;
    let t0 = state.len();
    let mut psi = Vec::with_capacity(cfg.d);
    for j in 0..cfg.d {
        y.set(j, t0, 1.0);
        psi.push(oracle.value(&contexts, &y)?);
        y.set(j, t0, 0.0);
    }
    Ok(ErmValues(psi))
}

/// One Monte-Carlo sample of the relaxation after `t` rounds:
/// `−ERM([c̃_1, …, c̃_t, (s/γ)ε_{t+1}, …, (s/γ)ε_n]) + (n − t)·d·γ`.
///
/// `history` holds `t` rounds and `draw` the remaining `n − t` ones.
pub fn relaxation_sample(
    oracle: &dyn ErmOracle,
    history: &BistroState,
    draw: &PlayoutDraw,
    cfg: &BistroConfig,
) -> Result<f64> {
    let t = history.len();
    if t > cfg.n || draw.future_contexts.len() != cfg.n - t || draw.future_signs.len() != cfg.n - t {
        return domain("history and playout do not cover the horizon");
    }
    let mut contexts = history.past_contexts.clone();
    contexts.extend_from_slice(&draw.future_contexts);
    let mut y = CostMatrix::zeros(cfg.d, cfg.n);
    for (s, est) in history.past_estimates.iter().enumerate() {
        let (j, v) = est.support();
        y.set(j, s, v);
    }
    let scale = cfg.sign_scale / cfg.gamma;
    for (k, eps) in draw.future_signs.iter().enumerate() {
        for (slot, e) in y.column_mut(t + k).iter_mut().zip(eps) {
            *slot = scale * e;
        }
    }
    let slack = ((cfg.n - t) * cfg.d) as f64 * cfg.gamma;
    Ok(slack - oracle.value(&contexts, &y)?)
}

/// Source of playout contexts.
#[derive(Clone, Debug, PartialEq)]
pub enum ContextSource {
    Pool(Vec<Context>),
    Known(Vec<Context>),
}

/// The BISTRO strategy with any value-of-ERM oracle.
pub struct Bistro {
    cfg: BistroConfig,
    oracle: Arc<dyn ErmOracle>,
    source: ContextSource,
    state: BistroState,
    pending: Option<(Context, ActionDistribution)>,
    context_rng: SimRng,
    sign_rng: SimRng,
    name: &'static str,
}

impl Bistro {
    /// Playout randomness is drawn from dedicated streams of `seed`.
    pub fn new(cfg: BistroConfig, oracle: Arc<dyn ErmOracle>, source: ContextSource, seed: u64) -> Result<Self> {
        cfg.validate()?;
        if oracle.d() != cfg.d {
            return Err(Error::Config(format!("oracle has d = {}, config has d = {}", oracle.d(), cfg.d)));
        }
        match (&source, cfg.mode) {
            (ContextSource::Pool(pool), HorizonMode::IidPool) => {
                if pool.is_empty() && cfg.n > 1 {
                    return Err(Error::Config("unlabeled pool is empty".into()));
                }
            }
            (ContextSource::Known(known), HorizonMode::Transductive) => {
                if known.len() < cfg.n {
                    return domain(format!("{} known contexts for horizon {}", known.len(), cfg.n));
                }
            }
            _ => return Err(Error::Config("context source does not match the horizon mode".into())),
        }
        Ok(Self {
            cfg,
            oracle,
            source,
            state: BistroState::new(),
            pending: None,
            context_rng: stream_rng(seed, streams::PLAYOUT_CONTEXTS),
            sign_rng: stream_rng(seed, streams::PLAYOUT_SIGNS),
            name: "bistro",
        })
    }

    /// Penalized variant: `ψ_j` minimizes the linear objective plus
    /// `(λ/γ)·C(M)` over the unconstrained class.
    pub fn regularized(
        cfg: BistroConfig,
        class: Arc<PolicyClass>,
        constraint: Arc<dyn ConstraintFunction>,
        lambda: f64,
        source: ContextSource,
        seed: u64,
    ) -> Result<Self> {
        cfg.validate()?;
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return parameter(format!("lambda {lambda} must be finite and nonnegative"));
        }
        let oracle = RegularizedErm::new(class, constraint, lambda / cfg.gamma)?;
        let mut s = Self::new(cfg, Arc::new(oracle), source, seed)?;
        s.name = "bistro_regularized";
        Ok(s)
    }

    /// Superset variant with the closed-form box oracle.
    pub fn relaxed(cfg: BistroConfig, source: ContextSource, seed: u64) -> Result<Self> {
        let oracle = Arc::new(BoxRelaxedErm::new(cfg.d));
        let mut s = Self::new(cfg, oracle, source, seed)?;
        s.name = "bistro_relaxed";
        Ok(s)
    }

    pub fn config(&self) -> &BistroConfig {
        &self.cfg
    }

    pub fn state(&self) -> &BistroState {
        &self.state
    }

    pub fn oracle(&self) -> &Arc<dyn ErmOracle> {
        &self.oracle
    }

    fn draw_playout(&mut self, t0: usize) -> Result<PlayoutDraw> {
        let future = self.cfg.n - t0 - 1;
        let future_contexts = match &self.source {
            ContextSource::Pool(pool) => {
                (0..future).map(|_| pool[self.context_rng.gen_range(0..pool.len())]).collect()
            }
            ContextSource::Known(known) => {
                if known.len() < self.cfg.n {
                    return domain("known context sequence exhausted");
                }
                known[t0 + 1..self.cfg.n].to_vec()
            }
        };
        let future_signs = (0..future)
            .map(|_| {
                let mut eps = vec![0.0; self.cfg.d];
                fill_signs(&mut self.sign_rng, &mut eps);
                eps
            })
            .collect();
        Ok(PlayoutDraw { future_contexts, future_signs })
    }
}

impl Strategy for Bistro {
    fn name(&self) -> &str {
        self.name
    }

    fn d(&self) -> usize {
        self.cfg.d
    }

    fn distribution(&mut self, x_t: Context) -> Result<ActionDistribution> {
        if self.pending.is_some() {
            return domain("distribution requested twice in one round");
        }
        let t0 = self.state.len();
        if t0 >= self.cfg.n {
            return domain(format!("horizon {} exhausted", self.cfg.n));
        }
        if let ContextSource::Known(known) = &self.source {
            if known.get(t0) != Some(&x_t) {
                return domain(format!("context at round {} differs from the known sequence", t0 + 1));
            }
        }
        let d = self.cfg.d;
        let mut acc = vec![0.0; d];
        for _ in 0..self.cfg.playouts {
            let draw = self.draw_playout(t0)?;
            let psi = playout_psi(self.oracle.as_ref(), &self.state, x_t, &draw, &self.cfg)?;
            let q = waterfill(&psi)?;
            acc.iter_mut().zip(q.probs()).for_each(|(a, p)| *a += p);
        }
        if self.cfg.playouts > 1 {
            let m = self.cfg.playouts as f64;
            acc.iter_mut().for_each(|a| *a /= m);
        }
        let q_star = ActionDistribution::new(acc)?;
        let q = if self.cfg.partial_mixing {
            mix_small_coordinates(&q_star, self.cfg.gamma)?
        } else {
            mix_with_uniform(&q_star, self.cfg.gamma)?
        };
        self.pending = Some((x_t, q.clone()));
        Ok(q)
    }

    fn observe(&mut self, action: usize, observed_cost: f64) -> Result<()> {
        let (x, q) = take_pending(&mut self.pending)?;
        let est = ips_estimate(observed_cost, action, &q)?;
        self.state.push(x, est);
        Ok(())
    }

    fn oracle_calls(&self) -> u64 {
        self.oracle.calls()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::erm::{exact_erm_value, ExactErm, PairwiseDisagreement};
    use crate::policy::{ContextUniverse, Policy};
    use crate::waterfill::minimax_value;
    use rand::SeedableRng;

    fn constants(which: &[usize]) -> Arc<PolicyClass> {
        let u = Arc::new(ContextUniverse::new(1).unwrap());
        Arc::new(PolicyClass::new(2, u, which.iter().map(|&a| Policy::constant(1, a)).collect()).unwrap())
    }

    fn exact(class: &Arc<PolicyClass>) -> Arc<dyn ErmOracle> {
        Arc::new(ExactErm::new(Arc::clone(class)))
    }

    fn one_round(class: &Arc<PolicyClass>, gamma: f64) -> ActionDistribution {
        let cfg = BistroConfig::new(2, 1, gamma);
        let mut b = Bistro::new(cfg, exact(class), ContextSource::Pool(vec![Context(0)]), 0).unwrap();
        b.distribution(Context(0)).unwrap()
    }

    #[test]
    fn assembles_playout_columns() {
        let cfg = BistroConfig::new(2, 2, 0.25);
        let draw = PlayoutDraw { future_contexts: vec![Context(0)], future_signs: vec![vec![1.0, -1.0]] };
        let y = assemble_query_matrix(&BistroState::new(), &draw, 0, &cfg).unwrap();
        assert_eq!(y.column(0), &[1.0, 0.0]);
        assert_eq!(y.column(1), &[2.0, -2.0]);

        let q = ActionDistribution::new(vec![0.25, 0.75]).unwrap();
        let mut state = BistroState::new();
        state.push(Context(0), ips_estimate(1.0, 0, &q).unwrap());
        let last = PlayoutDraw { future_contexts: vec![], future_signs: vec![] };
        let y = assemble_query_matrix(&state, &last, 1, &cfg).unwrap();
        assert_eq!(y.column(0), &[1.0, 0.0]);
        assert_eq!(y.column(1), &[0.0, 1.0]);

        assert!(assemble_query_matrix(&state, &draw, 0, &cfg).is_err());
        assert!(assemble_query_matrix(&state, &last, 2, &cfg).is_err());
    }

    #[test]
    fn symmetric_class_plays_uniform() {
        for gamma in [0.05, 0.2, 0.5] {
            let q = one_round(&constants(&[0, 1]), gamma);
            assert_eq!(q.probs(), &[0.5, 0.5]);
        }
    }

    #[test]
    fn singleton_class_leans_to_its_action() {
        let q = one_round(&constants(&[0]), 0.1);
        assert!((q.get(0) - 0.9).abs() < 1e-15 && (q.get(1) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn counts_d_times_playouts_calls() {
        let class = constants(&[0, 1]);
        let mut cfg = BistroConfig::new(2, 5, 0.2);
        cfg.playouts = 3;
        let mut b = Bistro::new(cfg, exact(&class), ContextSource::Pool(vec![Context(0)]), 1).unwrap();
        for t in 1..=5u64 {
            b.distribution(Context(0)).unwrap();
            b.observe(1, 0.5).unwrap();
            assert_eq!(b.oracle_calls(), 6 * t);
        }
        assert!(b.distribution(Context(0)).is_err());
    }

    #[test]
    fn protocol_misuse_is_rejected() {
        let class = constants(&[0, 1]);
        let mut b = Bistro::new(BistroConfig::new(2, 3, 0.2), exact(&class), ContextSource::Pool(vec![Context(0)]), 1)
            .unwrap();
        assert!(b.observe(0, 0.1).is_err());
        b.distribution(Context(0)).unwrap();
        assert!(b.distribution(Context(0)).is_err());

        let mut cfg = BistroConfig::new(2, 3, 0.2);
        cfg.mode = HorizonMode::Transductive;
        assert!(Bistro::new(cfg.clone(), exact(&class), ContextSource::Known(vec![Context(0)]), 1).is_err());
        assert!(Bistro::new(cfg.clone(), exact(&class), ContextSource::Pool(vec![Context(0)]), 1).is_err());
        assert!(Bistro::new(BistroConfig::new(2, 3, 0.6), exact(&class), ContextSource::Pool(vec![Context(0)]), 1).is_err());
    }

    fn random_history(rng: &mut SimRng, t: usize, d: usize, size: usize, gamma: f64) -> BistroState {
        let mut state = BistroState::new();
        for _ in 0..t {
            let mut p: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();
            let total: f64 = p.iter().sum();
            p.iter_mut().for_each(|v| *v /= total);
            let q = mix_with_uniform(&ActionDistribution::new(p).unwrap(), gamma).unwrap();
            let a = rng.gen_range(0..d);
            state.push(Context(rng.gen_range(0..size)), ips_estimate(rng.gen_range(0.0..=1.0), a, &q).unwrap());
        }
        state
    }

    fn random_draw(rng: &mut SimRng, future: usize, d: usize, size: usize) -> PlayoutDraw {
        PlayoutDraw {
            future_contexts: (0..future).map(|_| Context(rng.gen_range(0..size))).collect(),
            future_signs: (0..future)
                .map(|_| (0..d).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect())
                .collect(),
        }
    }

    #[test]
    fn assembled_columns_stay_in_range() {
        let mut rng = SimRng::seed_from_u64(11);
        for _ in 0..200 {
            let d = rng.gen_range(1..5);
            let n = rng.gen_range(1..10);
            let t = rng.gen_range(1..=n);
            let cfg = BistroConfig { sign_scale: 1.5, ..BistroConfig::new(d, n, rng.gen_range(0.01..=1.0 / d as f64)) };
            let state = random_history(&mut rng, t - 1, d, 3, cfg.gamma);
            let draw = random_draw(&mut rng, n - t, d, 3);
            let y = assemble_query_matrix(&state, &draw, rng.gen_range(0..d), &cfg).unwrap();
            for s in 0..t - 1 {
                assert!(y.column(s).iter().all(|v| (0.0..=1.0).contains(v)));
            }
            for s in t..n {
                assert!(y.column(s).iter().all(|v| v.abs() == 1.5));
            }
        }
    }

    // Grid minimax over the candidate columns {e_1, …, e_d} and optionally the
    // origin, whose objective term is −ψ_0.
    fn grid_value(psi: &[f64], origin: Option<f64>, resolution: usize) -> f64 {
        let mut best = f64::INFINITY;
        for a in 0..=resolution {
            let q = [a as f64 / resolution as f64, 1.0 - a as f64 / resolution as f64];
            let mut worst = (0..2).map(|j| q[j] - psi[j]).fold(f64::NEG_INFINITY, f64::max);
            if let Some(psi0) = origin {
                worst = worst.max(-psi0);
            }
            best = best.min(worst);
        }
        best
    }

    #[test]
    fn origin_never_changes_the_minimax_problem() {
        let mut rng = SimRng::seed_from_u64(5);
        let u = Arc::new(ContextUniverse::new(3).unwrap());
        for _ in 0..150 {
            let policies = (0..rng.gen_range(1..5))
                .map(|_| Policy::Table((0..3).map(|_| rng.gen_range(0..2)).collect()))
                .collect();
            let class = PolicyClass::new(2, Arc::clone(&u), policies).unwrap();
            let n = rng.gen_range(1..5);
            let t = rng.gen_range(1..=n);
            let cfg = BistroConfig::new(2, n, rng.gen_range(0.05..=0.5));
            let state = random_history(&mut rng, t - 1, 2, 3, cfg.gamma);
            let draw = random_draw(&mut rng, n - t, 2, 3);
            let x_t = Context(rng.gen_range(0..3));
            let oracle = ExactErm::new(Arc::new(class.clone()));
            let psi = playout_psi(&oracle, &state, x_t, &draw, &cfg).unwrap();
            let contexts = query_contexts(&state, x_t, &draw);
            let psi0 = exact_erm_value(&class, &contexts, &assemble_base_matrix(&state, &draw, &cfg).unwrap()).unwrap();
            let with = grid_value(psi.as_slice(), Some(psi0), 2000);
            let without = grid_value(psi.as_slice(), None, 2000);
            assert!((with - without).abs() < 1e-12, "{with} vs {without}");
            let q = waterfill(&psi).unwrap();
            assert!(minimax_value(&q, &psi) >= -psi0 - 1e-12);
        }
    }

    #[test]
    fn box_oracle_values_lower_bound_exact_ones() {
        let mut rng = SimRng::seed_from_u64(8);
        let class = Arc::new(PolicyClass::all_labelings(2, Arc::new(ContextUniverse::new(2).unwrap())).unwrap());
        let exact_oracle = ExactErm::new(Arc::clone(&class));
        let box_oracle = BoxRelaxedErm::new(2);
        for _ in 0..100 {
            let n = rng.gen_range(1..6);
            let t = rng.gen_range(1..=n);
            let cfg = BistroConfig::new(2, n, 0.3);
            let state = random_history(&mut rng, t - 1, 2, 2, cfg.gamma);
            let draw = random_draw(&mut rng, n - t, 2, 2);
            let a = playout_psi(&box_oracle, &state, Context(0), &draw, &cfg).unwrap();
            let b = playout_psi(&exact_oracle, &state, Context(0), &draw, &cfg).unwrap();
            assert!(a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| x <= y));
        }
    }

    #[test]
    fn zero_lambda_matches_plain_bistro() {
        let u = Arc::new(ContextUniverse::new(2).unwrap());
        let class = Arc::new(PolicyClass::all_labelings(2, u).unwrap());
        let pool = vec![Context(0), Context(1)];
        let cfg = BistroConfig::new(2, 6, 0.2);
        let mut plain = Bistro::new(cfg.clone(), exact(&class), ContextSource::Pool(pool.clone()), 4).unwrap();
        let mut reg = Bistro::regularized(
            cfg,
            Arc::clone(&class),
            Arc::new(PairwiseDisagreement::uniform()),
            0.0,
            ContextSource::Pool(pool),
            4,
        )
        .unwrap();
        for t in 0..6 {
            let x = Context(t % 2);
            let a = plain.distribution(x).unwrap();
            let b = reg.distribution(x).unwrap();
            assert_eq!(a, b);
            plain.observe(t % 2, 0.3).unwrap();
            reg.observe(t % 2, 0.3).unwrap();
        }
    }

    #[test]
    fn transductive_matches_pool_on_one_context() {
        let class = constants(&[0, 1]);
        let n = 8;
        let mut pool_cfg = BistroConfig::new(2, n, 0.2);
        pool_cfg.playouts = 2;
        let trans_cfg = BistroConfig { mode: HorizonMode::Transductive, ..pool_cfg.clone() };
        let mut a = Bistro::new(pool_cfg, exact(&class), ContextSource::Pool(vec![Context(0); 10]), 3).unwrap();
        let mut b = Bistro::new(trans_cfg, exact(&class), ContextSource::Known(vec![Context(0); n]), 3).unwrap();
        for t in 0..n {
            assert_eq!(a.distribution(Context(0)).unwrap(), b.distribution(Context(0)).unwrap());
            a.observe(t % 2, 0.7).unwrap();
            b.observe(t % 2, 0.7).unwrap();
        }
    }

    #[test]
    fn final_relaxation_dominates_negative_benchmark() {
        // with t = n the relaxation is −ERM of the estimates, no randomness
        let class = constants(&[0, 1]);
        let oracle = exact(&class);
        let cfg = BistroConfig::new(2, 2, 0.25);
        let q = ActionDistribution::uniform(2);
        let mut h = BistroState::new();
        h.push(Context(0), ips_estimate(0.5, 0, &q).unwrap());
        h.push(Context(0), ips_estimate(0.25, 1, &q).unwrap());
        let none = PlayoutDraw { future_contexts: vec![], future_signs: vec![] };
        let v = relaxation_sample(oracle.as_ref(), &h, &none, &cfg).unwrap();
        assert!((v + 0.5).abs() < 1e-15);
    }
}
