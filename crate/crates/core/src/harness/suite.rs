//! Building experiments from a config and running seed suites.

use std::path::Path;
use std::sync::Arc;

use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;

use crate::adversarial::{reduction_bound_at, reduction_gamma, BanditReduction, ExpWeightsRelaxation, FullInfoRelaxation};
use crate::bistro::{Bistro, BistroConfig, ContextSource, HorizonMode};
use crate::erm::{box_rademacher, ConstraintFunction, ErmOracle, ExactErm, NoisyErm, RegularizedErm};
use crate::error::{Error, Result};
use crate::harness::config::{Algorithm, ContextDistDoc, CostProcessDoc, ExperimentConfig};
use crate::harness::env::{load_cost_table, ArgmaxPunish, CostProcess, Environment};
use crate::harness::episode::{expected_regret, realized_regret, run_episode_with_contexts, Benchmark, Transcript};
use crate::policy::{Context, ContextDistribution, ContextUniverse, CostMatrix, CostVector, PolicyClass};
use crate::rademacher::{
    draw_sign_sample, initial_relaxation_value, rademacher_estimate, tune_gamma, RademacherEstimate,
};
use crate::rng::{stream_rng, streams};
use crate::strategy::{EpsilonGreedy, FollowTheLeader, Strategy, UniformStrategy};

/// Largest `|X|^n · 2^{n·d}` for which the regularized bound is enumerated
/// instead of sampled.
pub const MAX_EXACT_BOUND_TERMS: u64 = 1 << 22;

/// Exploration rate and theoretical bound chosen for an experiment.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Tuning {
    pub gamma: Option<f64>,
    pub rad: Option<RademacherEstimate>,
    pub bound: Option<f64>,
    /// `Rel_full(∅)` for the reduction.
    pub rel_full: Option<f64>,
    pub eta: Option<f64>,
}

/// A config resolved into concrete objects.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub universe: Arc<ContextUniverse>,
    pub class: Arc<PolicyClass>,
    pub env: Environment,
    pub constraint: Option<Arc<dyn ConstraintFunction>>,
    pub tuning: Tuning,
}

fn build_universe(doc: &ContextDistDoc, class_universe: Option<usize>) -> Result<(Arc<ContextUniverse>, ContextDistribution)> {
    match doc {
        ContextDistDoc::Probs(p) => Ok((Arc::new(ContextUniverse::new(p.len())?), ContextDistribution::new(p.clone())?)),
        ContextDistDoc::Spec { universe, probs, features } => {
            let size = features
                .as_ref()
                .map(Vec::len)
                .or(probs.as_ref().map(Vec::len))
                .or(*universe)
                .or(class_universe)
                .ok_or_else(|| Error::Config("context_dist needs `universe`, `probs` or `features`".into()))?;
            if universe.is_some_and(|u| u != size) {
                return Err(Error::Config("context_dist sizes disagree".into()));
            }
            let u = match features {
                Some(f) => ContextUniverse::with_features(f.clone())?,
                None => ContextUniverse::new(size)?,
            };
            let dist = match probs {
                Some(p) => ContextDistribution::new(p.clone())?,
                None => ContextDistribution::uniform(size)?,
            };
            Ok((Arc::new(u), dist))
        }
    }
}

fn build_costs(cfg: &ExperimentConfig) -> Result<CostProcess> {
    match &cfg.cost_process {
        CostProcessDoc::FixedTable { path: Some(path), rows: None } => {
            Ok(CostProcess::FixedTable(load_cost_table(&cfg.resolve(path), cfg.d)?))
        }
        CostProcessDoc::FixedTable { path: None, rows: Some(rows) } => Ok(CostProcess::FixedTable(
            rows.iter().map(|r| CostVector::new(r.clone())).collect::<Result<_>>()?,
        )),
        CostProcessDoc::FixedTable { .. } => Err(Error::Config("fixed_table needs exactly one of `path`, `rows`".into())),
        CostProcessDoc::IidBernoulli { means } => Ok(CostProcess::IidBernoulli(means.clone())),
        CostProcessDoc::Adaptive { rule } if rule == "argmax_punish" => {
            Ok(CostProcess::Adaptive(Box::new(ArgmaxPunish { d: cfg.d })))
        }
        CostProcessDoc::Adaptive { rule } => Err(Error::Config(format!("unknown adaptive rule `{rule}`"))),
    }
}

/// `E_{x,ε} sup_M {−γ⁻¹·Σ_t M_tᵀε_t − λ·C(M)} + n·d·γ + λ·K`, enumerated when
/// small and sampled otherwise. The supremum is `−γ⁻¹` times a regularized
/// ERM value with penalty `γλ` on the sign matrix.
#[allow(clippy::too_many_arguments)]
pub fn regularized_bound(
    class: &Arc<PolicyClass>,
    constraint: &Arc<dyn ConstraintFunction>,
    dist: &ContextDistribution,
    n: usize,
    gamma: f64,
    lambda: f64,
    k: f64,
    samples: usize,
    seed: u64,
) -> Result<RademacherEstimate> {
    let d = class.d();
    let oracle = RegularizedErm::new(Arc::clone(class), Arc::clone(constraint), gamma * lambda)?;
    let sup = |contexts: &[Context], eps: &CostMatrix| -> Result<f64> { Ok(-oracle.value(contexts, eps)? / gamma) };
    let size = dist.size() as u64;
    let sequences = size.checked_pow(n as u32);
    let bits = n * d;
    let tail = (n * d) as f64 * gamma + lambda * k;
    let exact_terms = sequences.and_then(|s| if bits < 40 { s.checked_mul(1 << bits) } else { None });
    if exact_terms.is_some_and(|t| t <= MAX_EXACT_BOUND_TERMS) {
        let per_seq: Vec<f64> = (0..sequences.unwrap_or(0))
            .into_par_iter()
            .map(|code| {
                let mut c = code;
                let mut weight = 1.0;
                let contexts: Vec<Context> = (0..n)
                    .map(|_| {
                        let i = (c % size) as usize;
                        c /= size;
                        weight *= dist.probs()[i];
                        Context(i)
                    })
                    .collect();
                if weight == 0.0 {
                    return Ok(0.0);
                }
                let mut eps = CostMatrix::zeros(d, n);
                let mut total = 0.0;
                for pattern in 0u64..1 << bits {
                    for t in 0..n {
                        for j in 0..d {
                            eps.set(j, t, if (pattern >> (t * d + j)) & 1 == 1 { 1.0 } else { -1.0 });
                        }
                    }
                    total += sup(&contexts, &eps)?;
                }
                Ok(weight * total / (1u64 << bits) as f64)
            })
            .collect::<Result<_>>()?;
        return Ok(RademacherEstimate { mean: per_seq.iter().sum::<f64>() + tail, std_error: 0.0, samples: 0 });
    }
    let values: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|r| {
            let (contexts, eps) = draw_sign_sample(dist, n, d, seed, r)?;
            Ok(sup(&contexts, &eps)? + tail)
        })
        .collect::<Result<_>>()?;
    Ok(RademacherEstimate::from_samples(&values))
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let (universe, dist) = build_universe(&config.context_dist, config.policy_class.universe)?;
        let class = Arc::new(config.policy_class.build(Some(Arc::clone(&universe)))?);
        if class.d() != config.d {
            return Err(Error::Config(format!("policy class has d = {}, config has d = {}", class.d(), config.d)));
        }
        let mut env = Environment::new(config.d, Arc::clone(&universe), dist, build_costs(&config)?)?;
        env.pool_factor = config.pool_factor;
        env.check_horizon(config.n)?;
        let constraint = config.constraint.as_ref().map(|c| c.build()).transpose()?;
        let mut exp = Self { config, universe, class, env, constraint, tuning: Tuning::default() };
        exp.tuning = exp.tune()?;
        Ok(exp)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::new(ExperimentConfig::load(path)?)
    }

    /// Same experiment with another algorithm.
    pub fn with_algorithm(&self, algorithm: Algorithm) -> Result<Self> {
        let mut cfg = self.config.clone();
        cfg.algorithm = algorithm;
        Self::new(cfg)
    }

    fn rademacher(&self) -> Result<RademacherEstimate> {
        let oracle = ExactErm::new(Arc::clone(&self.class));
        let c = &self.config;
        rademacher_estimate(&oracle, &self.env.contexts, c.n, c.rad_samples, c.rad_seed)
    }

    fn tune(&self) -> Result<Tuning> {
        let c = &self.config;
        let (n, d) = (c.n, c.d);
        let fixed = c.gamma.value()?;
        let tuning = match c.algorithm {
            Algorithm::Bistro | Algorithm::BistroRelaxed => {
                let rad = if c.algorithm == Algorithm::BistroRelaxed {
                    RademacherEstimate { mean: box_rademacher(n, d), std_error: 0.0, samples: 0 }
                } else {
                    self.rademacher()?
                };
                let gamma = match fixed {
                    Some(g) => g,
                    None => tune_gamma(rad.mean, n, d)?,
                };
                let bound = initial_relaxation_value(rad.mean, n, d, gamma, 2.0);
                Tuning { gamma: Some(gamma), rad: Some(rad), bound: Some(bound), ..Tuning::default() }
            }
            Algorithm::BistroRegularized => {
                let rad = self.rademacher()?;
                let gamma = match fixed {
                    Some(g) => g,
                    None => tune_gamma(rad.mean, n, d)?,
                };
                let constraint = self.constraint.as_ref().ok_or_else(|| Error::Config("missing constraint".into()))?;
                let k = c.k.ok_or_else(|| Error::Config("missing K".into()))?;
                let term = regularized_bound(
                    &self.class,
                    constraint,
                    &self.env.contexts,
                    n,
                    gamma,
                    c.lambda,
                    k,
                    c.rad_samples,
                    c.rad_seed,
                )?;
                Tuning { gamma: Some(gamma), rad: Some(rad), bound: Some(term.mean), ..Tuning::default() }
            }
            Algorithm::AdversarialReduction => {
                let eta = c.eta.unwrap_or_else(|| ExpWeightsRelaxation::default_eta(self.class.len(), n));
                let rel = ExpWeightsRelaxation::new(Arc::clone(&self.class), n, eta)?;
                let rel0 = rel.initial_value();
                let gamma = match fixed {
                    Some(g) => g,
                    None => reduction_gamma(rel0, n, d)?,
                };
                Tuning {
                    gamma: Some(gamma),
                    bound: Some(reduction_bound_at(rel0, n, d, gamma)),
                    rel_full: Some(rel0),
                    eta: Some(eta),
                    ..Tuning::default()
                }
            }
            Algorithm::Uniform | Algorithm::Ftl | Algorithm::Egreedy => Tuning::default(),
        };
        Ok(tuning)
    }

    pub fn benchmark(&self) -> Benchmark<'_> {
        Benchmark {
            class: &self.class,
            constraint: match (&self.constraint, self.config.k) {
                (Some(c), Some(k)) => Some((c.as_ref(), k)),
                _ => None,
            },
        }
    }

    fn bistro_config(&self) -> Result<BistroConfig> {
        let c = &self.config;
        let gamma = self.tuning.gamma.ok_or_else(|| Error::Invariant("untuned BISTRO".into()))?;
        Ok(BistroConfig {
            d: c.d,
            n: c.n,
            gamma,
            sign_scale: c.sign_scale,
            playouts: c.playouts,
            mode: c.horizon_mode,
            partial_mixing: c.partial_mixing,
        })
    }

    /// Strategy for one episode whose context sequence is `contexts`.
    pub fn build_strategy(&self, seed: u64, contexts: &[Context]) -> Result<Box<dyn Strategy>> {
        let c = &self.config;
        let source = || match c.horizon_mode {
            HorizonMode::IidPool => ContextSource::Pool(self.env.draw_pool(c.n, seed)),
            HorizonMode::Transductive => ContextSource::Known(contexts.to_vec()),
        };
        Ok(match c.algorithm {
            Algorithm::Bistro => {
                let exact: Arc<dyn ErmOracle> = Arc::new(ExactErm::new(Arc::clone(&self.class)));
                let oracle: Arc<dyn ErmOracle> = if c.delta > 0.0 {
                    let noise_seed = stream_rng(seed, streams::ORACLE_NOISE).next_u64();
                    Arc::new(NoisyErm::new(exact, c.delta, noise_seed)?)
                } else {
                    exact
                };
                Box::new(Bistro::new(self.bistro_config()?, oracle, source(), seed)?)
            }
            Algorithm::BistroRegularized => Box::new(Bistro::regularized(
                self.bistro_config()?,
                Arc::clone(&self.class),
                Arc::clone(self.constraint.as_ref().ok_or_else(|| Error::Config("missing constraint".into()))?),
                c.lambda,
                source(),
                seed,
            )?),
            Algorithm::BistroRelaxed => Box::new(Bistro::relaxed(self.bistro_config()?, source(), seed)?),
            Algorithm::AdversarialReduction => {
                let eta = self.tuning.eta.ok_or_else(|| Error::Invariant("untuned reduction".into()))?;
                let rel: Arc<dyn FullInfoRelaxation> =
                    Arc::new(ExpWeightsRelaxation::new(Arc::clone(&self.class), c.n, eta)?);
                let gamma = self.tuning.gamma.ok_or_else(|| Error::Invariant("untuned reduction".into()))?;
                Box::new(BanditReduction::new(rel, gamma)?)
            }
            Algorithm::Uniform => Box::new(UniformStrategy::new(c.d)),
            Algorithm::Ftl => Box::new(FollowTheLeader::new(Arc::clone(&self.class))),
            Algorithm::Egreedy => Box::new(EpsilonGreedy::new(Arc::clone(&self.class), c.epsilon)?),
        })
    }

    pub fn run_seed(&self, seed: u64) -> Result<EpisodeOutcome> {
        let run = || -> Result<EpisodeOutcome> {
            let contexts = self.env.draw_contexts(self.config.n, seed);
            let mut strategy = self.build_strategy(seed, &contexts)?;
            let transcript = run_episode_with_contexts(strategy.as_mut(), &self.env, &contexts, seed)?;
            let bench = self.benchmark();
            Ok(EpisodeOutcome {
                seed,
                expected_regret: expected_regret(&transcript, &bench)?,
                realized_regret: realized_regret(&transcript, &bench)?,
                transcript,
            })
        };
        run().map_err(|e| Error::Episode { seed, source: Box::new(e) })
    }
}

#[derive(Clone, Debug)]
pub struct EpisodeOutcome {
    pub seed: u64,
    pub transcript: Transcript,
    pub expected_regret: f64,
    pub realized_regret: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteSummary {
    pub algorithm: Algorithm,
    pub episodes: usize,
    pub d: usize,
    pub n: usize,
    pub mean_regret: f64,
    pub std_regret: f64,
    pub mean_realized_regret: f64,
    pub bound: Option<f64>,
    pub gamma_used: Option<f64>,
    pub rad_estimate: Option<f64>,
    pub rad_stderr: Option<f64>,
    pub oracle_calls_total: u64,
    /// Episodes whose expected regret exceeds the bound.
    pub violations: usize,
    pub mean_within_bound: Option<bool>,
}

impl SuiteSummary {
    /// Standard error of `mean_regret`.
    pub fn stderr_regret(&self) -> f64 {
        if self.episodes == 0 {
            0.0
        } else {
            self.std_regret / (self.episodes as f64).sqrt()
        }
    }
}

pub struct SuiteResult {
    pub summary: SuiteSummary,
    pub outcomes: Vec<EpisodeOutcome>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let k = values.len();
    if k == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / k as f64;
    let std = if k > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

impl Experiment {
    /// Runs every seed (in parallel) and aggregates in seed order.
    pub fn run_suite(&self, seeds: &[u64]) -> Result<SuiteResult> {
        let outcomes: Vec<EpisodeOutcome> = seeds.par_iter().map(|&s| self.run_seed(s)).collect::<Result<_>>()?;
        let regrets: Vec<f64> = outcomes.iter().map(|o| o.expected_regret).collect();
        let realized: Vec<f64> = outcomes.iter().map(|o| o.realized_regret).collect();
        let (mean_regret, std_regret) = mean_std(&regrets);
        let bound = self.tuning.bound;
        let summary = SuiteSummary {
            algorithm: self.config.algorithm,
            episodes: seeds.len(),
            d: self.config.d,
            n: self.config.n,
            mean_regret,
            std_regret,
            mean_realized_regret: mean_std(&realized).0,
            bound,
            gamma_used: self.tuning.gamma,
            rad_estimate: self.tuning.rad.map(|r| r.mean),
            rad_stderr: self.tuning.rad.map(|r| r.std_error),
            oracle_calls_total: outcomes.iter().map(|o| o.transcript.oracle_calls).sum(),
            violations: bound.map_or(0, |b| regrets.iter().filter(|r| **r > b).count()),
            mean_within_bound: bound.map(|b| mean_regret <= b),
        };
        Ok(SuiteResult { summary, outcomes })
    }
}

/// Loads a config and runs it.
pub fn run_suite(config: ExperimentConfig, seeds: &[u64]) -> Result<SuiteResult> {
    Experiment::new(config)?.run_suite(seeds)
}

/// Writes `summary.json` and one `episode_<seed>.csv` per seed.
pub fn write_suite(result: &SuiteResult, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let mut json = serde_json::to_string_pretty(&result.summary)?;
    json.push('\n');
    std::fs::write(out_dir.join("summary.json"), json)?;
    for o in &result.outcomes {
        let file = std::fs::File::create(out_dir.join(format!("episode_{}.csv", o.seed)))?;
        o.transcript.write_csv(std::io::BufWriter::new(file))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(alg: &str) -> ExperimentConfig {
        let text = format!(
            r#"{{
            "d": 2, "n": 6, "algorithm": "{alg}",
            "context_dist": [0.5, 0.5],
            "policy_class": {{"d": 2, "policies": [[1, 1], [2, 2], [1, 2]]}},
            "cost_process": {{"type": "iid_bernoulli", "means": [[0.2, 0.8], [0.7, 0.3]]}},
            "rad_samples": 50
        }}"#
        );
        ExperimentConfig::from_json_str(&text).unwrap()
    }

    #[test]
    fn every_algorithm_runs() {
        for alg in ["bistro", "bistro_relaxed", "adversarial_reduction", "uniform", "egreedy", "ftl"] {
            let res = run_suite(config(alg), &[1, 2, 3]).unwrap();
            assert_eq!(res.summary.episodes, 3);
            assert!(res.outcomes.iter().all(|o| o.transcript.is_consistent()));
        }
    }

    #[test]
    fn single_seed_summary_matches_episode() {
        let res = run_suite(config("bistro"), &[5]).unwrap();
        assert_eq!(res.summary.mean_regret, res.outcomes[0].expected_regret);
        assert_eq!(res.summary.std_regret, 0.0);
        assert_eq!(res.summary.oracle_calls_total, 2 * 6);
    }

    #[test]
    fn episode_failures_name_the_seed() {
        let mut exp = Experiment::new(config("uniform")).unwrap();
        exp.env.costs = CostProcess::FixedTable(vec![CostVector::new(vec![0.0, 1.0]).unwrap()]);
        match exp.run_suite(&[4, 3]) {
            Err(Error::Episode { seed, .. }) => assert!(seed == 4 || seed == 3),
            other => panic!("expected an episode error, got {:?}", other.map(|r| r.summary)),
        }
    }
}
