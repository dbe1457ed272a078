//! Monte-Carlo estimation of the vector-valued Rademacher average
//! `E_x E_ε sup_M Σ_t M_tᵀ ε_t`, exploration-rate tuning, and the resulting
//! regret bound.
//!
//! The supremum is evaluated through the ERM oracle: it equals the negated
//! ERM value on the sign matrix `[−ε_1, …, −ε_n]`.

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::erm::ErmOracle;
use crate::error::{parameter, Error, Result};
use crate::policy::{Context, ContextDistribution, CostMatrix};
use crate::rng::{stream_rng, SimRng};

/// Default number of Monte-Carlo samples used when tuning γ.
pub const DEFAULT_TUNING_SAMPLES: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RademacherEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl RademacherEstimate {
    pub fn from_samples(values: &[f64]) -> Self {
        let r = values.len();
        let mean = values.iter().sum::<f64>() / r as f64;
        let std_error = if r > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1) as f64;
            (var / r as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std_error, samples: r }
    }
}

/// Fills `out` with independent ±1 entries, 64 signs per RNG word.
pub fn fill_signs<R: RngCore + ?Sized>(rng: &mut R, out: &mut [f64]) {
    for chunk in out.chunks_mut(64) {
        let bits = rng.next_u64();
        for (i, v) in chunk.iter_mut().enumerate() {
            *v = if (bits >> i) & 1 == 1 { 1.0 } else { -1.0 };
        }
    }
}

/// Source of context sequences `x_{1:n}` for the Monte-Carlo loop.
pub trait ContextSampler: Sync {
    fn draw(&self, n: usize, rng: &mut SimRng) -> Result<Vec<Context>>;
}

/// i.i.d. draws from the context law.
impl ContextSampler for ContextDistribution {
    fn draw(&self, n: usize, rng: &mut SimRng) -> Result<Vec<Context>> {
        Ok(self.sample_n(n, rng))
    }
}

/// A known sequence (the transductive case): every sample uses its prefix.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedContexts(pub Vec<Context>);

impl ContextSampler for FixedContexts {
    fn draw(&self, n: usize, _rng: &mut SimRng) -> Result<Vec<Context>> {
        if self.0.len() < n {
            return Err(Error::Domain(format!(
                "fixed context sequence has {} entries, {n} requested",
                self.0.len()
            )));
        }
        Ok(self.0[..n].to_vec())
    }
}

/// One draw of contexts and signs: returns `(x_{1:n}, ε as a d × n matrix)`.
pub fn draw_sign_sample(
    sampler: &dyn ContextSampler,
    n: usize,
    d: usize,
    seed: u64,
    index: u64,
) -> Result<(Vec<Context>, CostMatrix)> {
    let mut rng = stream_rng(seed, index);
    let contexts = sampler.draw(n, &mut rng)?;
    let mut signs = CostMatrix::zeros(d, n);
    for t in 0..n {
        fill_signs(&mut rng, signs.column_mut(t));
    }
    Ok((contexts, signs))
}

/// Per-sample suprema `sup_M Σ_t M_tᵀ ε_t`, in sample order. Sample `r`
/// depends only on `(seed, r)`, so two oracles queried with the same seed see
/// identical contexts and signs.
pub fn rademacher_samples(
    oracle: &dyn ErmOracle,
    sampler: &dyn ContextSampler,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if samples == 0 {
        return parameter("Rademacher estimation needs at least one sample");
    }
    let d = oracle.d();
    (0..samples as u64)
        .into_par_iter()
        .map(|r| {
            let (contexts, signs) = draw_sign_sample(sampler, n, d, seed, r)?;
            Ok(-oracle.value(&contexts, &signs.scaled(-1.0))?)
        })
        .collect()
}

pub fn rademacher_estimate(
    oracle: &dyn ErmOracle,
    sampler: &dyn ContextSampler,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<RademacherEstimate> {
    Ok(RademacherEstimate::from_samples(&rademacher_samples(oracle, sampler, n, samples, seed)?))
}

/// `min(√(2·rad/(n·d)), 1/d)`, falling back to `1/(n·d)` when `rad ≤ 0`.
pub fn tune_gamma(rad_mean: f64, n: usize, d: usize) -> Result<f64> {
    tune_gamma_with_floor(rad_mean, n, d, None)
}

pub fn tune_gamma_with_floor(rad_mean: f64, n: usize, d: usize, floor: Option<f64>) -> Result<f64> {
    if n < 1 || d < 1 {
        return parameter(format!("gamma tuning needs n, d ≥ 1 (got n = {n}, d = {d})"));
    }
    let cap = 1.0 / d as f64;
    let rad = rad_mean.max(0.0);
    if rad == 0.0 {
        let floor = floor.unwrap_or(1.0 / (n * d) as f64);
        if !(floor > 0.0) {
            return parameter(format!("gamma floor {floor} must be positive"));
        }
        return Ok(floor.min(cap));
    }
    let gamma = (2.0 * rad / (n * d) as f64).sqrt();
    if gamma > cap {
        log::warn!("tuned gamma {gamma:.4} exceeds 1/d; clamping to pure uniform exploration");
        return Ok(cap);
    }
    Ok(gamma)
}

/// `2·√(2·d·n·rad)`.
pub fn regret_bound(rad_mean: f64, n: usize, d: usize) -> f64 {
    2.0 * (2.0 * d as f64 * n as f64 * rad_mean.max(0.0)).sqrt()
}

/// Value of the relaxation before the first round for an arbitrary γ:
/// `sign_scale·rad/γ + n·d·γ`. Equals [`regret_bound`] at the tuned γ with
/// `sign_scale = 2`.
pub fn initial_relaxation_value(rad_mean: f64, n: usize, d: usize, gamma: f64, sign_scale: f64) -> f64 {
    sign_scale * rad_mean.max(0.0) / gamma + (n * d) as f64 * gamma
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::erm::ExactErm;
    use crate::policy::{ContextUniverse, Policy, PolicyClass};
    use std::sync::Arc;

    fn constants(which: &[usize]) -> ExactErm {
        let u = Arc::new(ContextUniverse::new(1).unwrap());
        let policies = which.iter().map(|&a| Policy::constant(1, a)).collect();
        ExactErm::new(Arc::new(PolicyClass::new(2, u, policies).unwrap()))
    }

    #[test]
    fn singleton_class_centres_on_zero() {
        let dist = ContextDistribution::uniform(1).unwrap();
        let est = rademacher_estimate(&constants(&[0]), &dist, 10, 4000, 1).unwrap();
        assert!(est.mean.abs() <= 3.0 * est.std_error, "{est:?}");
    }

    #[test]
    fn two_constants_one_round() {
        let dist = ContextDistribution::uniform(1).unwrap();
        let est = rademacher_estimate(&constants(&[0, 1]), &dist, 1, 20_000, 2).unwrap();
        assert!((est.mean - 0.5).abs() <= 3.0 * est.std_error, "{est:?}");
    }

    #[test]
    fn all_labelings_ten_rounds() {
        let u = Arc::new(ContextUniverse::new(10).unwrap());
        let class = PolicyClass::all_labelings(2, u).unwrap();
        let oracle = ExactErm::new(Arc::new(class));
        // distinct contexts let every round be labelled freely: exact value n/2
        let distinct = FixedContexts((0..10).map(Context).collect());
        let est = rademacher_estimate(&oracle, &distinct, 10, 4000, 3).unwrap();
        assert!((est.mean - 5.0).abs() <= 3.0 * est.std_error, "{est:?}");
    }

    #[test]
    fn inclusion_is_monotone_pathwise() {
        let dist = ContextDistribution::uniform(1).unwrap();
        let small = rademacher_samples(&constants(&[0]), &dist, 6, 500, 9).unwrap();
        let big = rademacher_samples(&constants(&[0, 1]), &dist, 6, 500, 9).unwrap();
        assert!(small.iter().zip(&big).all(|(s, b)| s <= b));
    }

    #[test]
    fn deterministic_regardless_of_scheduling() {
        let dist = ContextDistribution::uniform(1).unwrap();
        let a = rademacher_samples(&constants(&[0, 1]), &dist, 5, 300, 4).unwrap();
        let b = rademacher_samples(&constants(&[0, 1]), &dist, 5, 300, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gamma_tuning_examples() {
        let n = 10;
        assert_eq!(tune_gamma(n as f64 / 2.0, n, 2).unwrap(), 0.5);
        assert_eq!(tune_gamma(0.0, n, 2).unwrap(), 1.0 / 20.0);
        assert_eq!(tune_gamma(-0.3, n, 2).unwrap(), 1.0 / 20.0);
        assert_eq!(tune_gamma((n * 2) as f64 / 2.0, n, 2).unwrap(), 0.5);
        let g = tune_gamma(1.0, 100, 2).unwrap();
        assert!((g - 0.1).abs() < 1e-15);
        assert!(tune_gamma(1.0, 0, 2).is_err());
        assert!(tune_gamma(1.0, 3, 0).is_err());
    }

    #[test]
    fn bound_examples() {
        assert_eq!(regret_bound(0.0, 10, 2), 0.0);
        assert!((regret_bound(5.0, 10, 2) - 2.0 * 200f64.sqrt()).abs() < 1e-12);
        assert!((regret_bound(20.0, 10, 2) - 2.0 * regret_bound(5.0, 10, 2)).abs() < 1e-12);
        let g = tune_gamma(5.0, 100, 2).unwrap();
        assert!((initial_relaxation_value(5.0, 100, 2, g, 2.0) - regret_bound(5.0, 100, 2)).abs() < 1e-10);
    }
}
