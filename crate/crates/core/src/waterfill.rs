//! Exact solver for `min_{q ∈ Δ_d} max_j { q_j − ψ_j }`.
//!
//! The optimum raises a common water level `v` and sets `q_j = (ψ_j + v)_+`,
//! with `v` chosen so the mass sums to one: the largest ψ entries are filled
//! first and ties always receive equal mass. The optimal value is `v`.

use crate::error::{domain, Result};
use crate::policy::ActionDistribution;

/// ERM values `ψ_j`, one per action.
#[derive(Clone, Debug, PartialEq)]
pub struct ErmValues(pub Vec<f64>);

impl ErmValues {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ErmValues {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

fn check(psi: &[f64]) -> Result<()> {
    if psi.is_empty() {
        return domain("water-filling needs at least one action");
    }
    if let Some(bad) = psi.iter().find(|v| !v.is_finite()) {
        return domain(format!("non-finite ERM value {bad}"));
    }
    Ok(())
}

/// Sort-and-prefix-sum water-filling, `O(d log d)`.
pub fn waterfill(psi: &ErmValues) -> Result<ActionDistribution> {
    let psi = psi.as_slice();
    check(psi)?;
    let top = psi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // gaps to the top entry, descending
    let mut gaps: Vec<f64> = psi.iter().map(|p| p - top).collect();
    gaps.sort_by(|a, b| b.total_cmp(a));

    let mut prefix = 0.0;
    let mut level = 0.0;
    for (k, g) in gaps.iter().enumerate() {
        prefix += g;
        let candidate = (1.0 - prefix) / (k + 1) as f64;
        if g + candidate > 0.0 {
            level = candidate;
        } else {
            break;
        }
    }
    let mut q: Vec<f64> = psi.iter().map(|p| ((p - top) + level).max(0.0)).collect();
    let total: f64 = q.iter().sum();
    q.iter_mut().for_each(|v| *v /= total);
    ActionDistribution::new(q)
}

/// Independent reference: bisection on the water level `v` solving
/// `Σ_j (ψ_j + v)_+ = 1`.
pub fn waterfill_oracle(psi: &ErmValues) -> Result<ActionDistribution> {
    let psi = psi.as_slice();
    check(psi)?;
    let level = water_level(psi);
    let mut q: Vec<f64> = psi.iter().map(|p| (p + level).max(0.0)).collect();
    let total: f64 = q.iter().sum();
    q.iter_mut().for_each(|v| *v /= total);
    ActionDistribution::new(q)
}

fn water_level(psi: &[f64]) -> f64 {
    let mass = |v: f64| psi.iter().map(|p| (p + v).max(0.0)).sum::<f64>();
    let top = psi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut lo, mut hi) = (-top, 1.0 - top);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mass(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `max_j (q_j − ψ_j)`.
pub fn minimax_value(q: &ActionDistribution, psi: &ErmValues) -> f64 {
    q.probs()
        .iter()
        .zip(psi.as_slice())
        .map(|(q, p)| q - p)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn symmetric_input_gives_uniform() {
        let q = waterfill(&vec![0.0; 3].into()).unwrap();
        assert!(close(q.probs(), &[1.0 / 3.0; 3], 1e-15));
        let o = waterfill_oracle(&vec![0.0; 3].into()).unwrap();
        assert!(close(o.probs(), &[1.0 / 3.0; 3], 1e-12));
    }

    #[test]
    fn dominant_entry_takes_all_mass() {
        let psi: ErmValues = vec![2.0, 1.0, 1.0].into();
        let q = waterfill(&psi).unwrap();
        assert_eq!(q.probs(), &[1.0, 0.0, 0.0]);
        assert!((minimax_value(&q, &psi) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn all_coordinates_active() {
        let psi: ErmValues = vec![0.5, 0.3, 0.1].into();
        let q = waterfill(&psi).unwrap();
        let want = [0.5 + 1.0 / 30.0, 0.3 + 1.0 / 30.0, 0.1 + 1.0 / 30.0];
        assert!(close(q.probs(), &want, 1e-15));
        assert!((minimax_value(&q, &psi) - 1.0 / 30.0).abs() < 1e-15);
    }

    #[test]
    fn single_action() {
        let q = waterfill(&vec![-7.0].into()).unwrap();
        assert_eq!(q.probs(), &[1.0]);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(waterfill(&vec![0.0, f64::NAN].into()).is_err());
        assert!(waterfill(&vec![f64::INFINITY, 0.0].into()).is_err());
        assert!(waterfill(&ErmValues(vec![])).is_err());
    }

    proptest! {
        #[test]
        fn on_simplex_and_matches_oracle(psi in prop::collection::vec(-32.0f64..32.0, 1..17)) {
            let psi = ErmValues(psi);
            let q = waterfill(&psi).unwrap();
            let o = waterfill_oracle(&psi).unwrap();
            prop_assert!(q.min() >= 0.0);
            prop_assert!((q.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(close(q.probs(), o.probs(), 1e-8));
            prop_assert!((minimax_value(&q, &psi) - minimax_value(&o, &psi)).abs() < 1e-10);
        }

        #[test]
        fn permutation_equivariant(psi in prop::collection::vec(-4.0f64..4.0, 2..10), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut perm: Vec<usize> = (0..psi.len()).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let permuted: Vec<f64> = perm.iter().map(|&i| psi[i]).collect();
            let q = waterfill(&ErmValues(psi)).unwrap();
            let qp = waterfill(&ErmValues(permuted)).unwrap();
            for (slot, &i) in perm.iter().enumerate() {
                prop_assert!((qp.get(slot) - q.get(i)).abs() < 1e-15);
            }
        }

        // dyadic inputs keep every shift exact, so invariance must hold bit-for-bit
        #[test]
        fn translation_invariant_exactly(raw in prop::collection::vec(-4096i32..4096, 1..12), shift in -1000i32..1000) {
            let psi: Vec<f64> = raw.iter().map(|v| *v as f64 / 1024.0).collect();
            let shifted: Vec<f64> = psi.iter().map(|v| v + shift as f64).collect();
            prop_assert_eq!(waterfill(&ErmValues(psi)).unwrap(), waterfill(&ErmValues(shifted)).unwrap());
        }

        #[test]
        fn translation_invariant_generally(psi in prop::collection::vec(-8.0f64..8.0, 1..12), shift in -100.0f64..100.0) {
            let shifted: Vec<f64> = psi.iter().map(|v| v + shift).collect();
            let a = waterfill(&ErmValues(psi)).unwrap();
            let b = waterfill(&ErmValues(shifted)).unwrap();
            prop_assert!(close(a.probs(), b.probs(), 1e-12));
        }

        #[test]
        fn ties_share_mass(base in prop::collection::vec(-2.0f64..2.0, 1..6), tie in -2.0f64..2.0) {
            let mut psi = base;
            psi.push(tie);
            psi.insert(0, tie);
            let q = waterfill(&ErmValues(psi.clone())).unwrap();
            prop_assert!((q.get(0) - q.get(psi.len() - 1)).abs() < 1e-12);
        }
    }
}
