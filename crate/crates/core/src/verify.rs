//! Naive reference computations used by tests and the `selftest` command.
//!
//! Nothing here calls into the production solvers it is meant to check:
//! policies are evaluated by matching on [`Policy`] directly, sign patterns
//! are enumerated, and minimax problems are searched on grids.

use rand::Rng;

use crate::error::{Error, Result};
use crate::policy::{Context, CostMatrix, Policy, PolicyClass};

pub const MAX_BRUTEFORCE_POLICIES: usize = 10_000;
pub const MAX_BRUTEFORCE_ROUNDS: usize = 64;
pub const MAX_SIGN_BITS: usize = 24;

fn capacity<T>(msg: String) -> Result<T> {
    Err(Error::Capacity(msg))
}

/// Action of a policy, evaluated without the class lookup table.
pub fn evaluate_policy(class: &PolicyClass, policy: &Policy, x: Context) -> Result<usize> {
    let universe = class.universe();
    if x.0 >= universe.size() {
        return Err(Error::Domain(format!("context {} outside universe", x.0)));
    }
    match policy {
        Policy::Table(table) => Ok(table[x.0]),
        Policy::ArgmaxLinear(weights) => {
            let features = universe
                .features(x)
                .ok_or_else(|| Error::Domain("argmax policy on a universe without features".into()))?;
            let mut best = 0;
            let mut best_score = f64::NEG_INFINITY;
            for (j, w) in weights.iter().enumerate() {
                let mut score = 0.0;
                for k in 0..features.len() {
                    score += w[k] * features[k];
                }
                if score > best_score {
                    best = j;
                    best_score = score;
                }
            }
            Ok(best)
        }
    }
}

/// Double loop over policies and rounds.
pub fn bruteforce_erm(class: &PolicyClass, contexts: &[Context], y: &CostMatrix) -> Result<f64> {
    if class.len() > MAX_BRUTEFORCE_POLICIES || contexts.len() > MAX_BRUTEFORCE_ROUNDS {
        return capacity(format!("{} policies over {} rounds", class.len(), contexts.len()));
    }
    if class.is_empty() {
        return Err(Error::Domain("empty class".into()));
    }
    let mut best = f64::INFINITY;
    for policy in class.policies() {
        let mut total = 0.0;
        for (t, x) in contexts.iter().enumerate() {
            total += y.get(evaluate_policy(class, policy, *x)?, t);
        }
        if total < best {
            best = total;
        }
    }
    Ok(best)
}

/// `E_ε sup_f Σ_t ε_t(f(x_t))` by enumerating all `2^{n·d}` sign patterns.
pub fn exact_rademacher(class: &PolicyClass, contexts: &[Context], n: usize, d: usize) -> Result<f64> {
    if contexts.len() != n || class.d() != d {
        return Err(Error::Domain("shape mismatch".into()));
    }
    let bits = n * d;
    if bits > MAX_SIGN_BITS {
        return capacity(format!("2^{bits} sign patterns"));
    }
    let labels: Vec<Vec<usize>> = class
        .policies()
        .iter()
        .map(|p| contexts.iter().map(|x| evaluate_policy(class, p, *x)).collect())
        .collect::<Result<_>>()?;
    let mut total = 0.0;
    for pattern in 0u64..1 << bits {
        let sign = |t: usize, j: usize| if (pattern >> (t * d + j)) & 1 == 1 { 1.0 } else { -1.0 };
        let best = labels
            .iter()
            .map(|lab| lab.iter().enumerate().map(|(t, &j)| sign(t, j)).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        total += best;
    }
    Ok(total / (1u64 << bits) as f64)
}

fn objective(q: &[f64], psi: &[f64]) -> f64 {
    q.iter().zip(psi).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max)
}

/// Best point of the grid `{k/resolution}` on the simplex for
/// `max_j (q_j − ψ_j)`. Supports `d ≤ 4`.
pub fn grid_minimax(psi: &[f64], resolution: usize) -> Result<(Vec<f64>, f64)> {
    let d = psi.len();
    if d == 0 || d > 4 {
        return capacity(format!("grid search for d = {d}"));
    }
    if resolution == 0 {
        return Err(Error::Parameter("grid resolution must be positive".into()));
    }
    // table[j][c] = c/resolution − ψ_j
    let table: Vec<Vec<f64>> =
        psi.iter().map(|p| (0..=resolution).map(|c| c as f64 / resolution as f64 - p).collect()).collect();
    let mut best = (vec![0usize; d], f64::INFINITY);
    let mut counts = vec![0usize; d];
    // enumerate compositions of `resolution` into d nonnegative parts,
    // carrying the running max of the fixed coordinates
    fn walk(k: usize, left: usize, prefix: f64, counts: &mut Vec<usize>, table: &[Vec<f64>], best: &mut (Vec<usize>, f64)) {
        let d = counts.len();
        if k == d - 1 {
            let worst = prefix.max(table[k][left]);
            if worst < best.1 {
                counts[k] = left;
                *best = (counts.clone(), worst);
            }
            return;
        }
        if k == d - 2 {
            let (a, b) = (&table[k], &table[k + 1]);
            for c in 0..=left {
                let worst = prefix.max(a[c]).max(b[left - c]);
                if worst < best.1 {
                    counts[k] = c;
                    counts[k + 1] = left - c;
                    *best = (counts.clone(), worst);
                }
            }
            return;
        }
        for c in 0..=left {
            counts[k] = c;
            walk(k + 1, left - c, prefix.max(table[k][c]), counts, table, best);
        }
    }
    walk(0, resolution, f64::NEG_INFINITY, &mut counts, &table, &mut best);
    let r = resolution as f64;
    Ok((best.0.iter().map(|c| *c as f64 / r).collect(), best.1))
}

/// Best of `samples` uniform random simplex points. Works for any `d`.
pub fn random_minimax<R: Rng + ?Sized>(psi: &[f64], samples: usize, rng: &mut R) -> (Vec<f64>, f64) {
    let d = psi.len();
    let mut best = (vec![1.0 / d as f64; d], objective(&vec![1.0 / d as f64; d], psi));
    for _ in 0..samples {
        let mut q: Vec<f64> = (0..d).map(|_| -rng.gen_range(f64::MIN_POSITIVE..1.0f64).ln()).collect();
        let total: f64 = q.iter().sum();
        q.iter_mut().for_each(|v| *v /= total);
        let value = objective(&q, psi);
        if value < best.1 {
            best = (q, value);
        }
    }
    best
}

/// `{γ⁻¹e_j : j ∈ [d]} ∪ {0}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VertexSet {
    pub gamma: f64,
    pub d: usize,
}

impl VertexSet {
    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = (0..self.d)
            .map(|j| {
                let mut v = vec![0.0; self.d];
                v[j] = 1.0 / self.gamma;
                v
            })
            .collect();
        out.push(vec![0.0; self.d]);
        out
    }

    pub fn len(&self) -> usize {
        self.d + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// `Σ_{s,r} 1{a_s ≠ a_r}` over ordered pairs.
pub fn uniform_pairwise(labels: &[usize], _contexts: &[Context]) -> f64 {
    let mut total = 0.0;
    for a in labels {
        for b in labels {
            if a != b {
                total += 1.0;
            }
        }
    }
    total
}

/// Exact regularized bound term
/// `E_{x,ε} sup_f { −(s/γ)·Σ_t ε_t(f(x_t)) − λ·C(f) } + n·d·γ + λ·K`
/// with `x_t` i.i.d. from `probs` and `s` the sign scale. Enumerates all
/// context sequences and sign patterns.
#[allow(clippy::too_many_arguments)]
pub fn exact_regularized_bound(
    class: &PolicyClass,
    constraint: &dyn Fn(&[usize], &[Context]) -> f64,
    probs: &[f64],
    n: usize,
    gamma: f64,
    sign_scale: f64,
    lambda: f64,
    k: f64,
) -> Result<f64> {
    let d = class.d();
    let bits = n * d;
    let sequences = (probs.len() as u64).checked_pow(n as u32).unwrap_or(u64::MAX);
    if bits > 16 || sequences.saturating_mul(class.len() as u64) > 1 << 20 {
        return capacity(format!("{sequences} context sequences × 2^{bits} sign patterns"));
    }
    let mut expectation = 0.0;
    let mut seq = vec![0usize; n];
    for code in 0..sequences {
        let mut c = code;
        let mut weight = 1.0;
        for s in seq.iter_mut() {
            *s = (c % probs.len() as u64) as usize;
            c /= probs.len() as u64;
            weight *= probs[*s];
        }
        if weight == 0.0 {
            continue;
        }
        let contexts: Vec<Context> = seq.iter().map(|&i| Context(i)).collect();
        let labelled: Vec<(Vec<usize>, f64)> = class
            .policies()
            .iter()
            .map(|p| {
                let lab: Vec<usize> = contexts.iter().map(|x| evaluate_policy(class, p, *x)).collect::<Result<_>>()?;
                let pen = constraint(&lab, &contexts);
                Ok((lab, pen))
            })
            .collect::<Result<_>>()?;
        let mut inner = 0.0;
        for pattern in 0u64..1 << bits {
            let sign = |t: usize, j: usize| if (pattern >> (t * d + j)) & 1 == 1 { 1.0 } else { -1.0 };
            let best = labelled
                .iter()
                .map(|(lab, pen)| {
                    let corr: f64 = lab.iter().enumerate().map(|(t, &j)| sign(t, j)).sum();
                    -sign_scale / gamma * corr - lambda * pen
                })
                .fold(f64::NEG_INFINITY, f64::max);
            inner += best;
        }
        expectation += weight * inner / (1u64 << bits) as f64;
    }
    Ok(expectation + (n * d) as f64 * gamma + lambda * k)
}

/// Outcome of one self-test comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct SelftestLine {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Runs the oracle-equivalence checks: ERM against brute force, water-filling
/// against grid search and bisection, exact Rademacher examples, and the
/// regularized ERM against brute-force metric labeling.
pub fn selftest(seed: u64) -> Result<Vec<SelftestLine>> {
    use crate::erm::{exact_erm_value, mlc_bruteforce, regularized_erm_value, uniform_metric, PairwiseDisagreement, RegularizedErmQuery};
    use crate::policy::ContextUniverse;
    use crate::waterfill::{minimax_value, waterfill, waterfill_oracle, ErmValues};
    use rand::SeedableRng;
    use std::sync::Arc;

    let mut rng = crate::rng::SimRng::seed_from_u64(seed);
    let mut lines = Vec::new();

    let mut mismatches = 0;
    for _ in 0..100 {
        let d = rng.gen_range(1..=4);
        let size = rng.gen_range(1..=4);
        let u = Arc::new(ContextUniverse::new(size)?);
        let policies = (0..rng.gen_range(1..=10))
            .map(|_| Policy::Table((0..size).map(|_| rng.gen_range(0..d)).collect()))
            .collect();
        let class = PolicyClass::new(d, u, policies)?;
        let n = rng.gen_range(1..=8);
        let contexts: Vec<Context> = (0..n).map(|_| Context(rng.gen_range(0..size))).collect();
        let cols: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let y = CostMatrix::from_columns(d, &cols)?;
        if exact_erm_value(&class, &contexts, &y)? != bruteforce_erm(&class, &contexts, &y)? {
            mismatches += 1;
        }
    }
    lines.push(SelftestLine { name: "erm_vs_bruteforce", passed: mismatches == 0, detail: format!("{mismatches} mismatches in 100") });

    let mut worst_gap: f64 = 0.0;
    let mut worst_grid: f64 = f64::NEG_INFINITY;
    for _ in 0..200 {
        let d = rng.gen_range(2..=3);
        let psi: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let q = waterfill(&ErmValues(psi.clone()))?;
        let o = waterfill_oracle(&ErmValues(psi.clone()))?;
        let v = minimax_value(&q, &ErmValues(psi.clone()));
        worst_gap = worst_gap.max((v - minimax_value(&o, &ErmValues(psi.clone()))).abs());
        let (_, grid) = grid_minimax(&psi, 200)?;
        worst_grid = worst_grid.max(v - grid);
    }
    lines.push(SelftestLine {
        name: "waterfill_vs_references",
        passed: worst_gap <= 1e-10 && worst_grid <= 1e-9,
        detail: format!("bisection gap {worst_gap:.2e}, grid excess {worst_grid:.2e}"),
    });

    let u = Arc::new(ContextUniverse::new(2)?);
    let all = PolicyClass::all_labelings(2, Arc::clone(&u))?;
    let r_all = exact_rademacher(&all, &[Context(0), Context(1)], 2, 2)?;
    let u1 = Arc::new(ContextUniverse::new(1)?);
    let pair = PolicyClass::new(2, u1, vec![Policy::constant(1, 0), Policy::constant(1, 1)])?;
    let r_pair = exact_rademacher(&pair, &[Context(0)], 1, 2)?;
    lines.push(SelftestLine {
        name: "exact_rademacher_examples",
        passed: r_all == 1.0 && r_pair == 0.5,
        detail: format!("all-labelings n=2: {r_all}, two constants n=1: {r_pair}"),
    });

    let mut mismatches = 0;
    for _ in 0..50 {
        let d = rng.gen_range(2..=3);
        let n = rng.gen_range(1..=5);
        let u = Arc::new(ContextUniverse::new(n)?);
        let class = PolicyClass::all_labelings(d, u)?;
        let contexts: Vec<Context> = (0..n).map(Context).collect();
        let rows: Vec<Vec<f64>> = (0..d).map(|_| (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let y = CostMatrix::from_rows(&rows)?;
        let lambda = rng.gen_range(0.0..1.0);
        let query = RegularizedErmQuery { y: y.clone(), lambda_scaled: lambda, constraint: Arc::new(PairwiseDisagreement::uniform()) };
        let a = regularized_erm_value(&class, &contexts, &query)?;
        let node: Vec<Vec<f64>> = (0..n).map(|v| (0..d).map(|j| y.get(j, v)).collect()).collect();
        let edges: Vec<Vec<f64>> = (0..n).map(|s| (0..n).map(|r| if s == r { 0.0 } else { 2.0 * lambda }).collect()).collect();
        let b = mlc_bruteforce(&node, &edges, &uniform_metric(d))?;
        if (a - b).abs() > 1e-12 {
            mismatches += 1;
        }
    }
    lines.push(SelftestLine { name: "regularized_vs_metric_labeling", passed: mismatches == 0, detail: format!("{mismatches} mismatches in 50") });

    Ok(lines)
}
