//! Brute-force metric labeling.

use crate::error::{domain, Error, Result};

/// Largest number of labelings [`mlc_bruteforce`] will enumerate.
pub const MAX_MLC_LABELINGS: usize = 1_000_000;

/// `d2(a, b) = 1{a ≠ b}` on `d` labels.
pub fn uniform_metric(d: usize) -> Vec<Vec<f64>> {
    (0..d)
        .map(|a| (0..d).map(|b| if a == b { 0.0 } else { 1.0 }).collect())
        .collect()
}

/// Exact minimum over `z ∈ [d]^n` of
/// `Σ_v node_costs[v][z_v] + Σ_{u<v} edge_weights[u][v]·label_metric[z_u][z_v]`.
///
/// `edge_weights` is a symmetric nonnegative `n × n` matrix; each unordered
/// edge is counted once.
pub fn mlc_bruteforce(
    node_costs: &[Vec<f64>],
    edge_weights: &[Vec<f64>],
    label_metric: &[Vec<f64>],
) -> Result<f64> {
    let n = node_costs.len();
    let d = label_metric.len();
    if d == 0 {
        return domain("metric labeling needs at least one label");
    }
    if node_costs.iter().any(|row| row.len() != d) {
        return domain("node cost rows must have one entry per label");
    }
    for (a, row) in label_metric.iter().enumerate() {
        if row.len() != d {
            return domain("label metric must be square");
        }
        if row[a] != 0.0 {
            return domain(format!("label metric has nonzero diagonal at {a}"));
        }
        for (b, v) in row.iter().enumerate() {
            if *v < 0.0 || *v != label_metric[b][a] {
                return domain(format!("label metric not symmetric and nonnegative at ({a},{b})"));
            }
            for c in 0..d {
                if label_metric[a][c] > v + label_metric[b][c] + 1e-12 {
                    return domain(format!("label metric violates the triangle inequality at ({a},{b},{c})"));
                }
            }
        }
    }
    if edge_weights.len() != n || edge_weights.iter().any(|row| row.len() != n) {
        return domain("edge weights must be an n × n matrix");
    }
    for u in 0..n {
        for v in 0..n {
            let w = edge_weights[u][v];
            if w < 0.0 || w != edge_weights[v][u] {
                return domain(format!("edge weight ({u},{v}) must be symmetric and nonnegative"));
            }
        }
    }
    let total = (d as f64).powi(n as i32);
    if total > MAX_MLC_LABELINGS as f64 {
        return Err(Error::Capacity(format!(
            "{d}^{n} labelings exceed the brute-force limit {MAX_MLC_LABELINGS}"
        )));
    }

    let mut z = vec![0usize; n];
    let mut best = f64::INFINITY;
    loop {
        let mut g = 0.0;
        for v in 0..n {
            g += node_costs[v][z[v]];
        }
        for u in 0..n {
            for v in u + 1..n {
                g += edge_weights[u][v] * label_metric[z[u]][z[v]];
            }
        }
        best = best.min(g);

        // odometer increment
        let mut pos = 0;
        loop {
            if pos == n {
                return Ok(best);
            }
            z[pos] += 1;
            if z[pos] < d {
                break;
            }
            z[pos] = 0;
            pos += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decoupled_when_no_edges() {
        let costs = vec![vec![0.3, 0.1], vec![0.5, 0.9], vec![-1.0, 2.0]];
        let w = vec![vec![0.0; 3]; 3];
        let v = mlc_bruteforce(&costs, &w, &uniform_metric(2)).unwrap();
        assert!((v - (0.1 + 0.5 - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn single_node() {
        let v = mlc_bruteforce(&[vec![0.4, 0.2, 0.7]], &[vec![0.0]], &uniform_metric(3)).unwrap();
        assert_eq!(v, 0.2);
    }

    #[test]
    fn matches_the_regularized_example() {
        // linear costs (rows = rounds) and penalty 0.3 per ordered pair -> edge weight 0.6
        let costs = vec![vec![0.0, 1.0], vec![0.0, 1.0]];
        let w = vec![vec![0.0, 0.6], vec![0.6, 0.0]];
        assert_eq!(mlc_bruteforce(&costs, &w, &uniform_metric(2)).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let bad_metric = vec![vec![0.0, 1.0], vec![2.0, 0.0]];
        assert!(matches!(
            mlc_bruteforce(&[vec![0.0, 0.0]], &[vec![0.0]], &bad_metric),
            Err(Error::Domain(_))
        ));
        let costs = vec![vec![0.0; 4]; 10];
        let w = vec![vec![0.0; 10]; 10];
        assert!(matches!(mlc_bruteforce(&costs, &w, &uniform_metric(4)), Err(Error::Capacity(_))));
    }
}
