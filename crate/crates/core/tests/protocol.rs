//! Transcript invariants across every algorithm and cost process.

use proptest::prelude::*;

use bistro::harness::{expected_regret, Algorithm, Experiment, ExperimentConfig};

const ALGORITHMS: [Algorithm; 7] = [
    Algorithm::Bistro,
    Algorithm::BistroRegularized,
    Algorithm::BistroRelaxed,
    Algorithm::AdversarialReduction,
    Algorithm::Uniform,
    Algorithm::Egreedy,
    Algorithm::Ftl,
];

fn config(algorithm: Algorithm, cost: usize, transductive: bool, n: usize) -> ExperimentConfig {
    let cost_process = match cost {
        0 => r#"{"type": "iid_bernoulli", "means": [[0.1, 0.9, 0.5], [0.6, 0.2, 0.4]]}"#.to_string(),
        1 => r#"{"type": "adaptive", "rule": "argmax_punish"}"#.to_string(),
        _ => {
            let rows: Vec<String> = (0..n).map(|t| format!("[{}, {}, 0.5]", t % 2, (t + 1) % 2)).collect();
            format!(r#"{{"type": "fixed_table", "rows": [{}]}}"#, rows.join(", "))
        }
    };
    let algorithm = serde_json::to_string(&algorithm).unwrap();
    let mode = if transductive { "transductive" } else { "iid_pool" };
    let text = format!(
        r#"{{
        "d": 3, "n": {n}, "algorithm": {algorithm}, "horizon_mode": "{mode}",
        "context_dist": [0.4, 0.6],
        "policy_class": {{"d": 3, "family": "all_labelings"}},
        "cost_process": {cost_process},
        "constraint": {{"type": "pairwise", "weights": "uniform"}},
        "lambda": 0.05, "K": 20,
        "rad_samples": 40
    }}"#
    );
    ExperimentConfig::from_json_str(&text).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transcripts_are_consistent(alg in 0usize..7, cost in 0usize..3, transductive: bool, n in 1usize..8, seed: u64) {
        let exp = Experiment::new(config(ALGORITHMS[alg], cost, transductive, n)).unwrap();
        let out = exp.run_seed(seed).unwrap();
        let tr = &out.transcript;
        prop_assert_eq!(tr.n(), n);
        prop_assert!(tr.is_consistent());
        for r in &tr.rounds {
            let q = &r.info.distribution;
            prop_assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(q.iter().all(|p| *p >= 0.0));
        }
        // regret identity
        let bench = exp.benchmark().value(tr).unwrap();
        prop_assert_eq!(expected_regret(tr, &exp.benchmark()).unwrap() + bench, tr.total_expected_cost());
        prop_assert_eq!(out.expected_regret, expected_regret(tr, &exp.benchmark()).unwrap());
        // reproducibility
        let again = exp.run_seed(seed).unwrap();
        prop_assert_eq!(tr.to_csv_string().unwrap(), again.transcript.to_csv_string().unwrap());
    }

    #[test]
    fn exploration_floor(alg in 0usize..4, seed: u64) {
        // every relaxation-based learner keeps at least γ on each action
        let exp = Experiment::new(config(ALGORITHMS[alg], 1, false, 5)).unwrap();
        let gamma = exp.tuning.gamma.unwrap();
        let tr = exp.run_seed(seed).unwrap().transcript;
        for r in &tr.rounds {
            prop_assert!(r.info.distribution.iter().all(|p| *p >= gamma - 1e-12));
        }
    }
}

#[test]
fn parallel_suite_matches_sequential_runs() {
    let exp = Experiment::new(config(Algorithm::Bistro, 0, false, 12)).unwrap();
    let seeds: Vec<u64> = (100..108).collect();
    let suite = exp.run_suite(&seeds).unwrap();
    for (o, &s) in suite.outcomes.iter().zip(&seeds) {
        assert_eq!(o.seed, s);
        let single = exp.run_seed(s).unwrap();
        assert_eq!(o.transcript.to_csv_string().unwrap(), single.transcript.to_csv_string().unwrap());
    }
}
