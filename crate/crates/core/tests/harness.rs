//! Invariants of the replication harness.

use rpost::simharness::{run_experiment, Experiment, ExperimentSpec, ResultTable};
use rpost::Prior;

fn kld_spec(n: usize, eps: f64, replications: usize) -> ExperimentSpec {
    ExperimentSpec {
        experiment: Experiment::NormalMeanKLD,
        n,
        eps,
        alpha_grid: vec![0.0],
        prior: Prior::uniform(),
        replications,
        seed: 11,
        draws: 2000,
    }
}

#[test]
fn identical_specs_give_identical_tables() {
    let spec = ExperimentSpec {
        experiment: Experiment::RegressionBiasMSE,
        n: 30,
        eps: 0.1,
        alpha_grid: vec![0.0, 0.5],
        prior: Prior::conjugate(vec![5.0, 2.0], 3.0).unwrap(),
        replications: 4,
        seed: 3,
        draws: 2000,
    };
    let a = run_experiment(&spec).unwrap();
    let b = run_experiment(&spec).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_csv_string(), b.to_csv_string());
}

#[test]
fn stderr_shrinks_with_replications() {
    let small = run_experiment(&kld_spec(20, 0.1, 50)).unwrap().get(0.0, "kld").unwrap().stderr;
    let large = run_experiment(&kld_spec(20, 0.1, 200)).unwrap().get(0.0, "kld").unwrap().stderr;
    let ratio = small / large;
    assert!((2.0 / 1.5..=2.0 * 1.5).contains(&ratio), "stderr ratio {ratio}");
}

#[test]
fn contamination_damage_is_monotone_at_zero_alpha() {
    let values: Vec<f64> = [0.0, 0.05, 0.1, 0.2]
        .iter()
        .map(|eps| run_experiment(&kld_spec(40, *eps, 40)).unwrap().value(0.0, "kld").unwrap())
        .collect();
    assert!(values.windows(2).all(|w| w[0] < w[1]), "{values:?}");
}

#[test]
fn tables_are_finite_and_round_trip() {
    let mut spec = kld_spec(20, 0.05, 5);
    spec.alpha_grid = vec![0.0, 0.3, 1.0];
    let table = run_experiment(&spec).unwrap();
    assert_eq!(table.rows.len(), 6);
    for r in &table.rows {
        assert!(r.value.is_finite() && r.stderr >= 0.0, "{r:?}");
    }
    let mut json = Vec::new();
    table.write_json(&mut json).unwrap();
    let back: ResultTable = serde_json::from_slice(&json).unwrap();
    assert_eq!(back, table);
    let csv = table.to_csv_string();
    assert_eq!(csv.lines().next(), Some("n,eps,alpha,metric,value,stderr,excluded_reps"));
    assert_eq!(csv.lines().count(), 7);
}

#[test]
fn invalid_specs_are_rejected() {
    let mut spec = kld_spec(20, 1.0, 5);
    assert!(run_experiment(&spec).is_err());
    spec.eps = 0.1;
    spec.replications = 0;
    assert!(run_experiment(&spec).is_err());
    spec.replications = 5;
    spec.alpha_grid = vec![-0.5];
    assert!(run_experiment(&spec).is_err());
    spec.alpha_grid = vec![0.5];
    spec.experiment = Experiment::RegressionBiasMSE;
    spec.prior = Prior::conjugate(vec![5.0], 3.0).unwrap();
    assert!(run_experiment(&spec).is_err());
}
