use monogp::bench::{run_benchmark, BenchConfig, Experiment};
use monogp::Execution;

#[test]
fn fatigue_report_is_deterministic() {
    let cfg = BenchConfig::default();
    let (a, ga) = run_benchmark(Experiment::Fatigue, &cfg).unwrap();
    let (b, gb) = run_benchmark(Experiment::Fatigue, &cfg.clone().with_exec(Execution::Sequential)).unwrap();
    assert_eq!(a.data_hash, b.data_hash);
    assert_eq!(a.regular.rmse, b.regular.rmse);
    assert_eq!(a.monotonic.rmse, b.monotonic.rmse);
    assert_eq!(a.monotonic.hyperparameters, b.monotonic.hyperparameters);
    assert_eq!(ga.to_csv_bytes(), gb.to_csv_bytes());
    assert_eq!(a.n_train, 12);
    assert_eq!(a.n_test, 13);
    assert_eq!(a.restarts.len(), 5);
}

#[test]
fn grid_csv_has_header_and_rows() {
    let (_, grid) = run_benchmark(Experiment::Fatigue, &BenchConfig::default()).unwrap();
    let text = String::from_utf8(grid.to_csv_bytes()).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "sigma_a[MPa],regular_mean,regular_std,monotonic_mean,monotonic_std"
    );
    assert_eq!(lines.count(), 200);
}

#[test]
fn report_serializes() {
    let (r, _) = run_benchmark(Experiment::Logistic, &BenchConfig::default()).unwrap();
    let json = serde_json::to_value(&r).unwrap();
    assert_eq!(json["experiment"], "logistic");
    assert!(json["monotonic"]["rmse"].as_f64().unwrap().is_finite());
}
