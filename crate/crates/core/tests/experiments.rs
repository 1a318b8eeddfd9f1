use drivseg::experiments::{full_data_clustering, subsample_independent};
use drivseg::ingest::{generate_synthetic_fleet, Archetype, FleetSpec};
use drivseg::*;

fn gas(mean: f64, variance: f64, reversion: f64) -> Archetype {
    let mut a = Archetype::default();
    let o = a.override_mut(SignalKind::Gas);
    o.mean = Some(mean);
    o.variance = Some(variance);
    o.reversion = Some(reversion);
    a
}

fn fleet(archetypes: Vec<Archetype>, drivers: usize, seconds: f64) -> Vec<UserRecord64> {
    let mut spec = FleetSpec::new(archetypes, drivers, 2, 5);
    spec.session_seconds = [seconds, seconds];
    generate_synthetic_fleet(&spec).unwrap().users
}

fn gas_table(users: &[UserRecord64]) -> FeatureTable64 {
    FeatureTable::extract(users, SignalKind::Gas, FeatureKind::Values)
}

#[test]
fn single_trial_has_zero_spread() {
    let users = fleet(vec![gas(20.0, 64.0, 0.5), gas(60.0, 64.0, 0.5)], 4, 300.0);
    let cell = cross_validate(
        &gas_table(&users),
        &[2, 3],
        1,
        3,
        &ExperimentOptions::default(),
    )
    .unwrap();
    assert!(cell.std.iter().all(|&s| s == 0.0));
    assert_eq!(cell.trials, 1);
}

#[test]
fn cross_validation_is_deterministic() {
    let users = fleet(vec![gas(20.0, 64.0, 0.5), gas(60.0, 64.0, 0.5)], 4, 300.0);
    let table = gas_table(&users);
    let opts = ExperimentOptions::default();
    let a = cross_validate(&table, &[2, 3, 4], 5, 9, &opts).unwrap();
    let b = cross_validate(&table, &[2, 3, 4], 5, 9, &opts).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.optimal_k, 2);
}

#[test]
fn too_few_users_for_k_range() {
    let users = fleet(vec![gas(20.0, 64.0, 0.5)], 3, 120.0);
    let err = cross_validate(
        &gas_table(&users),
        &[2, 3, 4],
        2,
        0,
        &ExperimentOptions::default(),
    )
    .unwrap_err();
    assert!(matches!(err, Error::InsufficientData { .. }), "{err}");
}

#[test]
fn one_archetype_has_no_stable_k() {
    let users = fleet(vec![gas(20.0, 64.0, 0.5)], 12, 600.0);
    let ks: Vec<usize> = (2..=5).collect();
    let cell = cross_validate(
        &gas_table(&users),
        &ks,
        10,
        1,
        &ExperimentOptions::default(),
    )
    .unwrap();
    let best = cell.mean.iter().cloned().fold(f64::MIN, f64::max);
    assert!(best < 0.9, "max M = {best}");
}

#[test]
fn full_independent_sample_reproduces_the_reference() {
    let users = fleet(vec![gas(20.0, 64.0, 0.1), gas(45.0, 64.0, 0.1)], 4, 300.0);
    let table = gas_table(&users);
    let curve = robustness_curve(
        &table,
        SubsampleMethod::Independent,
        2,
        &[100.0],
        3,
        4,
        &ExperimentOptions::default(),
    )
    .unwrap();
    assert!((curve.mean[0] - 1.0).abs() < 1e-9);
    assert_eq!(curve.std[0], 0.0);
}

#[test]
fn robustness_ignores_user_order() {
    let users = fleet(vec![gas(20.0, 64.0, 0.1), gas(45.0, 64.0, 0.1)], 4, 300.0);
    let table = gas_table(&users);
    let order: Vec<usize> = (0..table.len()).rev().collect();
    let reversed = table.reordered(&order);
    let opts = ExperimentOptions::default();
    for method in SubsampleMethod::ALL {
        let a = robustness_curve(&table, method, 2, &[20.0, 5.0], 4, 8, &opts).unwrap();
        let b = robustness_curve(&reversed, method, 2, &[20.0, 5.0], 4, 8, &opts).unwrap();
        assert_eq!(a.mean, b.mean, "{method:?}");
    }
}

#[test]
fn full_subsample_gives_full_histograms() {
    let users = fleet(vec![gas(20.0, 64.0, 0.5)], 3, 120.0);
    let table = gas_table(&users);
    let opts = HistogramOptions::default();
    let full = HistogramSet::build(&table, &opts).unwrap();
    let vectors = table
        .vectors
        .iter()
        .map(|v| subsample_independent(v, 1.0, 77).unwrap())
        .collect();
    let sub =
        FeatureTable::from_vectors(table.signal, table.feature, table.user_ids.clone(), vectors)
            .unwrap();
    let again = HistogramSet::build(&sub, &opts).unwrap();
    assert_eq!(full.bars, again.bars);
}

#[test]
fn reference_clustering_matches_planted_groups() {
    let users = fleet(vec![gas(20.0, 64.0, 0.5), gas(60.0, 64.0, 0.5)], 4, 300.0);
    let (set, c) =
        full_data_clustering(&gas_table(&users), 2, 0, &ExperimentOptions::default()).unwrap();
    assert_eq!(set.user_ids.len(), 8);
    let truth = Clustering {
        labels: vec![0, 0, 0, 0, 1, 1, 1, 1],
        k: 2,
        inertia: 0.0,
    };
    assert_eq!(v_measure(&truth, &c).unwrap(), 1.0);
}
