use fracspde_core::lab::{
    holder_probe, predicted_holder_exponent, run_study, run_study_with_workers, HolderPlan, StudyPlan,
};
use fracspde_core::stepper::{InitialData, NamedInitial};

#[test]
fn heat_equation_limit_holder_exponent() {
    // α → 1, γ = 0 is the stochastic heat equation: mean-square exponent 1
    let plan = HolderPlan::new(0.99, 0.0, 2.0);
    let report = holder_probe(&plan).unwrap();
    assert!((report.predicted - 0.98).abs() < 1e-12);
    assert!((report.exponent - report.predicted).abs() <= 0.1, "{}", report.exponent);
}

#[test]
fn holder_exponent_tracks_orders() {
    let report = holder_probe(&HolderPlan::new(0.6, 0.5, 2.0)).unwrap();
    assert!((report.predicted - predicted_holder_exponent(0.6, 0.5, 0.0)).abs() < 1e-15);
    assert!((report.exponent - 1.2).abs() <= 0.1, "{}", report.exponent);
}

#[test]
fn smooth_data_zero_noise_spatial_study_is_second_order() {
    let mut plan = StudyPlan::spatial(0.5, 0.5, 2.0);
    plan.zero_noise = true;
    plan.trajectories = 1;
    plan.initial = InitialData::Named(NamedInitial::SinPi);
    let report = run_study(&plan).unwrap();
    let rate = report.fitted_strong.unwrap();
    assert!((rate - 2.0).abs() <= 0.1, "{rate}");
}

#[test]
fn small_temporal_study_is_worker_independent() {
    let mut plan = StudyPlan::temporal(0.7, 0.4, 2.0);
    plan.levels = vec![10, 20, 40];
    plan.reference = 160;
    plan.fixed = 16;
    plan.trajectories = 12;
    let a = run_study_with_workers(&plan, 1).unwrap().to_csv();
    let b = run_study_with_workers(&plan, 5).unwrap().to_csv();
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 1 + 3 + 2);
}
