use gecko::engine::{gecko_run, GeckoConfig, GeckoStatus, RestoreSchedule};
use gecko::error::GeckoError;
use gecko::pulse::{fidelity, GateTarget, HamiltonianSpec};
use gecko::quality::{q_smooth, QualitySpec};
use gecko::restore::{random_pulse, restore, RestoreConfig, RestoreMethod};

#[test]
fn gradient_ascent_restorer_solves_and_respects_budget() {
    let spec = HamiltonianSpec::tfim1_h2zero(1.0);
    let target = GateTarget::cz();
    let cfg = RestoreConfig { method: RestoreMethod::GradientAscent, ..Default::default() };
    let mut solved = 0;
    for seed in 0..5 {
        let start = random_pulse(&spec, 4, 1.0, 3.0, seed).unwrap();
        if let Ok(p) = restore(&spec, &start, &target, &cfg) {
            assert!(fidelity(&spec, &p, &target).unwrap() > 1.0 - 1e-7);
            solved += 1;
        }
    }
    assert!(solved >= 4, "{solved}/5");

    let tiny = RestoreConfig { max_iters: 3, method: RestoreMethod::GradientAscent, ..Default::default() };
    let start = random_pulse(&spec, 4, 1.0, 3.0, 0).unwrap();
    match restore(&spec, &start, &target, &tiny) {
        Err(GeckoError::RestoreFailed { best, fidelity: f, .. }) => {
            assert!(f >= fidelity(&spec, &start, &target).unwrap());
            assert_eq!(best.n_segments(), 4);
        }
        other => panic!("expected RestoreFailed, got {other:?}"),
    }
}

#[test]
fn both_restore_methods_reach_the_same_threshold() {
    let spec = HamiltonianSpec::tfim2(1.0);
    let target = GateTarget::cnot();
    for method in [RestoreMethod::GradientAscent, RestoreMethod::Geodesic] {
        let cfg = RestoreConfig { method, epsilon: 1e-6, ..Default::default() };
        let p = restore(&spec, &random_pulse(&spec, 10, 1.0, 1.0, 2).unwrap(), &target, &cfg).unwrap();
        assert!(fidelity(&spec, &p, &target).unwrap() > 1.0 - 1e-6, "{method:?}");
    }
}

#[test]
fn periodic_restoration_keeps_constraint_at_checkpoints() {
    let spec = HamiltonianSpec::tfim1_h2zero(1.0);
    let target = GateTarget::cz();
    let rc = RestoreConfig::default();
    let p = restore(&spec, &random_pulse(&spec, 12, 1.0, 1.0, 3).unwrap(), &target, &rc).unwrap();
    let cfg = GeckoConfig { step_size: 0.05, max_iters: 30, restore: RestoreSchedule::Every(10), ..Default::default() };
    let trace = gecko_run(&spec, &p, &target, &QualitySpec::Smooth, &cfg, &rc).unwrap();
    assert_eq!(trace.status, GeckoStatus::BudgetExhausted);
    for r in trace.records.iter().filter(|r| r.iter % 10 == 0) {
        assert!(r.restored && r.fidelity > 1.0 - 1e-7, "iteration {}", r.iter);
    }
    assert!(fidelity(&spec, &trace.pulse, &target).unwrap() > 1.0 - 1e-7);
    assert!(q_smooth(&trace.pulse) < q_smooth(&p));
}
