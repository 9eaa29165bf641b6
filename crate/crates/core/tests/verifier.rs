use qgame_core::verifier::{verify_many, ALL_STAGES, NEGATIVE_CONTROL};
use qgame_core::{verify_stage, StageParams};

fn value_of(report: &qgame_core::StageReport, prefix: &str) -> f64 {
    report.checks.iter().find(|c| c.description.starts_with(prefix)).unwrap_or_else(|| panic!("{prefix}")).lhs
}

#[test]
fn every_stage_passes_across_seeds() {
    for seed in [1, 7, 2024] {
        for (id, report) in verify_many(&ALL_STAGES, &StageParams::default(), seed) {
            let report = report.unwrap_or_else(|e| panic!("{id} seed {seed}: {e}"));
            assert!(report.pass, "{id} seed {seed}");
            assert!(!report.expected_failure);
        }
    }
}

#[test]
fn stage_values_against_closed_forms() {
    let p = StageParams { x1: Some(2.0), x2: Some(-4.0), ..Default::default() };
    let s1 = verify_stage("S1", &p, 0).unwrap();
    assert!((value_of(&s1, "V(ψ,X) = ½") + 1.0).abs() < 1e-12);

    let s3 = verify_stage("S3", &StageParams { a1: Some(3), a2: Some(5), ..Default::default() }, 0).unwrap();
    assert!((value_of(&s3, "(3,5): V = ") - 5.0 / 8.0).abs() < 1e-12);

    let s4 = verify_stage("S4", &StageParams { a: Some(0.2), x1: Some(1.0), x2: Some(3.0), depth: Some(30), ..Default::default() }, 0).unwrap();
    assert!(s4.pass);
    let gap = s4.checks.iter().find(|c| c.description.starts_with("|V − (a x₁")).unwrap();
    assert!(gap.lhs < 1e-12);
}

#[test]
fn negative_control_breaks_only_the_conclusion() {
    let r = verify_stage(NEGATIVE_CONTROL, &StageParams { alpha: Some(0.8), ..Default::default() }, 0).unwrap();
    assert!(!r.pass && r.as_expected());
    assert!((value_of(&r, "V(ψ,X) = ½") - 0.36).abs() < 1e-12);
    let failing: Vec<_> = r.checks.iter().filter(|c| !c.pass).map(|c| c.description.as_str()).collect();
    assert!(failing.contains(&"U_f ψ = ψ"), "{failing:?}");
}

#[test]
fn reports_are_reproducible() {
    let a = verify_many(&ALL_STAGES, &StageParams::default(), 11);
    let b = verify_many(&ALL_STAGES, &StageParams::default(), 11);
    for ((_, x), (_, y)) in a.iter().zip(&b) {
        let (x, y) = (x.as_ref().unwrap(), y.as_ref().unwrap());
        assert_eq!(format!("{x:?}"), format!("{y:?}"));
    }
}
