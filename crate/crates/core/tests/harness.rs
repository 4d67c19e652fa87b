use sublaplace::harness::{generate_grid, limit_diagram_check, run_verification, GridSpec, ResidualReport, Sweep};
use sublaplace::suite;
use sublaplace::{FamilyTag, OperatorTag, Space};

fn g1() -> Space {
    Space::grushin(1, 0.0, 0.0, 1.0).unwrap()
}

fn sweep() -> Sweep {
    Sweep::new(OperatorTag::ModifiedPLaplacian, FamilyTag::FPL, &[1.5, 3.0, 3.5, 10.0], &[0.0, 0.5, 2.0, 1.0])
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let pts = generate_grid(&GridSpec::new(g1())).unwrap();
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = single.install(|| run_verification(&sweep(), &g1(), &pts)).unwrap();
    let b = many.install(|| run_verification(&sweep(), &g1(), &pts)).unwrap();
    assert_eq!(a.canonical_json().unwrap(), b.canonical_json().unwrap());
}

#[test]
fn passing_reports_pass_pointwise_and_round_trip() {
    let pts = generate_grid(&GridSpec::new(g1())).unwrap();
    let r = run_verification(&sweep(), &g1(), &pts).unwrap();
    assert!(r.pass);
    assert!(r.residuals.iter().all(|x| x.pass && x.relative <= r.tolerance));
    assert_eq!(r.skipped.len(), 4);
    assert!(r.skipped.iter().all(|s| s.l == 1.0));
    let back = ResidualReport::from_json(&r.to_json().unwrap()).unwrap();
    assert_eq!(back, r);
    let json: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
    for key in ["operator", "family", "params", "points", "residuals", "max_rel", "pass"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn infinity_limit_is_monotone_for_grushin_example() {
    let pts = generate_grid(&GridSpec::new(g1())).unwrap();
    let r = limit_diagram_check(&g1(), &pts, &[0.5], &suite::LADDER, 1e-8).unwrap();
    let top = r.edge("top").unwrap();
    assert!(top.pass && top.worst < 1.0);
    assert!(r.pass);
}

#[test]
fn acceptance_grids_are_full() {
    for space in suite::all_spaces() {
        assert_eq!(suite::default_grid(&space).unwrap().len(), 64);
    }
}
