use cutdg::verify::{run_identity_suite, VerifyOptions, IDENTITIES};

#[test]
fn identity_suite_passes_on_a_short_run() {
    let opts = VerifyOptions { trials: 24, seed: 7, ..Default::default() };
    let rep = run_identity_suite(&opts).unwrap();
    for r in &rep.results {
        eprintln!("{:24} {:>6} {:.3e}", r.name, r.trials, r.max_residual);
    }
    assert_eq!(rep.results.len(), IDENTITIES.len());
    assert!(rep.results.iter().all(|r| r.trials >= 24));
    assert!(rep.passes(), "{}", rep.to_csv());
}

#[test]
fn corrupted_coefficient_breaks_balance() {
    let opts = VerifyOptions { trials: 4, seed: 11, corrupt: Some(1e-3), ..Default::default() };
    let rep = run_identity_suite(&opts).unwrap();
    assert!(!rep.passes());
    assert!(rep.get("balance").unwrap().max_residual > 1e-6);
    assert!(rep.get("mirror_skew_symmetry").unwrap().max_residual <= 1e-11);
}
