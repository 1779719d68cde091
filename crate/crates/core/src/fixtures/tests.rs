use super::*;

fn failures(r: &FixtureReport) -> Vec<String> {
    r.items.iter().filter(|i| !i.passed).map(|i| format!("{}: {:?}", i.name, i.detail)).collect()
}

#[test]
fn example1_matches_goldens() {
    let r = run_fixture("example1").unwrap();
    assert!(r.passed, "{:#?}", failures(&r));
    assert!(r.items.len() >= 12);
}

#[test]
fn example2_matches_goldens() {
    let r = run_fixture("example2").unwrap();
    assert!(r.passed, "{:#?}", failures(&r));
}

#[test]
fn example3_matches_goldens() {
    let r = run_fixture("example3").unwrap();
    assert!(r.passed, "{:#?}", failures(&r));
    assert!(r.items.iter().any(|i| i.name.starts_with("psi[3] = ")));
}

#[test]
fn example2_errata_side_by_side() {
    let r = run_fixture("example2").unwrap();
    let literal = r.errata.iter().find(|e| e.item == "delta[0]").unwrap();
    assert_eq!(literal.matches, Some(false));
    let factor = r.errata.iter().find(|e| e.item == "pullback[0]").unwrap();
    assert_eq!(factor.matches, Some(false));
    // printed (1/12)·(ε form) against the coefficient (1/2)·(ε form)
    assert_eq!(factor.ratio.as_deref(), Some("1/6"));
}

#[test]
fn example3_printed_forms_differ() {
    let r = run_fixture("example3").unwrap();
    for item in ["psi[1]", "psi[3]"] {
        let e = r.errata.iter().find(|e| e.item == item).unwrap();
        assert_eq!(e.matches, Some(false), "{item}");
        assert_ne!(e.printed, e.engine);
    }
}

#[test]
fn goldens_reparse_identically() {
    for name in EXAMPLES {
        let spec = load(name).unwrap();
        let again = ProblemSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(spec, again);
        let (chart, ctx, _) = spec.input().unwrap();
        for psi in &spec.golden.as_ref().unwrap().psi {
            let a = build_form(&chart, &ctx, psi, "psi").unwrap();
            let b = build_form(&chart, &ctx, psi, "psi").unwrap();
            assert_eq!(a.to_string(), b.to_string());
        }
    }
}

#[test]
fn corrupted_golden_fails() {
    let mut spec = load("example1").unwrap();
    spec.golden.as_mut().unwrap().deltas[0].scale = "-1".into();
    let r = run_spec(&spec, &spec.sampler(None)).unwrap();
    assert!(!r.passed);
    assert_eq!(failures(&r).len(), 1);
}

#[test]
fn unknown_example() {
    assert!(run_fixture("example4").is_err());
}

#[test]
fn reports_are_deterministic() {
    let a = serde_json::to_string(&run_fixture("example3").unwrap()).unwrap();
    let b = serde_json::to_string(&run_fixture("example3").unwrap()).unwrap();
    assert_eq!(a, b);
}
