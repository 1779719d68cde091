use std::collections::BTreeMap;

use proptest::prelude::*;

use super::*;
use crate::sampling::{SampleBox, Sampler};

fn p(s: &str) -> ScalarExpr {
    parse(s).unwrap_or_else(|e| panic!("{s}: {e}"))
}

fn point(pairs: &[(&str, f64)]) -> Point {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

#[test]
fn canonical_examples() {
    assert!(p("x*(x+1) - x^2").equiv(&p("x")));
    assert_eq!(p("x*(x+1) - x^2"), p("x"));
    assert!(p("sin(x)*0 + 3/3").is_one());
    assert!(p("(x+y)^2 - (x^2 + 2*x*y + y^2)").is_zero());
}

#[test]
fn products_cancel_shared_factors() {
    let a = p("x^3 + y*z + 7");
    let q = (p("y + 1") / a.clone()) * (a.clone() / p("z^2 + x"));
    assert_eq!(q, p("(y + 1)/(z^2 + x)"));
    let s = p("1/(x + y)") + p("1/((x + y)*(x - y))");
    assert_eq!(s.den(), p("(x + y)*(x - y)").num());
    assert!(s.equiv(&p("(x - y + 1)/(x^2 - y^2)")));
}

#[test]
fn exact_division() {
    let d = p("x + y + 1");
    let n = p("(x + y + 1)*(x^2 - y)");
    assert_eq!(n.num().exact_div(d.num()), Some(p("x^2 - y").num().clone()));
    assert_eq!(p("x^2 - y + 3").num().exact_div(d.num()), None);
    assert_eq!(p("x^5 + 1").num().exact_div(p("x^2*y + 1").num()), None);
    assert_eq!(p("x^40 - 1").num().exact_div(p("x - 1").num()).map(|q| q.len()), Some(40));
}

#[test]
fn canon_is_idempotent_on_rational_functions() {
    for s in ["(x^2 - 1)/(x - 1)", "(x*y + x)/(x*z)", "(2*x + 2)/(4*y + 4)", "1/(x+y) - 1/(x-y)"] {
        let e = p(s);
        assert_eq!(e.canon(), e);
        assert_eq!(e.canon().canon(), e.canon());
    }
    assert_eq!(p("(x^2 - 1)/(x - 1)"), p("x + 1"));
    assert_eq!(p("(x*y + x)/(x*z)"), p("(y + 1)/z"));
}

#[test]
fn derivative_examples() {
    assert_eq!(p("x^2*y").diff("x"), p("2*x*y"));
    assert_eq!(p("sin(x)").diff("x"), p("cos(x)"));
    assert!(p("y^3 + 7").diff("x").is_zero());
    assert_eq!(p("ln(x^2 + 1)").diff("x"), p("2*x/(x^2 + 1)"));
    assert_eq!(p("exp(2*x)").diff("x"), p("2*exp(2*x)"));
    assert_eq!(p("cos(x*y)").diff("y"), p("-x*sin(x*y)"));
    assert_eq!(p("1/x").diff("x"), p("-1/x^2"));
}

#[test]
fn opaque_functions_use_chain_rule() {
    let f = p("F(x, x*y)");
    let df = f.diff("x");
    assert_eq!(df, p("F:0(x, x*y) + y*F:1(x, x*y)"));
    let mixed = f.diff("x").diff("y");
    let other = f.diff("y").diff("x");
    assert!(mixed.equiv(&other));
}

#[test]
fn evaluation_examples() {
    assert_eq!(p("x^2 + y").eval(&point(&[("x", 2.0), ("y", 1.0)])).unwrap(), 5.0);
    assert!(matches!(p("1/x").eval(&point(&[("x", 0.0)])), Err(Error::DivisionByZero { .. })));
    assert_eq!(p("exp(0)*7").eval(&point(&[])).unwrap(), 7.0);
    assert!(matches!(p("x + q").eval(&point(&[("x", 1.0)])), Err(Error::UnboundVariable(v)) if v == "q"));
    assert!(matches!(p("ln(x)").eval(&point(&[("x", -1.0)])), Err(Error::Domain(_))));
}

#[test]
fn zero_test_examples() {
    let s = Sampler::default();
    assert_eq!(p("x^2 - x*x").zero_test(&s), ZeroTest::Zero);
    let unit = Sampler { bounds: SampleBox { lo: 0.0, hi: 1.0 }, ..Sampler::default() };
    match p("x + 1").zero_test(&unit) {
        ZeroTest::NonZero(w) => assert!(w["x"] + 1.0 > 1e-9),
        other => panic!("{other:?}"),
    }
    let pyth = p("sin(x)^2 + cos(x)^2 - 1");
    assert!(!pyth.is_zero());
    assert_eq!(pyth.zero_test(&s), ZeroTest::Unknown);
    assert_eq!(pyth.pythagorean().zero_test(&s), ZeroTest::Zero);
}

#[test]
fn pythagorean_unknown_is_confirmed_by_dense_sampling() {
    let e = p("sin(x)^2 + cos(x)^2 - 1");
    let dense = Sampler::default().with_count(1000);
    for pt in dense.random_points() {
        assert!(e.eval(&pt).unwrap().abs() <= 1e-9);
    }
}

#[test]
fn zero_test_finds_zero_locus_witness() {
    // x1 * (x2 - 1/3): nonzero polynomial; witness must make it nonzero.
    let s = Sampler::default().with_coords(vec!["x1".into(), "x2".into()]);
    match p("x1*(x2 - 1/3)").zero_test(&s) {
        ZeroTest::NonZero(w) => assert!((w["x1"] * (w["x2"] - 1.0 / 3.0)).abs() > 1e-9),
        other => panic!("{other:?}"),
    }
}

#[test]
fn substitution() {
    let mut m = BTreeMap::new();
    m.insert("z".to_string(), p("x^2"));
    assert_eq!(p("z*y + sin(z)").subst(&m), p("x^2*y + sin(x^2)"));
    let mut zero = BTreeMap::new();
    zero.insert("x".to_string(), ScalarExpr::zero());
    assert_eq!(p("sin(x) + cos(x) + exp(x) + ln(1 + x)").subst(&zero), p("2"));
}

#[test]
fn free_symbols() {
    let e = p("x*F(y, sin(z)) + w");
    let vars: Vec<String> = e.free_vars().into_iter().collect();
    assert_eq!(vars, vec!["w", "x", "y", "z"]);
    assert_eq!(e.opaque_keys().into_iter().collect::<Vec<_>>(), vec!["F(y,sin(z))"]);
    assert!(e.has_function_atoms());
    assert!(!e.has_transcendental() || e.to_string().contains("sin"));
}

// Random polynomials of total degree <= 4 in up to four variables.
fn poly_strategy() -> impl Strategy<Value = ScalarExpr> {
    let vars = ["a", "b", "c", "d"];
    let term = (-5i64..=5, prop::collection::vec(0u32..=2, 4)).prop_map(move |(c, es)| {
        let mut t = ScalarExpr::int(c);
        let mut deg = 0;
        for (v, e) in vars.iter().zip(es) {
            let e = e.min(4 - deg);
            deg += e;
            t = t * ScalarExpr::var(v).pow(e as i32);
        }
        t
    });
    prop::collection::vec(term, 1..5).prop_map(|ts| ts.into_iter().sum())
}

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn product_evaluates_pointwise(e1 in poly_strategy(), e2 in poly_strategy()) {
        let prod = (&e1 * &e2).canon();
        for pt in Sampler::default().with_count(20).random_points() {
            let lhs = prod.eval(&pt).unwrap();
            let rhs = e1.eval(&pt).unwrap() * e2.eval(&pt).unwrap();
            prop_assert!(rel_close(lhs, rhs), "{} vs {}", lhs, rhs);
        }
    }

    #[test]
    fn product_rule(e1 in poly_strategy(), e2 in poly_strategy()) {
        for v in ["a", "b"] {
            let lhs = (&e1 * &e2).diff(v);
            let rhs = e1.diff(v) * &e2 + &e1 * e2.diff(v);
            prop_assert!((lhs - rhs).is_zero());
        }
    }

    #[test]
    fn canon_idempotent(e1 in poly_strategy(), e2 in poly_strategy()) {
        let e = &e1 * &e2 - &e2;
        prop_assert_eq!(e.canon(), e.clone());
        prop_assert_eq!(e.canon().canon(), e.canon());
        if !e2.is_zero() {
            let q = &e1 / &e2;
            prop_assert_eq!(q.canon(), q.clone());
            prop_assert!((q * &e2 - &e1).is_zero());
        }
    }

    #[test]
    fn display_reparses(e1 in poly_strategy(), e2 in poly_strategy()) {
        let e = if e2.is_zero() { e1 } else { &e1 / &e2 };
        prop_assert_eq!(parse(&e.to_string()).unwrap(), e);
    }
}
