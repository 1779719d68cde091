use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::symexpr::parse;

fn p(s: &str) -> ScalarExpr {
    parse(s).unwrap()
}

fn chart_xz() -> Arc<BundleChart> {
    BundleChart::new(&["x1", "x2"], &["z1", "z2", "z3"], &[]).unwrap()
}

fn mono(chart: &Arc<BundleChart>, c: &str, idx: &[&str]) -> DiffForm {
    DiffForm::monomial(chart, p(c), idx).unwrap()
}

#[test]
fn chart_validation() {
    assert!(BundleChart::new(&["x"], &["x"], &[]).is_err());
    assert!(BundleChart::new(&[], &["z"], &[]).is_err());
    assert!(BundleChart::new(&["x"], &[], &[]).is_err());
    assert!(BundleChart::new(&["1x"], &["z"], &[]).is_err());
    let c = BundleChart::new(&["x1", "x2"], &["z1", "z2", "z3"], &["w"]).unwrap();
    assert_eq!((c.k(), c.p(), c.s(), c.dim()), (2, 3, 1, 6));
    assert!(c.nonproper_candidate());
    assert_eq!(c.fibers(), &["z1", "z2", "z3", "w"]);
}

#[test]
fn wedge_examples() {
    let c = chart_xz();
    let dx1 = DiffForm::d(&c, "x1").unwrap();
    let dx2 = DiffForm::d(&c, "x2").unwrap();
    assert!(dx1.wedge(&dx2).unwrap().wedge(&dx2).unwrap().is_zero());
    let a = mono(&c, "1", &["z1", "z2"]);
    let b = mono(&c, "1", &["z2", "z1"]);
    assert!(a.equiv(&-&b));
    // (dz1 + B11 dx1) ∧ (dz2 + B21 dx1), expanded term by term by hand.
    let a1 = mono(&c, "1", &["z1"]) + mono(&c, "B11", &["x1"]);
    let a2 = mono(&c, "1", &["z2"]) + mono(&c, "B21", &["x1"]);
    let expected = mono(&c, "1", &["z1", "z2"]) + mono(&c, "B21", &["z1", "x1"]) - mono(&c, "B11", &["z2", "x1"]);
    assert!(a1.wedge(&a2).unwrap().equiv(&expected));
}

#[test]
fn wedge_rejects_foreign_chart() {
    let a = DiffForm::d(&chart_xz(), "x1").unwrap();
    let other = BundleChart::new(&["x1"], &["z1"], &[]).unwrap();
    let b = DiffForm::d(&other, "x1").unwrap();
    assert!(matches!(a.wedge(&b), Err(Error::ChartMismatch)));
}

#[test]
fn exterior_derivative_examples() {
    let c = chart_xz();
    let a = mono(&c, "x1", &["z1"]);
    assert!(a.ext_d().equiv(&mono(&c, "1", &["x1", "z1"])));
    let f = DiffForm::scalar(&c, p("x1^2*z2 + z1*z3 - x2"));
    assert!(f.ext_d().ext_d().is_zero());
}

#[test]
fn interior_examples() {
    let c = chart_xz();
    let dz1 = VecField::coordinate(&c, "z1").unwrap();
    let f = mono(&c, "1", &["z1", "z2"]);
    assert!(f.interior(&dz1).unwrap().equiv(&mono(&c, "1", &["z2"])));
    // ∂/∂z^a ⨼ α_j = δ_aj for α_j = dz^j + B_jm dx^m.
    for j in 1..=3 {
        let alpha = mono(&c, "1", &[&format!("z{j}")])
            + mono(&c, &format!("B{j}1"), &["x1"])
            + mono(&c, &format!("B{j}2"), &["x2"]);
        for a in 1..=3 {
            let v = VecField::coordinate(&c, &format!("z{a}")).unwrap();
            let r = alpha.interior(&v).unwrap();
            assert_eq!(r.coeff(0), if a == j { ScalarExpr::one() } else { ScalarExpr::zero() });
        }
    }
}

#[test]
fn pullback_examples() {
    let c = chart_xz();
    let phi = SectionMap::new(&c, vec![p("x1^2*x2"), p("sin(x2)"), p("3")]).unwrap();
    let dz1 = DiffForm::d(&c, "z1").unwrap();
    let got = phi.pullback(&dz1).unwrap();
    let expected = mono(&c, "2*x1*x2", &["x1"]) + mono(&c, "x1^2", &["x2"]);
    assert!(got.equiv(&expected));
    let formal = formal_pullback(&dz1).unwrap();
    assert!(formal.equiv(&(mono(&c, "Dz1_x1", &["x1"]) + mono(&c, "Dz1_x2", &["x2"]))));
    assert!(SectionMap::new(&c, vec![p("z2"), p("0"), p("0")]).is_err());
}

#[test]
fn pullback_of_normal_factor() {
    // φ*(dz^i + B_im dx^m) = (B_im + ∂z^i/∂x^m) dx^m, formally in jets.
    let c = chart_xz();
    let alpha = mono(&c, "1", &["z2"]) + mono(&c, "B21", &["x1"]) + mono(&c, "B22", &["x2"]);
    let got = formal_pullback(&alpha).unwrap();
    let expected = mono(&c, "B21 + Dz2_x1", &["x1"]) + mono(&c, "B22 + Dz2_x2", &["x2"]);
    assert!(got.equiv(&expected));
}

#[test]
fn bracket_examples() {
    let c = chart_xz();
    let d1 = VecField::coordinate(&c, "x1").unwrap();
    let d2 = VecField::coordinate(&c, "x2").unwrap();
    assert!(lie_bracket(&d1, &d2).unwrap().is_zero());
    let y1 = VecField::from_pairs(&c, &[("x1", p("1")), ("z1", p("-2")), ("z2", p("-1/3"))]).unwrap();
    let y2 = VecField::from_pairs(&c, &[("x2", p("1")), ("z3", p("5"))]).unwrap();
    assert!(lie_bracket(&y1, &y2).unwrap().is_zero());
    let x = VecField::from_pairs(&c, &[("x1", p("1"))]).unwrap();
    let y = VecField::from_pairs(&c, &[("z1", p("x1"))]).unwrap();
    assert!(lie_bracket(&x, &y).unwrap().equiv(&VecField::coordinate(&c, "z1").unwrap()));
}

#[test]
fn lie_derivative_examples() {
    let c = BundleChart::new(&["x"], &["z"], &[]).unwrap();
    let dx = VecField::coordinate(&c, "x").unwrap();
    assert_eq!(lie_derivative(&dx, &p("x^2")), p("2*x"));
    let y = VecField::from_pairs(&c, &[("x", p("A(x)"))]).unwrap();
    assert!(lie_derivative(&y, &p("z")).is_zero());
}

#[test]
fn hodge_examples() {
    let c = BundleChart::euclidean(&["x1", "x2", "x3"]).unwrap();
    let dx1 = DiffForm::d(&c, "x1").unwrap();
    assert!(dx1.hodge_star().equiv(&mono(&c, "1", &["x2", "x3"])));
    let one = DiffForm::scalar(&c, ScalarExpr::one());
    assert!(one.hodge_star().equiv(&DiffForm::volume(&c)));
    let dx2 = DiffForm::d(&c, "x2").unwrap();
    assert!(dx2.hodge_star().equiv(&mono(&c, "1", &["x3", "x1"])));
}

#[test]
fn dual_examples() {
    let c = BundleChart::new(&["t"], &["z", "w"], &[]).unwrap();
    let dt = VecField::coordinate(&c, "t").unwrap();
    assert!(dual_one_form(&dt).equiv(&DiffForm::d(&c, "t").unwrap()));
    let z = VecField::from_pairs(&c, &[("t", p("1")), ("z", p("f(t,z)"))]).unwrap();
    assert!(dual_one_form(&z).equiv(&(DiffForm::d(&c, "t").unwrap() + mono(&c, "f(t,z)", &["z"]))));
    assert!(dual_one_form(&VecField::zero(&c)).is_zero());
}

// ---- randomized structural identities ----

const NAMES: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

fn rand_chart(n: usize) -> Arc<BundleChart> {
    BundleChart::euclidean(&NAMES[..n]).unwrap()
}

fn rand_poly(rng: &mut ChaCha8Rng, n: usize) -> ScalarExpr {
    let mut acc = ScalarExpr::zero();
    for _ in 0..rng.random_range(1..4) {
        let mut t = ScalarExpr::int(rng.random_range(-3..=3));
        for _ in 0..rng.random_range(0..3) {
            t = t * ScalarExpr::var(NAMES[rng.random_range(0..n)]);
        }
        acc = acc + t;
    }
    acc
}

fn rand_form(rng: &mut ChaCha8Rng, chart: &Arc<BundleChart>, degree: usize) -> DiffForm {
    let n = chart.dim();
    let mut out = DiffForm::zero(chart, degree);
    for _ in 0..rng.random_range(1..4) {
        let mut pos: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            pos.swap(i, rng.random_range(0..=i));
        }
        pos.truncate(degree);
        out.add_term(&pos, rand_poly(rng, n));
    }
    out
}

fn rand_field(rng: &mut ChaCha8Rng, chart: &Arc<BundleChart>) -> VecField {
    let n = chart.dim();
    VecField::new(chart, (0..n).map(|_| rand_poly(rng, n)).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn d_squared_vanishes(seed in any::<u64>(), n in 2usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = rand_chart(n);
        let q = rng.random_range(0..n - 1);
        let a = rand_form(&mut rng, &c, q);
        prop_assert!(a.ext_d().ext_d().is_zero());
    }

    #[test]
    fn interior_is_antiderivation(seed in any::<u64>(), n in 2usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = rand_chart(n);
        let qa = rng.random_range(1..n);
        let qb = rng.random_range(0..=n - qa);
        let a = rand_form(&mut rng, &c, qa);
        let b = rand_form(&mut rng, &c, qb);
        let x = rand_field(&mut rng, &c);
        let lhs = a.wedge(&b).unwrap().interior(&x).unwrap();
        let t1 = a.interior(&x).unwrap().wedge(&b).unwrap();
        let rhs = if qb == 0 {
            t1
        } else {
            let t2 = a.wedge(&b.interior(&x).unwrap()).unwrap();
            if qa % 2 == 0 { t1 + t2 } else { t1 - t2 }
        };
        prop_assert!(lhs.equiv(&rhs));
        prop_assert!(a.interior(&x).unwrap().interior(&x).unwrap().is_zero());
    }

    #[test]
    fn pullback_commutes_with_d(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = BundleChart::new(&["a", "b"], &["c", "d"], &[]).unwrap();
        let q = rng.random_range(0..3);
        let form = rand_form(&mut rng, &c, q);
        let phi = SectionMap::new(&c, (0..2).map(|_| rand_poly(&mut rng, 2)).collect()).unwrap();
        let lhs = phi.pullback(&form.ext_d()).unwrap();
        let rhs = phi.pullback(&form).unwrap().ext_d();
        prop_assert!(lhs.equiv(&rhs));
    }

    #[test]
    fn wedge_associative_and_graded(seed in any::<u64>(), n in 3usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = rand_chart(n);
        let qa = rng.random_range(0..=2);
        let qb = rng.random_range(0..=2);
        let qc = rng.random_range(0..=1);
        let a = rand_form(&mut rng, &c, qa);
        let b = rand_form(&mut rng, &c, qb);
        let cc = rand_form(&mut rng, &c, qc);
        let l = a.wedge(&b).unwrap().wedge(&cc).unwrap();
        let r = a.wedge(&b.wedge(&cc).unwrap()).unwrap();
        prop_assert!(l.equiv(&r));
        let ab = a.wedge(&b).unwrap();
        let ba = b.wedge(&a).unwrap();
        let ok = if (qa * qb) % 2 == 0 { ab.equiv(&ba) } else { ab.equiv(&-ba) };
        prop_assert!(ok);
    }

    #[test]
    fn leibniz_rule(seed in any::<u64>(), n in 2usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = rand_chart(n);
        let qa = rng.random_range(0..n);
        let qb = rng.random_range(0..n - qa);
        let a = rand_form(&mut rng, &c, qa);
        let b = rand_form(&mut rng, &c, qb);
        let lhs = a.wedge(&b).unwrap().ext_d();
        let t1 = a.ext_d().wedge(&b).unwrap();
        let t2 = a.wedge(&b.ext_d()).unwrap();
        let rhs = if qa % 2 == 0 { t1 + t2 } else { t1 - t2 };
        prop_assert!(lhs.equiv(&rhs));
    }

    #[test]
    fn jacobi_identity(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = rand_chart(3);
        let x = rand_field(&mut rng, &c);
        let y = rand_field(&mut rng, &c);
        let z = rand_field(&mut rng, &c);
        let j = x.bracket(&y.bracket(&z).unwrap()).unwrap()
            .try_add(&y.bracket(&z.bracket(&x).unwrap()).unwrap()).unwrap()
            .try_add(&z.bracket(&x.bracket(&y).unwrap()).unwrap()).unwrap();
        prop_assert!(j.is_zero());
        prop_assert!(x.bracket(&y).unwrap().equiv(&y.bracket(&x).unwrap().scale(&ScalarExpr::int(-1))));
    }
}

#[test]
fn double_hodge_sign_on_all_basis_forms() {
    for n in 1..=6 {
        let c = rand_chart(n);
        for mask in 0u64..(1 << n) {
            let k = mask.count_ones() as usize;
            let mut f = DiffForm::zero(&c, k);
            f.add_mask(mask, ScalarExpr::one());
            let ss = f.hodge_star().hodge_star();
            let expected = if (k * (n - k)).is_multiple_of(2) { f.clone() } else { -&f };
            assert!(ss.equiv(&expected), "n={n} mask={mask:b}");
        }
    }
}

#[test]
fn coefficient_lookup_respects_order() {
    let c = chart_xz();
    let f = mono(&c, "B", &["z3", "z1", "x1"]);
    assert_eq!(f.coeff_of(&["z3", "z1", "x1"]).unwrap(), p("B"));
    assert_eq!(f.coeff_of(&["z1", "z3", "x1"]).unwrap(), p("-B"));
    assert!(f.coeff_of(&["z1", "z1", "x1"]).unwrap().is_zero());
    let m: BTreeMap<String, ScalarExpr> = [("B".to_string(), p("2"))].into_iter().collect();
    assert_eq!(f.subst(&m).coeff_of(&["x1", "z1", "z3"]).unwrap(), p("-2"));
}
