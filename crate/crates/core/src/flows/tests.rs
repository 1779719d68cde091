use super::*;
use crate::forms::DiffForm;
use crate::liouville::homotopy_antiderivative;
use crate::symexpr::{parse, ParseContext};
use crate::varprin::ProblemInput;

fn p(s: &str) -> ScalarExpr {
    parse(s).unwrap()
}

fn field(chart: &Arc<BundleChart>, comps: &[&str]) -> VecField {
    VecField::new(chart, comps.iter().map(|c| p(c)).collect()).unwrap()
}

fn one_form(c: &Arc<BundleChart>, terms: &[(&str, &str)]) -> DiffForm {
    let mut out = DiffForm::zero(c, 1);
    for (name, coeff) in terms {
        out = out + DiffForm::monomial(c, p(coeff), &[name]).unwrap();
    }
    out
}

const B: [[&str; 2]; 3] = [["1", "-2"], ["3/2", "1/2"], ["0", "-1"]];
const BF: [[f64; 2]; 3] = [[1.0, -2.0], [1.5, 0.5], [0.0, -1.0]];

fn constant_example1() -> VariationalProblem {
    let c = BundleChart::new(&["x1", "x2"], &["z1", "z2", "z3"], &[]).unwrap();
    let alphas = (0..3)
        .map(|a| {
            let z = format!("z{}", a + 1);
            one_form(&c, &[(&z, "1"), ("x1", B[a][0]), ("x2", B[a][1])])
        })
        .collect();
    VariationalProblem::build(ProblemInput::Factors(alphas), &Sampler::default()).unwrap()
}

#[test]
fn coordinate_flow_is_exact() {
    let c = BundleChart::euclidean(&["a", "b", "c"]).unwrap();
    let path = flow(&field(&c, &["1", "0", "0"]), &[0.0; 3], 1.0, &FlowOptions::default()).unwrap();
    assert_eq!(path.len(), 1001);
    assert_eq!(path.last().unwrap(), &vec![1.0, 0.0, 0.0]);
    let back = flow(&field(&c, &["1", "0", "0"]), &[0.0; 3], -0.25, &FlowOptions::with_step(0.1)).unwrap();
    assert_eq!(back.len(), 4);
    assert!((back[3][0] + 0.25).abs() < 1e-15);
}

fn exp_error(step: f64) -> f64 {
    let c = BundleChart::euclidean(&["t", "z"]).unwrap();
    let end = flow(&field(&c, &["1", "z"]), &[0.0, 1.0], 1.0, &FlowOptions::with_step(step)).unwrap();
    (end.last().unwrap()[1] - 1f64.exp()).abs()
}

#[test]
fn exponential_flow_accuracy_and_order() {
    assert!(exp_error(1e-3) < 1e-8);
    let ratio = exp_error(0.1) / exp_error(0.05);
    assert!(ratio >= 8.0, "ratio {ratio}");
}

#[test]
fn flow_errors() {
    let c = BundleChart::euclidean(&["x", "y"]).unwrap();
    let opts = FlowOptions { step: 0.01, bounds: Some(vec![(-1.0, 1.0), (-1.0, 1.0)]) };
    assert!(matches!(flow(&field(&c, &["1", "0"]), &[0.0, 0.0], 2.0, &opts), Err(Error::BoxExit(_))));
    let singular = field(&c, &["1/x", "0"]);
    assert!(matches!(
        flow(&singular, &[0.0, 0.0], 1.0, &FlowOptions::default()),
        Err(Error::EvaluationFailure(_))
    ));
    assert!(flow(&field(&c, &["1", "0"]), &[0.0, 0.0], 1.0, &FlowOptions::with_step(0.0)).is_err());
}

#[test]
fn commutation_defects() {
    let c = BundleChart::euclidean(&["x", "z"]).unwrap();
    let opts = FlowOptions::default();
    let d = commutation_defect_pair(&field(&c, &["1", "0"]), &field(&c, &["0", "1"]), &[0.3, 0.1], 0.2, &opts);
    assert!(d.unwrap() < 1e-14);
    // φ_X^t(x, z) = (x + t, z) and φ_Y^t(x, z) = (x, z + xt); starting at
    // the origin the two compositions end at (t, t²) and (t, 0).
    let d = commutation_defect_pair(&field(&c, &["1", "0"]), &field(&c, &["0", "x"]), &[0.0, 0.0], 0.1, &opts);
    assert!((d.unwrap() - 0.01).abs() < 1e-12);
}

#[test]
fn constant_example1_fields_commute() {
    let vp = constant_example1();
    let d = vp.annihilator().unwrap();
    let defect = commutation_defect(&d, &[0.2, -0.1, 0.0, 0.5, 1.0], 0.3, &FlowOptions::default()).unwrap();
    assert!(defect < 1e-10);
}

fn affine_check(patch: &SampledPatch) {
    assert_eq!(patch.nodes.len(), 21 * 21);
    for node in &patch.nodes {
        let x = &node.point[..2];
        for a in 0..3 {
            let z = -(BF[a][0] * x[0] + BF[a][1] * x[1]);
            assert!((node.point[2 + a] - z).abs() < 1e-12);
        }
    }
    assert!(patch.max_residual() < 1e-8);
}

#[test]
fn point_seed_sweeps_to_affine_section() {
    let vp = constant_example1();
    let d = vp.annihilator().unwrap();
    let seed = constant_seed(vp.chart(), &[0.0, 0.0, 0.0]).unwrap();
    let grid = GridSpec::uniform(2, -1.0, 1.0, 21);
    let patch = sweep_section(&vp, &d, &seed, &grid).unwrap();
    affine_check(&patch);
    assert_eq!(patch.provenance.swept_axes, vec!["x1", "x2"]);

    let reversed = GridSpec { order: Some(vec![1, 0]), ..grid };
    let other = sweep_section(&vp, &d, &seed, &reversed).unwrap();
    affine_check(&other);
    for (a, b) in patch.nodes.iter().zip(&other.nodes) {
        assert_eq!(a.index, b.index);
        for (u, v) in a.point.iter().zip(&b.point) {
            assert!((u - v).abs() < 10.0 * 1e-12);
        }
    }

    let mid = patch.interpolate(&[0.05, -0.33]).unwrap();
    for a in 0..3 {
        assert!((mid[a] + BF[a][0] * 0.05 - BF[a][1] * 0.33).abs() < 1e-12);
    }
    assert!(patch.interpolate(&[2.0, 0.0]).is_none());
}

#[test]
fn seed_along_the_distribution_is_rejected() {
    let vp = constant_example1();
    let d = vp.annihilator().unwrap();
    let comps = (0..3).map(|a| p(&format!("-({})*x2", B[a][1]))).collect();
    let seed = SectionMap::new(vp.chart(), comps).unwrap();
    let grid = GridSpec { order: Some(vec![0]), ..GridSpec::uniform(2, -1.0, 1.0, 5) };
    assert!(matches!(sweep_section(&vp, &d, &seed, &grid), Err(Error::TangencyViolation { .. })));
}

#[test]
fn vertical_distribution_is_not_transversal() {
    let vp = constant_example1();
    let c = vp.chart().clone();
    let d = Distribution::from_basis(&c, vec![VecField::coordinate(&c, "z1").unwrap()], &Sampler::default()).unwrap();
    let seed = constant_seed(&c, &[0.0, 0.0, 0.0]).unwrap();
    assert!(matches!(
        sweep_section(&vp, &d, &seed, &GridSpec::uniform(2, -1.0, 1.0, 3)),
        Err(Error::NonTransversalDistribution { rank: 0, .. })
    ));
}

#[test]
fn maximal_degree_slice_seed() {
    // W = ∂x1 + 2∂z − ∂w is constant; η = W ⨼ vol and θ = H(η).
    let c = BundleChart::new(&["x1", "x2"], &["z"], &["w"]).unwrap();
    let eta = DiffForm::volume(&c).interior(&field(&c, &["1", "0", "2", "-1"])).unwrap();
    let theta = homotopy_antiderivative(&eta).unwrap();
    let vp = VariationalProblem::build(ProblemInput::Theta(theta), &Sampler::default()).unwrap();
    let d = vp.annihilator().unwrap();
    let seed = SectionMap::new(&c, vec![p("x2^2"), p("x2")]).unwrap();
    let grid = GridSpec::uniform(2, -1.0, 1.0, 11);
    let patch = sweep_section(&vp, &d, &seed, &grid).unwrap();
    assert_eq!(patch.provenance.swept_axes, vec!["x1"]);
    for node in &patch.nodes {
        let (x1, x2) = (node.point[0], node.point[1]);
        assert!((node.point[2] - (x2 * x2 + 2.0 * x1)).abs() < 1e-12);
        assert!((node.point[3] - (x2 - x1)).abs() < 1e-12);
    }
    assert!(patch.max_residual() < 1e-8);
    let closed = SectionMap::new(&c, vec![p("x2^2 + 2*x1"), p("x2 - x1")]).unwrap();
    assert!(vp.verify_critical(&closed).unwrap().critical);
}

#[test]
fn nonproper_constant_sweep() {
    let c = BundleChart::new(&["x1", "x2"], &["z1", "z2", "z3"], &["w"]).unwrap();
    let cw = ["2", "-1", "1/2"];
    let alphas = (0..3)
        .map(|a| {
            let z = format!("z{}", a + 1);
            one_form(&c, &[(&z, "1"), ("x1", B[a][0]), ("x2", B[a][1]), ("w", cw[a])])
        })
        .collect();
    let vp = VariationalProblem::build(ProblemInput::Factors(alphas), &Sampler::default()).unwrap();
    let d = vp.annihilator().unwrap();
    assert_eq!(d.rank(), 3);
    let seed = constant_seed(&c, &[0.1, 0.0, -0.2, 0.3]).unwrap();
    let patch = sweep_section(&vp, &d, &seed, &GridSpec::uniform(2, -1.0, 1.0, 9)).unwrap();
    assert!(patch.max_residual() < 1e-8);
}

#[test]
fn curved_section_residuals() {
    // Y1 = ∂x1 + x2∂z1 − ∂z2 and Y2 = ∂x2 + x1∂z1 commute, so the sweep
    // through the origin is z1 = x1 x2, z2 = −x1, which is critical.
    let c = BundleChart::new(&["x1", "x2"], &["z1", "z2", "z3"], &[]).unwrap();
    let ctx = ParseContext::new();
    let alphas = vec![
        crate::testkit::one_form(&c, &ctx, &[("z1", "1"), ("x1", "-x2"), ("x2", "-x1")]),
        crate::testkit::one_form(&c, &ctx, &[("z2", "1"), ("x1", "1")]),
        crate::testkit::one_form(&c, &ctx, &[("z3", "1")]),
    ];
    let vp = VariationalProblem::build(ProblemInput::Factors(alphas), &Sampler::default()).unwrap();
    let d = vp.annihilator().unwrap();
    let seed = constant_seed(&c, &[0.0, 0.0, 0.0]).unwrap();
    let patch = sweep_section(&vp, &d, &seed, &GridSpec::uniform(2, -1.0, 1.0, 11)).unwrap();
    for node in &patch.nodes {
        let (x1, x2) = (node.point[0], node.point[1]);
        assert!((node.point[2] - x1 * x2).abs() < 1e-10);
        assert!((node.point[3] + x1).abs() < 1e-12);
    }
    assert!(patch.max_residual() < 1e-8);
}

#[test]
fn csv_layout() {
    let vp = constant_example1();
    let d = vp.annihilator().unwrap();
    let seed = constant_seed(vp.chart(), &[0.0, 0.0, 0.0]).unwrap();
    let patch = sweep_section(&vp, &d, &seed, &GridSpec::uniform(2, 0.0, 1.0, 2)).unwrap();
    let csv = patch.to_csv().unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("# {"));
    assert_eq!(lines[1], "x1,x2,z1,z2,z3,residual_1,residual_2,residual_3");
    assert_eq!(lines.len(), 2 + 4);
    assert_eq!(csv, patch.to_csv().unwrap());
}
