//! The three bundled worked examples and the comparison of the engine's
//! output with their printed values.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Point, Result};
use crate::forms::{jet_name, BundleChart, DiffForm, VecField};
use crate::ideals::{chart_sampler, characteristic_distribution, span_equal};
use crate::linalg::{self, SymMatrix};
use crate::sampling::Sampler;
use crate::spec::{build_field, build_form, EliminationSpec, Erratum, Golden, ProblemSpec};
use crate::symexpr::{parse_with, ParseContext, ScalarExpr};
use crate::varprin::{CriticalEquations, EquationSource, Properness, VariationalProblem};

pub const EXAMPLES: [&str; 3] = ["example1", "example2", "example3"];

/// Raw JSON of a bundled example.
pub fn source(name: &str) -> Option<&'static str> {
    match name {
        "example1" => Some(include_str!("../fixtures/example1.json")),
        "example2" => Some(include_str!("../fixtures/example2.json")),
        "example3" => Some(include_str!("../fixtures/example3.json")),
        _ => None,
    }
}

pub fn load(name: &str) -> Result<ProblemSpec> {
    let src = source(name).ok_or_else(|| {
        Error::Invalid(format!("unknown example `{name}` (expected one of {})", EXAMPLES.join(", ")))
    })?;
    ProblemSpec::from_json(src)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckItem {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// A printed value set beside the engine's value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErratumReport {
    pub item: String,
    pub note: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub printed: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub engine: Option<String>,
    /// Whether the printed value equals the engine's.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matches: Option<bool>,
    /// `printed / engine` when that quotient is a constant.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FixtureReport {
    pub name: String,
    pub seed: u64,
    pub passed: bool,
    pub items: Vec<CheckItem>,
    pub errata: Vec<ErratumReport>,
}

/// Runs a bundled example with its own options.
pub fn run_fixture(name: &str) -> Result<FixtureReport> {
    let spec = load(name)?;
    let sampler = spec.sampler(None);
    run_spec(&spec, &sampler)
}

struct Checker {
    items: Vec<CheckItem>,
}

impl Checker {
    fn push(&mut self, name: impl Into<String>, outcome: Result<(bool, Option<String>)>) {
        let (passed, detail) = match outcome {
            Ok(v) => v,
            Err(e) => (false, Some(e.to_string())),
        };
        self.items.push(CheckItem { name: name.into(), passed, detail });
    }
}

struct Engine<'a> {
    vp: &'a VariationalProblem,
    eqs: Option<CriticalEquations>,
}

impl Engine<'_> {
    fn form(&self, item: &str) -> Result<DiffForm> {
        if item == "eta" {
            return Ok(self.vp.eta().clone());
        }
        let i = indexed(item, "psi")?;
        self.vp.psi().get(i).cloned().ok_or_else(|| unknown_item(item))
    }

    fn expr(&self, item: &str) -> Result<ScalarExpr> {
        let eqs = self.eqs.as_ref().ok_or(Error::NormalFormRequired)?;
        let (list, i) = if item.starts_with("delta") {
            (&eqs.deltas, indexed(item, "delta")?)
        } else {
            (&eqs.pullback_coefficients, indexed(item, "pullback")?)
        };
        list.get(i).cloned().ok_or_else(|| unknown_item(item))
    }
}

fn unknown_item(item: &str) -> Error {
    Error::Invalid(format!("unknown engine item `{item}`"))
}

fn indexed(item: &str, head: &str) -> Result<usize> {
    item.strip_prefix(head)
        .and_then(|r| r.strip_prefix('['))
        .and_then(|r| r.strip_suffix(']'))
        .and_then(|r| r.parse().ok())
        .ok_or_else(|| unknown_item(item))
}

fn with_lets(ctx: &ParseContext, lets: &BTreeMap<String, String>, path: &str) -> Result<ParseContext> {
    let mut out = ctx.clone();
    for (name, src) in lets {
        let e = parse_with(src, ctx)
            .map_err(|e| Error::Spec { path: format!("{path}.{name}"), message: e.to_string() })?;
        out.macros.insert(name.clone(), e);
    }
    Ok(out)
}

fn parse_at(src: &str, ctx: &ParseContext, path: &str) -> Result<ScalarExpr> {
    parse_with(src, ctx).map_err(|e| Error::Spec { path: path.into(), message: e.to_string() })
}

fn verdict(ok: bool, mismatch: impl FnOnce() -> String) -> (bool, Option<String>) {
    if ok {
        (true, None)
    } else {
        (false, Some(mismatch()))
    }
}

fn form_check(engine: &DiffForm, golden: &DiffForm) -> (bool, Option<String>) {
    verdict(engine.equiv(golden), || {
        format!("engine: {engine}; difference: {}", engine.try_add(&golden.scale(&-ScalarExpr::one())).map(|d| d.to_string()).unwrap_or_default())
    })
}

fn constant_ratio(a: &ScalarExpr, b: &ScalarExpr) -> Option<String> {
    a.checked_div(b)?.as_constant().map(|c| c.to_string())
}

/// Compares a spec's engine output with its golden values.
pub fn run_spec(spec: &ProblemSpec, sampler: &Sampler) -> Result<FixtureReport> {
    let (chart, ctx, input) = spec.input()?;
    let vp = VariationalProblem::build(input, sampler)?;
    let engine = Engine { vp: &vp, eqs: vp.critical_equations().ok() };
    let golden = spec.golden.clone().unwrap_or_default();
    let gctx = with_lets(&ctx, &golden.lets, "golden.let")?;
    let s = chart_sampler(&chart, sampler);
    let mut ck = Checker { items: Vec::new() };

    classification_items(&mut ck, &vp, &golden);
    form_items(&mut ck, &engine, &chart, &gctx, &golden);
    equation_items(&mut ck, &engine, &gctx, &golden);
    distribution_items(&mut ck, &vp, &chart, &gctx, &golden, &s);
    if let Some(el) = &golden.elimination {
        ck.push("elimination", elimination(spec, el, sampler).map(|(ok, d)| (ok, Some(d))));
    }
    let errata = spec.errata.iter().map(|e| erratum(e, &engine, &chart, &ctx)).collect();
    let passed = ck.items.iter().all(|i| i.passed);
    Ok(FixtureReport {
        name: spec.name.clone().unwrap_or_default(),
        seed: sampler.seed,
        passed,
        items: ck.items,
        errata,
    })
}

fn classification_items(ck: &mut Checker, vp: &VariationalProblem, golden: &Golden) {
    let Some(g) = &golden.classification else { return };
    let c = vp.classification();
    let name = |v: serde_json::Value| v.as_str().unwrap_or_default().to_string();
    let case = name(serde_json::to_value(c.degree_case).expect("serializable"));
    let proper = name(serde_json::to_value(c.proper).expect("serializable"));
    ck.push("classification", Ok(verdict(
        case == g.degree_case && proper == g.proper && c.q == g.q && c.h == g.h,
        || format!("engine: {case}, {proper}, q = {}, h = {}", c.q, c.h),
    )));
}

fn form_items(
    ck: &mut Checker,
    engine: &Engine,
    chart: &Arc<BundleChart>,
    ctx: &ParseContext,
    golden: &Golden,
) {
    let vp = engine.vp;
    if let Some(eta) = &golden.eta {
        ck.push("eta", build_form(chart, ctx, eta, "golden.eta").map(|g| form_check(vp.eta(), &g)));
    }
    for (i, psi) in golden.psi.iter().enumerate() {
        let path = format!("golden.psi[{i}]");
        let outcome = build_form(chart, ctx, psi, &path).and_then(|g| {
            let e = vp.psi().get(i).ok_or_else(|| unknown_item(&format!("psi[{i}]")))?;
            Ok(form_check(e, &g))
        });
        ck.push(format!("psi[{i}]"), outcome);
    }
    for (i, prod) in golden.psi_products.iter().enumerate() {
        let outcome = (|| {
            let fs = vp.factors().ok_or_else(|| Error::Invalid("the problem was not given by factors".into()))?;
            let picked = prod
                .factors
                .iter()
                .map(|&f| fs.alphas().get(f.wrapping_sub(1)).cloned().ok_or_else(|| unknown_item(&format!("alpha[{f}]"))))
                .collect::<Result<Vec<_>>>()?;
            let g = DiffForm::wedge_all(&picked)?.scale(&ScalarExpr::int(i64::from(prod.sign)));
            let e = vp.psi().get(i).ok_or_else(|| unknown_item(&format!("psi[{i}]")))?;
            Ok(form_check(e, &g))
        })();
        ck.push(format!("psi[{i}] as a product of factors"), outcome);
    }
    for rel in &golden.psi_relations {
        let outcome = (|| {
            let mut sum = DiffForm::zero(chart, vp.eta().degree().saturating_sub(1));
            for (a, c) in rel.coefficients.iter().enumerate() {
                let c = parse_at(c, ctx, "golden.psi_relations")?;
                sum = sum.try_add(&vp.psi()[a].scale(&c))?;
            }
            let e = vp.psi().get(rel.target).ok_or_else(|| unknown_item(&format!("psi[{}]", rel.target)))?;
            Ok(form_check(e, &sum))
        })();
        ck.push(format!("psi[{}] = sum of c_a psi[a]", rel.target), outcome);
    }
}

fn equation_items(ck: &mut Checker, engine: &Engine, ctx: &ParseContext, golden: &Golden) {
    for (label, list) in [("delta", &golden.deltas), ("alt_delta", &golden.alt_deltas)] {
        for (i, d) in list.iter().enumerate() {
            let outcome = (|| {
                let printed = parse_at(&d.expr, ctx, &format!("golden.{label}s[{i}].expr"))?;
                let scale = parse_at(&d.scale, ctx, &format!("golden.{label}s[{i}].scale"))?;
                let e = engine.expr(&format!("delta[{i}]"))?;
                Ok(verdict(printed.equiv(&(&scale * &e)), || match constant_ratio(&printed, &e) {
                    Some(r) => format!("printed = {r} × engine"),
                    None => format!("engine: {e}"),
                }))
            })();
            ck.push(format!("{label}[{i}]"), outcome);
        }
    }
    if let Some(eqs) = &engine.eqs {
        if eqs.source == EquationSource::Minors && !golden.deltas.is_empty() {
            ck.push("pullback = minor", Ok(verdict(eqs.consistent, || "pullback coefficients are not a common multiple of the minors".into())));
        }
    }
    if !golden.p_matrix.is_empty() {
        let outcome = (|| {
            let p = engine.vp.p_matrix()?;
            let printed: SymMatrix = golden
                .p_matrix
                .iter()
                .enumerate()
                .map(|(i, row)| {
                    row.iter()
                        .enumerate()
                        .map(|(j, s)| parse_at(s, ctx, &format!("golden.p_matrix[{i}][{j}]")))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<_>>()?;
            let same_shape = p.len() == printed.len() && p.iter().zip(&printed).all(|(a, b)| a.len() == b.len());
            let bad: Vec<String> = if same_shape {
                p.iter()
                    .zip(&printed)
                    .enumerate()
                    .flat_map(|(i, (a, b))| {
                        a.iter().zip(b).enumerate().filter(|(_, (x, y))| !x.equiv(y)).map(move |(j, (x, _))| format!("[{i}][{j}] engine {x}"))
                    })
                    .collect()
            } else {
                vec![format!("engine shape {}×{}", p.len(), p.first().map_or(0, Vec::len))]
            };
            Ok(verdict(bad.is_empty(), || bad.join("; ")))
        })();
        ck.push("p_matrix", outcome);
    }
}

fn fields(chart: &Arc<BundleChart>, ctx: &ParseContext, specs: &[BTreeMap<String, String>], path: &str) -> Result<Vec<VecField>> {
    specs
        .iter()
        .enumerate()
        .map(|(i, f)| build_field(chart, ctx, f, &format!("{path}[{i}]")))
        .collect()
}

fn span_detail(cmp: &crate::ideals::SpanComparison) -> (bool, Option<String>) {
    if cmp.equal {
        (true, Some(format!("equal spans at {} samples", cmp.evaluated)))
    } else {
        (false, Some(format!("spans differ at {:?} ({} samples)", cmp.witness, cmp.evaluated)))
    }
}

fn distribution_items(
    ck: &mut Checker,
    vp: &VariationalProblem,
    chart: &Arc<BundleChart>,
    ctx: &ParseContext,
    golden: &Golden,
    s: &Sampler,
) {
    if !golden.annihilator.is_empty() {
        let outcome = (|| {
            let g = fields(chart, ctx, &golden.annihilator, "golden.annihilator")?;
            let n = vp.annihilator()?;
            Ok(span_detail(&span_equal(&g, n.basis(), s)))
        })();
        ck.push("annihilator", outcome);
    }
    if let Some(vertical) = &golden.vertical {
        let outcome = (|| {
            let g = fields(chart, ctx, vertical, "golden.vertical")?;
            let report = vp.check_proper()?;
            let expected = if g.is_empty() { Properness::Proper } else { Properness::NotProper };
            if report.status != expected || g.iter().any(|f| !f.is_vertical()) {
                return Ok((false, Some(format!("engine status {:?}", report.status))));
            }
            if g.is_empty() {
                return Ok((report.vertical.is_empty(), None));
            }
            Ok(span_detail(&span_equal(&g, &report.vertical, s)))
        })();
        ck.push("vertical annihilator", outcome);
    }
    if vp.classification().proper == Properness::Proper {
        let outcome = (|| {
            let n = vp.annihilator()?;
            let d = characteristic_distribution(&vp.variational_ideal()?, s)?;
            let c = vp.classification();
            let expected = c.n - c.k - 1;
            let cmp = span_equal(d.basis(), n.basis(), s);
            Ok(verdict(cmp.equal && d.rank() == expected && n.rank() == expected, || {
                format!("ranks {} and {} (expected {expected}), spans equal: {}", d.rank(), n.rank(), cmp.equal)
            }))
        })();
        ck.push("characteristic distribution = annihilator", outcome);
    }
}

fn erratum(e: &Erratum, engine: &Engine, chart: &Arc<BundleChart>, ctx: &ParseContext) -> ErratumReport {
    match e {
        Erratum::Note { item, note } => ErratumReport {
            item: item.clone(),
            note: note.clone(),
            printed: None,
            engine: None,
            matches: None,
            ratio: None,
        },
        Erratum::Form { item, engine: which, printed, note } => {
            let eng = engine.form(which);
            let pr = build_form(chart, ctx, printed, &format!("errata.{item}"));
            let matches = match (&eng, &pr) {
                (Ok(a), Ok(b)) => Some(a.equiv(b)),
                _ => None,
            };
            ErratumReport {
                item: item.clone(),
                note: note.clone(),
                printed: Some(pr.map_or_else(|e| e.to_string(), |f| f.to_string())),
                engine: Some(eng.map_or_else(|e| e.to_string(), |f| f.to_string())),
                matches,
                ratio: None,
            }
        }
        Erratum::Expr { item, engine: which, printed, lets, note } => {
            let eng = engine.expr(which);
            let pr = with_lets(ctx, lets, &format!("errata.{item}.let"))
                .and_then(|c| parse_at(printed, &c, &format!("errata.{item}")));
            let (matches, ratio) = match (&eng, &pr) {
                (Ok(a), Ok(b)) => (Some(a.equiv(b)), constant_ratio(b, a)),
                _ => (None, None),
            };
            ErratumReport {
                item: item.clone(),
                note: note.clone(),
                printed: Some(pr.map_or_else(|e| e.to_string(), |x| x.to_string())),
                engine: Some(eng.map_or_else(|e| e.to_string(), |x| x.to_string())),
                matches,
                ratio,
            }
        }
    }
}

/// Tangency forms `T_i = (∂_i + Σ_f (∂_i φ^f) ∂_f) ⨼ η` in jet variables: a
/// field `f^i (∂_i + ...)` tangent to a section lies in `N(η)` exactly
/// when `Σ f^i T_i = 0`.
pub fn tangency_forms(vp: &VariationalProblem) -> Result<Vec<DiffForm>> {
    let chart = vp.chart();
    chart
        .base()
        .iter()
        .map(|x| {
            let mut comps = vec![ScalarExpr::zero(); chart.dim()];
            comps[chart.require(x)?] = ScalarExpr::one();
            for f in chart.fibers() {
                comps[chart.require(f)?] = ScalarExpr::var(&jet_name(f, x));
            }
            vp.eta().interior(&VecField::new(chart, comps)?)
        })
        .collect()
}

fn eval(e: &ScalarExpr, env: &Point) -> Result<f64> {
    e.eval(env)
}

fn tangency_matrix(t: &[DiffForm], env: &Point) -> Result<DMatrix<f64>> {
    let mut masks: Vec<_> = t.iter().flat_map(|f| f.terms().map(|(m, _)| m)).collect();
    masks.sort_unstable();
    masks.dedup();
    let mut m = DMatrix::zeros(masks.len(), t.len());
    for (j, form) in t.iter().enumerate() {
        for (i, mask) in masks.iter().enumerate() {
            m[(i, j)] = eval(&form.coeff(*mask), env)?;
        }
    }
    Ok(m)
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Checks on a polynomial instantiation that the tangency system has a
/// nonzero solution `f` exactly where every `Δ_a` vanishes: at jets built
/// so that `P f = 0` both sides vanish, and at random jets neither does.
pub fn elimination(spec: &ProblemSpec, el: &EliminationSpec, sampler: &Sampler) -> Result<(bool, String)> {
    let inst = spec.instantiate(&el.instantiation);
    let vp = inst.problem(sampler)?;
    let chart = vp.chart().clone();
    let eqs = vp.critical_equations()?;
    let p = vp.p_matrix()?;
    let t = tangency_forms(&vp)?;
    let k = chart.k();
    let tol = el.tolerance;
    let pivots = eqs.fibers.len();

    let base_env = |index: u64| -> Point {
        let pt = sampler.point(index, BTreeMap::new());
        let mut env = Point::new();
        for c in chart.coords() {
            env.insert(c.clone(), pt.get(c));
            for x in chart.base() {
                if chart.fibers().contains(c) {
                    let j = jet_name(c, x);
                    env.insert(j.clone(), pt.get(&j));
                }
            }
        }
        for i in 0..k {
            let key = format!("f{}", i + 1);
            env.insert(key.clone(), pt.get(&key));
        }
        env
    };

    let (mut worst_delta, mut worst_tangency) = (0.0f64, 0.0f64);
    let (mut least_delta, mut least_sigma) = (f64::INFINITY, f64::INFINITY);
    for n in 0..el.points as u64 {
        let mut env = base_env(1_000_000 + n);
        let f0 = DVector::from_iterator(k, (0..k).map(|i| env[&format!("f{}", i + 1)]));
        let constraint: SymMatrix = p[pivots..].to_vec();
        let f = if constraint.is_empty() {
            f0
        } else {
            let c = linalg::eval_matrix(&constraint, &env)?;
            let pinv = c.clone().pseudo_inverse(1e-12).map_err(|e| Error::Invalid(e.to_string()))?;
            &f0 - pinv * (c * &f0)
        };
        let j = f.iamax();
        for (a, fiber) in eqs.fibers.iter().enumerate() {
            let v = jet_name(fiber, &chart.base()[j]);
            let slope = eval(&p[a][j].diff(&v), &env)?;
            let row: f64 = (0..k).map(|i| eval(&p[a][i], &env).map(|x| x * f[i])).sum::<Result<f64>>()?;
            *env.get_mut(&v).expect("jet present") -= row / (slope * f[j]);
        }
        let deltas = eqs.deltas.iter().map(|d| eval(d, &env)).collect::<Result<Vec<_>>>()?;
        worst_delta = worst_delta.max(max_abs(deltas));
        let m = tangency_matrix(&t, &env)?;
        worst_tangency = worst_tangency.max(max_abs((m * &f).iter().copied()) / max_abs(f.iter().copied()));

        let generic = base_env(2_000_000 + n);
        let deltas = eqs.deltas.iter().map(|d| eval(d, &generic)).collect::<Result<Vec<_>>>()?;
        least_delta = least_delta.min(max_abs(deltas));
        let sv = linalg::singular_values(&tangency_matrix(&t, &generic)?);
        least_sigma = least_sigma.min(sv.iter().copied().fold(f64::INFINITY, f64::min));
    }
    let ok = worst_delta < tol && worst_tangency < tol && least_delta > tol.sqrt() && least_sigma > tol.sqrt();
    let detail = format!(
        "{} points with a tangent solution: max |Δ| = {worst_delta:.2e}, max |Σ f T| = {worst_tangency:.2e}; \
         {} random jets: min max |Δ| = {least_delta:.2e}, min singular value = {least_sigma:.2e}",
        el.points, el.points
    );
    Ok((ok, detail))
}

#[cfg(test)]
mod tests;
