//! JSON problem files: chart, the form defining the principle, optional
//! sections and Liouville data, run options and (for the bundled
//! examples) golden values.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{BundleChart, DiffForm, SectionMap, VecField};
use crate::sampling::{SampleBox, Sampler, DEFAULT_SAMPLES, DEFAULT_SEED};
use crate::symexpr::{parse_with, ParseContext, ScalarExpr};
use crate::varprin::{ProblemInput, VariationalProblem};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub base: Vec<String>,
    pub fiber_z: Vec<String>,
    #[serde(default)]
    pub fiber_w: Vec<String>,
}

/// One term `coeff · d(index[0]) ∧ d(index[1]) ∧ ...`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub coeff: String,
    pub index: Vec<String>,
}

pub type FormSpec = Vec<TermSpec>;

/// Components of a vector field or section, by coordinate name.
pub type ComponentSpec = BTreeMap<String, String>;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    #[serde(rename = "box")]
    pub bounds: Option<[f64; 2]>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub step: Option<f64>,
    pub tolerance: Option<f64>,
    /// Lattice nodes per base axis for `integrate`.
    pub nodes: Option<usize>,
    /// Base coordinates swept by `integrate`, in order; the others are
    /// read from the seed section.
    pub sweep: Option<Vec<String>>,
}

/// A field `X` on phase space, with an optional volume density
/// (`Ω = density · dp^1 ∧ ... ∧ dp^m`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiouvilleSpec {
    pub phase: Vec<String>,
    pub field: ComponentSpec,
    pub density: Option<String>,
}

/// Golden expression compared with `scale · engine value`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaledExpr {
    pub expr: String,
    #[serde(default = "one")]
    pub scale: String,
}

fn one() -> String {
    "1".into()
}

/// `ψ_target = Σ_a coefficients[a] · ψ_a` (indices into the fiber list).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsiRelation {
    pub target: usize,
    pub coefficients: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsiProduct {
    pub sign: i32,
    pub factors: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassificationGolden {
    pub degree_case: String,
    pub proper: String,
    pub q: usize,
    pub h: i64,
}

/// Polynomial instantiation of the opaque coefficients used for the
/// numeric equivalence between the tangency system and `Δ_a = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EliminationSpec {
    pub instantiation: BTreeMap<String, String>,
    pub points: usize,
    pub tolerance: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Golden {
    /// Abbreviations available inside golden expressions.
    #[serde(default, rename = "let")]
    pub lets: BTreeMap<String, String>,
    pub classification: Option<ClassificationGolden>,
    pub eta: Option<FormSpec>,
    /// `ψ_a = ∂/∂fiber_a ⨼ η`, in chart fiber order.
    #[serde(default)]
    pub psi: Vec<FormSpec>,
    /// `ψ_a = sign · α_{f1} ∧ α_{f2} ∧ ...` (1-based factor indices).
    #[serde(default)]
    pub psi_products: Vec<PsiProduct>,
    #[serde(default)]
    pub psi_relations: Vec<PsiRelation>,
    #[serde(default)]
    pub deltas: Vec<ScaledExpr>,
    /// A second printed form of the critical equations.
    #[serde(default)]
    pub alt_deltas: Vec<ScaledExpr>,
    #[serde(default)]
    pub p_matrix: Vec<Vec<String>>,
    /// Generators of `N(dθ)`, compared by span.
    #[serde(default)]
    pub annihilator: Vec<ComponentSpec>,
    /// Generators of `N(dθ) ∩ V(π)`, compared by span.
    pub vertical: Option<Vec<ComponentSpec>>,
    pub elimination: Option<EliminationSpec>,
}

/// A printed value known to differ from the engine, reported side by side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Erratum {
    Form { item: String, engine: String, printed: FormSpec, note: String },
    Expr {
        item: String,
        engine: String,
        printed: String,
        #[serde(default, rename = "let")]
        lets: BTreeMap<String, String>,
        note: String,
    },
    Note { item: String, note: String },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub name: Option<String>,
    pub description: Option<String>,
    pub chart: Option<ChartSpec>,
    /// Opaque function symbols and their arguments; an empty list means
    /// every chart coordinate.
    #[serde(default)]
    pub functions: BTreeMap<String, Vec<String>>,
    /// Names replaced by fixed expressions when parsing.
    #[serde(default)]
    pub macros: BTreeMap<String, String>,
    pub theta: Option<FormSpec>,
    pub factors: Option<Vec<FormSpec>>,
    pub liouville: Option<LiouvilleSpec>,
    #[serde(default)]
    pub options: Options,
    pub golden: Option<Golden>,
    #[serde(default)]
    pub errata: Vec<Erratum>,
}

/// A section file for `verify` and `integrate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectionSpec {
    pub chart: Option<ChartSpec>,
    pub section: ComponentSpec,
}

fn spec_err(path: impl Into<String>, e: Error) -> Error {
    Error::Spec { path: path.into(), message: e.to_string() }
}

fn syntax(e: serde_json::Error) -> Error {
    Error::SpecSyntax { line: e.line(), column: e.column(), message: e.to_string() }
}

impl SectionSpec {
    pub fn from_json(src: &str) -> Result<Self> {
        serde_json::from_str(src).map_err(syntax)
    }

    /// The section on `chart`; a chart recorded in the file must match.
    pub fn to_section(&self, chart: &Arc<BundleChart>, ctx: &ParseContext) -> Result<SectionMap> {
        if let Some(c) = &self.chart {
            if *c.build()? != **chart {
                return Err(Error::ChartMismatch);
            }
        }
        let mut pairs = BTreeMap::new();
        for (name, src) in &self.section {
            pairs.insert(name.clone(), parse_with(src, ctx).map_err(|e| spec_err(format!("section.{name}"), e))?);
        }
        SectionMap::from_pairs(chart, &pairs)
    }
}

impl ChartSpec {
    pub fn build(&self) -> Result<Arc<BundleChart>> {
        BundleChart::from_names(self.base.clone(), self.fiber_z.clone(), self.fiber_w.clone())
    }
}

/// Parses a form on `chart`.
pub fn build_form(chart: &Arc<BundleChart>, ctx: &ParseContext, spec: &FormSpec, path: &str) -> Result<DiffForm> {
    let Some(first) = spec.first() else {
        return Err(Error::Spec { path: path.into(), message: "a form needs at least one term".into() });
    };
    let degree = first.index.len();
    let mut out = DiffForm::zero(chart, degree);
    for (i, t) in spec.iter().enumerate() {
        let here = format!("{path}[{i}]");
        if t.index.len() != degree {
            return Err(Error::DegreeMismatch(format!(
                "`{here}` has {} indices where earlier terms have {degree}",
                t.index.len()
            )));
        }
        for name in &t.index {
            if chart.index_of(name).is_none() {
                return Err(Error::Spec { path: format!("{here}.index"), message: format!("unknown coordinate `{name}`") });
            }
        }
        let c = parse_with(&t.coeff, ctx).map_err(|e| spec_err(format!("{here}.coeff"), e))?;
        let names: Vec<&str> = t.index.iter().map(String::as_str).collect();
        out = out.try_add(&DiffForm::monomial(chart, c, &names)?)?;
    }
    Ok(out)
}

/// Parses a vector field on `chart`; unnamed components are zero.
pub fn build_field(chart: &Arc<BundleChart>, ctx: &ParseContext, spec: &ComponentSpec, path: &str) -> Result<VecField> {
    let mut comps = vec![ScalarExpr::zero(); chart.dim()];
    for (name, src) in spec {
        let i = chart
            .index_of(name)
            .ok_or_else(|| Error::Spec { path: path.into(), message: format!("unknown coordinate `{name}`") })?;
        comps[i] = parse_with(src, ctx).map_err(|e| spec_err(format!("{path}.{name}"), e))?;
    }
    VecField::new(chart, comps)
}

impl ProblemSpec {
    pub fn from_json(src: &str) -> Result<Self> {
        let spec: ProblemSpec = serde_json::from_str(src).map_err(syntax)?;
        spec.validate_shape()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    fn validate_shape(&self) -> Result<()> {
        match (&self.chart, &self.theta, &self.factors, &self.liouville) {
            (Some(_), Some(_), None, _) | (Some(_), None, Some(_), _) => Ok(()),
            (Some(_), Some(_), Some(_), _) => {
                Err(Error::Spec { path: "theta".into(), message: "give either `theta` or `factors`, not both".into() })
            }
            (Some(_), None, None, _) => {
                Err(Error::Spec { path: "chart".into(), message: "a chart needs `theta` or `factors`".into() })
            }
            (None, None, None, Some(_)) => Ok(()),
            (None, _, _, _) => Err(Error::Spec {
                path: "chart".into(),
                message: "missing `chart` (required unless the file only holds `liouville` data)".into(),
            }),
        }
    }

    /// Sampler from the options, with an optional seed override.
    pub fn sampler(&self, seed_override: Option<u64>) -> Sampler {
        let bounds = self.options.bounds.map(|[lo, hi]| SampleBox { lo, hi }).unwrap_or_default();
        let seed = seed_override.or(self.options.seed).unwrap_or(DEFAULT_SEED);
        Sampler::new(seed, self.options.samples.unwrap_or(DEFAULT_SAMPLES), bounds, Vec::new())
    }

    pub fn chart(&self) -> Result<Arc<BundleChart>> {
        self.chart
            .as_ref()
            .ok_or_else(|| Error::Spec { path: "chart".into(), message: "missing".into() })?
            .build()
    }

    /// Parse context with the declared functions and macros.
    pub fn context(&self, chart: &BundleChart) -> Result<ParseContext> {
        let mut ctx = ParseContext::new();
        for (name, args) in &self.functions {
            let args = if args.is_empty() { chart.coords().to_vec() } else { args.clone() };
            ctx.functions.insert(name.clone(), args);
        }
        let mut plain = ParseContext::new();
        plain.functions = ctx.functions.clone();
        for (name, src) in &self.macros {
            let e = parse_with(src, &plain).map_err(|e| spec_err(format!("macros.{name}"), e))?;
            ctx.macros.insert(name.clone(), e);
        }
        Ok(ctx)
    }

    /// The same problem with opaque coefficients replaced by expressions.
    pub fn instantiate(&self, values: &BTreeMap<String, String>) -> ProblemSpec {
        let mut out = self.clone();
        for (name, src) in values {
            out.functions.remove(name);
            out.macros.insert(name.clone(), src.clone());
        }
        out
    }

    pub fn input(&self) -> Result<(Arc<BundleChart>, ParseContext, ProblemInput)> {
        let chart = self.chart()?;
        let ctx = self.context(&chart)?;
        let input = match (&self.theta, &self.factors) {
            (Some(t), None) => ProblemInput::Theta(build_form(&chart, &ctx, t, "theta")?),
            (None, Some(fs)) => {
                let mut out = Vec::with_capacity(fs.len());
                for (i, f) in fs.iter().enumerate() {
                    let form = build_form(&chart, &ctx, f, &format!("factors[{i}]"))?;
                    if form.degree() != 1 {
                        return Err(Error::DegreeMismatch(format!("factors[{i}] is not a one-form")));
                    }
                    out.push(form);
                }
                ProblemInput::Factors(out)
            }
            _ => return Err(Error::Spec { path: "theta".into(), message: "no problem form given".into() }),
        };
        Ok((chart, ctx, input))
    }

    pub fn problem(&self, sampler: &Sampler) -> Result<VariationalProblem> {
        let (_, _, input) = self.input()?;
        VariationalProblem::build(input, sampler)
    }

    /// Phase chart, field and volume of the Liouville section.
    pub fn liouville_data(&self) -> Result<(VecField, DiffForm)> {
        let l = self
            .liouville
            .as_ref()
            .ok_or_else(|| Error::Spec { path: "liouville".into(), message: "missing".into() })?;
        let names: Vec<&str> = l.phase.iter().map(String::as_str).collect();
        let chart = BundleChart::euclidean(&names)?;
        let ctx = self.context(&chart)?;
        let x = build_field(&chart, &ctx, &l.field, "liouville.field")?;
        let mut omega = DiffForm::volume(&chart);
        if let Some(d) = &l.density {
            omega = omega.scale(&parse_with(d, &ctx).map_err(|e| spec_err("liouville.density", e))?);
        }
        Ok((x, omega))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PLANAR: &str = r#"{
        "chart": {"base": ["x"], "fiber_z": ["z"]},
        "functions": {"f": []},
        "theta": [{"coeff": "f*z", "index": ["x"]}],
        "options": {"seed": 7, "box": [0, 2]}
    }"#;

    #[test]
    fn loads_theta_problem() {
        let spec = ProblemSpec::from_json(PLANAR).unwrap();
        let (chart, _, input) = spec.input().unwrap();
        assert_eq!(chart.k(), 1);
        let ProblemInput::Theta(t) = input else { panic!("expected θ") };
        assert_eq!(t.degree(), 1);
        let s = spec.sampler(None);
        assert_eq!((s.seed, s.bounds.lo, s.bounds.hi), (7, 0.0, 2.0));
        assert_eq!(spec.sampler(Some(9)).seed, 9);
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = ProblemSpec::from_json("{\n  \"chart\": {\n  ,}").unwrap_err();
        assert!(matches!(err, Error::SpecSyntax { line: 3, .. }), "{err}");
    }

    #[test]
    fn bad_index_and_degree() {
        let bad = PLANAR.replace(r#""index": ["x"]"#, r#""index": ["q"]"#);
        let spec = ProblemSpec::from_json(&bad).unwrap();
        assert!(matches!(spec.input(), Err(Error::Spec { .. })));
        let mixed = PLANAR.replace(
            r#"[{"coeff": "f*z", "index": ["x"]}]"#,
            r#"[{"coeff": "1", "index": ["x"]}, {"coeff": "1", "index": ["x", "z"]}]"#,
        );
        assert!(matches!(ProblemSpec::from_json(&mixed).unwrap().input(), Err(Error::DegreeMismatch(_))));
        let expr = PLANAR.replace("f*z", "f*(z");
        let err = ProblemSpec::from_json(&expr).unwrap().input().unwrap_err();
        assert!(err.to_string().contains("theta[0].coeff"), "{err}");
    }

    #[test]
    fn shape_is_checked() {
        assert!(ProblemSpec::from_json(r#"{"chart": {"base": ["x"], "fiber_z": ["z"]}}"#).is_err());
        assert!(ProblemSpec::from_json(r#"{"theta": []}"#).is_err());
        assert!(ProblemSpec::from_json(r#"{"chart": {"base": ["x"], "fiber_z": ["z"]}, "bogus": 1}"#).is_err());
    }

    #[test]
    fn instantiation_replaces_functions() {
        let spec = ProblemSpec::from_json(PLANAR).unwrap();
        let inst = spec.instantiate(&BTreeMap::from([("f".to_string(), "1 + x".to_string())]));
        let (_, _, input) = inst.input().unwrap();
        let ProblemInput::Theta(t) = input else { panic!("expected θ") };
        assert!(t.coeff(1).equiv(&crate::symexpr::parse("(1 + x)*z").unwrap()));
    }

    #[test]
    fn sections_check_their_chart() {
        let spec = ProblemSpec::from_json(PLANAR).unwrap();
        let chart = spec.chart().unwrap();
        let ctx = spec.context(&chart).unwrap();
        let ok = SectionSpec::from_json(r#"{"section": {"z": "x^2"}}"#).unwrap();
        assert!(ok.to_section(&chart, &ctx).is_ok());
        let other = SectionSpec::from_json(r#"{"chart": {"base": ["t"], "fiber_z": ["z"]}, "section": {"z": "t"}}"#)
            .unwrap();
        assert!(matches!(other.to_section(&chart, &ctx), Err(Error::ChartMismatch)));
        let stray = SectionSpec::from_json(r#"{"section": {"z": "x", "w": "1"}}"#).unwrap();
        assert!(matches!(stray.to_section(&chart, &ctx), Err(Error::ChartMismatch)));
    }

    #[test]
    fn liouville_only_file() {
        let spec = ProblemSpec::from_json(
            r#"{"liouville": {"phase": ["x", "y"], "field": {"x": "-y", "y": "x"}, "density": "2"}}"#,
        )
        .unwrap();
        let (x, omega) = spec.liouville_data().unwrap();
        assert_eq!(x.chart().dim(), 2);
        assert!(omega.coeff(3).equiv(&ScalarExpr::int(2)));
    }
}
