//! Reports for the command-line tool. Every report is built as JSON; the
//! text rendering walks the same JSON value.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::fixtures;
use crate::flows::{sweep_section, GridSpec, SampledPatch, DEFAULT_STEP, DEFAULT_TOLERANCE};
use crate::ideals::{frobenius_check, Distribution};
use crate::liouville::{self, build_theta, LiouvilleSetup};
use crate::sampling::Sampler;
use crate::spec::{ProblemSpec, SectionSpec};
use crate::varprin::VariationalProblem;

/// Lattice nodes per base axis when neither the spec nor the caller says.
pub const DEFAULT_NODES: usize = 21;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub seed: u64,
    pub passed: bool,
    pub body: Value,
}

impl Report {
    fn new(command: &str, sampler: &Sampler, passed: bool, body: Value) -> Self {
        Report { command: command.into(), seed: sampler.seed, passed, body }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Indented `key: value` listing of the JSON form.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let value = serde_json::to_value(self).expect("report serializes");
        render(&mut out, &value, 0);
        out
    }
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::Bool(b) => Some(if *b { "yes".into() } else { "no".into() }),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Array(a) if a.is_empty() => Some("(none)".into()),
        Value::Object(o) if o.is_empty() => Some("(none)".into()),
        Value::Array(a) if a.iter().all(|x| matches!(x, Value::Number(_))) => {
            Some(format!("[{}]", a.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")))
        }
        _ => None,
    }
}

fn render(out: &mut String, v: &Value, depth: usize) {
    let pad = "  ".repeat(depth);
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                match scalar(x) {
                    Some(s) => writeln!(out, "{pad}{k}: {s}").expect("write to string"),
                    None => {
                        writeln!(out, "{pad}{k}:").expect("write to string");
                        render(out, x, depth + 1);
                    }
                }
            }
        }
        Value::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                match scalar(x) {
                    Some(s) => writeln!(out, "{pad}[{i}] {s}").expect("write to string"),
                    None => {
                        writeln!(out, "{pad}[{i}]").expect("write to string");
                        render(out, x, depth + 1);
                    }
                }
            }
        }
        other => writeln!(out, "{pad}{}", scalar(other).unwrap_or_default()).expect("write to string"),
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

fn strings<T: ToString>(xs: &[T]) -> Vec<String> {
    xs.iter().map(ToString::to_string).collect()
}

fn distribution_value(d: &Distribution) -> Value {
    json!({
        "rank": d.rank(),
        "basis": strings(d.basis()),
        "certification": to_value(d.certification()),
    })
}

/// The variational problem of a spec: its own chart and form, or the
/// maximal-degree problem of its Liouville data.
pub fn problem(spec: &ProblemSpec, sampler: &Sampler) -> Result<VariationalProblem> {
    if spec.chart.is_some() {
        return spec.problem(sampler);
    }
    let (x, omega) = spec.liouville_data()?;
    let setup = LiouvilleSetup::new(x, Some(omega), None, sampler)?;
    build_theta(&setup, sampler)
}

pub fn analyze(spec: &ProblemSpec, sampler: &Sampler) -> Result<Report> {
    let vp = problem(spec, sampler)?;
    let n = vp.annihilator()?;
    let proper = vp.check_proper()?;
    let frob = frobenius_check(&n, sampler)?;
    let closed = vp.eta().ext_d().is_zero();
    let chart = vp.chart();
    let body = json!({
        "name": spec.name,
        "chart": {"base": chart.base(), "fiber_z": chart.fiber_z(), "fiber_w": chart.fiber_w()},
        "eta_closed": closed,
        "classification": to_value(vp.classification()),
        "annihilator": distribution_value(&n),
        "vertical_annihilator": strings(&proper.vertical),
        "frobenius": to_value(&frob),
    });
    // Only a closed η forces N(η) to be integrable.
    Ok(Report::new("analyze", sampler, frob.is_integrable() || !closed, body))
}

pub fn el(spec: &ProblemSpec, sampler: &Sampler) -> Result<Report> {
    let vp = problem(spec, sampler)?;
    let eqs = vp.critical_equations()?;
    let body = json!({
        "name": spec.name,
        "source": to_value(&eqs.source),
        "fibers": eqs.fibers,
        "deltas": strings(&eqs.deltas),
        "pullback_coefficients": strings(&eqs.pullback_coefficients),
        "minor_constant": eqs.minor_constant.as_ref().map(ToString::to_string),
        "multiplier": eqs.multiplier.to_string(),
        "consistent": eqs.consistent,
    });
    Ok(Report::new("el", sampler, eqs.consistent, body))
}

pub fn annihilator(spec: &ProblemSpec, sampler: &Sampler) -> Result<Report> {
    let vp = problem(spec, sampler)?;
    let n = vp.annihilator()?;
    let body = json!({"name": spec.name, "annihilator": distribution_value(&n)});
    Ok(Report::new("annihilator", sampler, true, body))
}

pub fn frobenius(spec: &ProblemSpec, sampler: &Sampler) -> Result<Report> {
    let vp = problem(spec, sampler)?;
    let n = vp.annihilator()?;
    let frob = frobenius_check(&n, sampler)?;
    let body = json!({"name": spec.name, "rank": n.rank(), "frobenius": to_value(&frob)});
    Ok(Report::new("frobenius", sampler, frob.is_integrable(), body))
}

pub fn verify(spec: &ProblemSpec, section: &SectionSpec, sampler: &Sampler) -> Result<Report> {
    let vp = problem(spec, sampler)?;
    let ctx = spec.context(vp.chart())?;
    let phi = section.to_section(vp.chart(), &ctx)?;
    let r = vp.verify_critical(&phi)?;
    let body = json!({
        "name": spec.name,
        "section": strings(phi.comps()),
        "critical": r.critical,
        "residuals": strings(&r.residuals),
        "delta_values": strings(&r.delta_values),
        "consistent": r.consistent,
    });
    Ok(Report::new("verify", sampler, r.critical && r.consistent, body))
}

/// Grid settings for `integrate`; unset values fall back to the spec's
/// options and then to the defaults.
#[derive(Clone, Debug, Default)]
pub struct GridOverrides {
    pub step: Option<f64>,
    pub tolerance: Option<f64>,
    pub nodes: Option<usize>,
}

pub fn integrate(
    spec: &ProblemSpec,
    seed: &SectionSpec,
    grid: &GridOverrides,
    sampler: &Sampler,
) -> Result<(Report, SampledPatch)> {
    let vp = problem(spec, sampler)?;
    let ctx = spec.context(vp.chart())?;
    let phi0 = seed.to_section(vp.chart(), &ctx)?;
    let d = vp.annihilator()?;
    let o = &spec.options;
    let [lo, hi] = o.bounds.unwrap_or([sampler.bounds.lo, sampler.bounds.hi]);
    let nodes = grid.nodes.or(o.nodes).unwrap_or(DEFAULT_NODES);
    let mut g = GridSpec::uniform(vp.chart().k(), lo, hi, nodes);
    g.step = grid.step.or(o.step).unwrap_or(DEFAULT_STEP);
    g.tolerance = grid.tolerance.or(o.tolerance).unwrap_or(DEFAULT_TOLERANCE);
    if let Some(axes) = &o.sweep {
        let base = vp.chart().base();
        let order = axes
            .iter()
            .map(|a| {
                base.iter()
                    .position(|b| b == a)
                    .ok_or_else(|| Error::Spec { path: "options.sweep".into(), message: format!("`{a}` is not a base coordinate") })
            })
            .collect::<Result<Vec<_>>>()?;
        g.order = Some(order);
    }
    if !(g.step > 0.0) || !(g.tolerance > 0.0) {
        return Err(Error::Invalid("step and tolerance must be positive".into()));
    }
    let patch = sweep_section(&vp, &d, &phi0, &g)?;
    let max = patch.max_residual();
    let body = json!({
        "name": spec.name,
        "max_residual": max,
        "tolerance": g.tolerance,
        "patch": to_value(&patch),
    });
    Ok((Report::new("integrate", sampler, max <= g.tolerance, body), patch))
}

pub fn liouville(spec: &ProblemSpec, sampler: &Sampler) -> Result<Report> {
    let (x, omega) = spec.liouville_data()?;
    let r = liouville::analyze(x, Some(omega), sampler)?;
    let body = json!({"name": spec.name, "liouville": to_value(&r)});
    Ok(Report::new("liouville", sampler, r.passed(), body))
}

pub fn example(name: &str, seed: Option<u64>) -> Result<Report> {
    let spec = fixtures::load(name)?;
    let sampler = spec.sampler(seed);
    let r = fixtures::run_spec(&spec, &sampler)?;
    Ok(Report::new("example", &sampler, r.passed, to_value(&r)))
}
