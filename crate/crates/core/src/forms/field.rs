use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::{mask_positions, BundleChart, DiffForm};
use crate::error::{Error, Result};
use crate::symexpr::ScalarExpr;

/// A vector field given by one component per chart coordinate.
#[derive(Clone)]
pub struct VecField {
    chart: Arc<BundleChart>,
    comps: Vec<ScalarExpr>,
}

impl VecField {
    pub fn new(chart: &Arc<BundleChart>, comps: Vec<ScalarExpr>) -> Result<Self> {
        if comps.len() != chart.dim() {
            return Err(Error::Invalid(format!(
                "vector field has {} components on a {}-dimensional chart",
                comps.len(),
                chart.dim()
            )));
        }
        Ok(VecField { chart: chart.clone(), comps })
    }

    pub fn zero(chart: &Arc<BundleChart>) -> Self {
        VecField { chart: chart.clone(), comps: vec![ScalarExpr::zero(); chart.dim()] }
    }

    /// The coordinate field `∂/∂name`.
    pub fn coordinate(chart: &Arc<BundleChart>, name: &str) -> Result<Self> {
        let i = chart.require(name)?;
        let mut out = Self::zero(chart);
        out.comps[i] = ScalarExpr::one();
        Ok(out)
    }

    /// Builds a field from `(coordinate, component)` pairs; unnamed
    /// coordinates get zero.
    pub fn from_pairs(chart: &Arc<BundleChart>, pairs: &[(&str, ScalarExpr)]) -> Result<Self> {
        let mut out = Self::zero(chart);
        for (n, c) in pairs {
            let i = chart.require(n)?;
            out.comps[i] = &out.comps[i] + c;
        }
        Ok(out)
    }

    pub fn chart(&self) -> &Arc<BundleChart> {
        &self.chart
    }

    pub fn comps(&self) -> &[ScalarExpr] {
        &self.comps
    }

    pub fn comp(&self, name: &str) -> Result<&ScalarExpr> {
        Ok(&self.comps[self.chart.require(name)?])
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(|c| c.is_zero())
    }

    /// No base components.
    pub fn is_vertical(&self) -> bool {
        self.chart.base_indices().all(|i| self.comps[i].is_zero())
    }

    /// `X(f) = Σ X^i ∂f/∂x^i`.
    pub fn apply(&self, f: &ScalarExpr) -> ScalarExpr {
        let mut acc = ScalarExpr::zero();
        for (i, c) in self.comps.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let d = f.diff(self.chart.name(i));
            if !d.is_zero() {
                acc = acc + c * d;
            }
        }
        acc
    }

    pub fn bracket(&self, other: &VecField) -> Result<VecField> {
        if *self.chart != *other.chart {
            return Err(Error::ChartMismatch);
        }
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(xi, yi)| self.apply(yi) - other.apply(xi))
            .collect();
        Ok(VecField { chart: self.chart.clone(), comps })
    }

    pub fn scale(&self, f: &ScalarExpr) -> VecField {
        VecField { chart: self.chart.clone(), comps: self.comps.iter().map(|c| c * f).collect() }
    }

    pub fn try_add(&self, other: &VecField) -> Result<VecField> {
        if *self.chart != *other.chart {
            return Err(Error::ChartMismatch);
        }
        let comps = self.comps.iter().zip(&other.comps).map(|(a, b)| a + b).collect();
        Ok(VecField { chart: self.chart.clone(), comps })
    }

    pub fn equiv(&self, other: &VecField) -> bool {
        *self.chart == *other.chart && self.comps.iter().zip(&other.comps).all(|(a, b)| a.equiv(b))
    }

    /// The same field on a chart with the same coordinate names.
    pub fn to_chart(&self, chart: &Arc<BundleChart>) -> Result<VecField> {
        if chart.dim() != self.chart.dim() {
            return Err(Error::ChartMismatch);
        }
        let mut comps = vec![ScalarExpr::zero(); chart.dim()];
        for (i, c) in self.comps.iter().enumerate() {
            let j = chart.index_of(self.chart.name(i)).ok_or(Error::ChartMismatch)?;
            comps[j] = c.clone();
        }
        VecField::new(chart, comps)
    }

    pub fn map_comps(&self, f: impl Fn(&ScalarExpr) -> ScalarExpr) -> VecField {
        VecField { chart: self.chart.clone(), comps: self.comps.iter().map(f).collect() }
    }
}

impl fmt::Display for VecField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .comps
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| {
                if c.is_one() {
                    format!("∂/∂{}", self.chart.name(i))
                } else {
                    format!("({c})·∂/∂{}", self.chart.name(i))
                }
            })
            .collect();
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

impl fmt::Debug for VecField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VecField({self})")
    }
}

/// Name of the jet variable standing for `∂fiber/∂base`.
pub fn jet_name(fiber: &str, base: &str) -> String {
    format!("D{fiber}_{base}")
}

/// A section `x ↦ (x, φ(x))`: one expression in the base coordinates per
/// fiber coordinate (chart order).
#[derive(Clone, Debug)]
pub struct SectionMap {
    chart: Arc<BundleChart>,
    comps: Vec<ScalarExpr>,
}

impl SectionMap {
    pub fn new(chart: &Arc<BundleChart>, comps: Vec<ScalarExpr>) -> Result<Self> {
        let nf = chart.dim() - chart.k();
        if comps.len() != nf {
            return Err(Error::Invalid(format!("section has {} components for {nf} fiber coordinates", comps.len())));
        }
        for (c, name) in comps.iter().zip(chart.fibers()) {
            for v in c.free_vars() {
                if chart.index_of(&v).is_some_and(|i| chart.is_vertical(i)) {
                    return Err(Error::Invalid(format!(
                        "section component for `{name}` depends on fiber coordinate `{v}`"
                    )));
                }
            }
        }
        Ok(SectionMap { chart: chart.clone(), comps })
    }

    /// Builds a section from `(fiber, expression)` pairs; every fiber
    /// coordinate must be given.
    pub fn from_pairs(chart: &Arc<BundleChart>, pairs: &BTreeMap<String, ScalarExpr>) -> Result<Self> {
        let mut comps = Vec::new();
        for f in chart.fibers() {
            comps.push(
                pairs
                    .get(f)
                    .cloned()
                    .ok_or_else(|| Error::Invalid(format!("section does not specify `{f}`")))?,
            );
        }
        for k in pairs.keys() {
            if !chart.fibers().contains(k) {
                return Err(Error::ChartMismatch);
            }
        }
        Self::new(chart, comps)
    }

    pub fn chart(&self) -> &Arc<BundleChart> {
        &self.chart
    }

    pub fn comps(&self) -> &[ScalarExpr] {
        &self.comps
    }

    /// Fiber coordinates replaced by the section.
    pub fn value_map(&self) -> BTreeMap<String, ScalarExpr> {
        self.chart.fibers().iter().cloned().zip(self.comps.iter().cloned()).collect()
    }

    /// Fiber coordinates and jet variables replaced by the section and its
    /// first derivatives.
    pub fn jet_map(&self) -> BTreeMap<String, ScalarExpr> {
        let mut m = self.value_map();
        for (f, c) in self.chart.fibers().iter().zip(&self.comps) {
            for b in self.chart.base() {
                m.insert(jet_name(f, b), c.diff(b));
            }
        }
        m
    }

    /// `φ*(a)`: full substitution of fiber values and differentials.
    pub fn pullback(&self, a: &DiffForm) -> Result<DiffForm> {
        if **a.chart() != *self.chart {
            return Err(Error::ChartMismatch);
        }
        let k = self.chart.k();
        let values = self.value_map();
        let mut diffs = Vec::with_capacity(self.chart.dim());
        for i in 0..self.chart.dim() {
            let mut one = DiffForm::zero(&self.chart, 1);
            if i < k {
                one.add_mask(1 << i, ScalarExpr::one());
            } else {
                let c = &self.comps[i - k];
                for j in 0..k {
                    one.add_mask(1 << j, c.diff(self.chart.name(j)));
                }
            }
            diffs.push(one);
        }
        pull_terms(a, &diffs, |c| c.subst(&values))
    }
}

fn pull_terms(
    a: &DiffForm,
    diffs: &[DiffForm],
    coeff: impl Fn(&ScalarExpr) -> ScalarExpr,
) -> Result<DiffForm> {
    let chart = a.chart();
    let mut out = DiffForm::zero(chart, a.degree());
    for (m, c) in a.terms() {
        let c = coeff(c);
        if c.is_zero() {
            continue;
        }
        let mut acc = DiffForm::scalar(chart, c);
        for i in mask_positions(m) {
            acc = acc.wedge(&diffs[i])?;
        }
        out = out.try_add(&acc)?;
    }
    Ok(out)
}

/// Pullback along a generic section with fiber differentials replaced by
/// jet variables: `dz^a ↦ Σ_j Dza_xj dx^j`. Coefficients keep their fiber
/// dependence.
pub fn formal_pullback(a: &DiffForm) -> Result<DiffForm> {
    let chart = a.chart();
    let k = chart.k();
    let mut diffs = Vec::with_capacity(chart.dim());
    for i in 0..chart.dim() {
        let mut one = DiffForm::zero(chart, 1);
        if i < k {
            one.add_mask(1 << i, ScalarExpr::one());
        } else {
            for j in 0..k {
                one.add_mask(1 << j, ScalarExpr::var(&jet_name(chart.name(i), chart.name(j))));
            }
        }
        diffs.push(one);
    }
    pull_terms(a, &diffs, |c| c.clone())
}
