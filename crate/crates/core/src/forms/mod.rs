//! Exterior algebra on a fibered coordinate chart.
//!
//! Multi-indices are stored as bitmasks over the chart's coordinate order
//! (base, then primary fiber, then residual fiber), so every stored index is
//! ascending by construction and a form is a map from masks to canonical
//! coefficients.

mod field;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::sync::Arc;

pub use field::{formal_pullback, jet_name, SectionMap, VecField};

use crate::error::{Error, Result};
use crate::symexpr::ScalarExpr;

pub type MultiIndex = u64;

/// Coordinates split into base `x`, primary fiber `z` and residual fiber
/// `w` blocks, with the Euclidean metric and ascending-order orientation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BundleChart {
    base: Vec<String>,
    fiber_z: Vec<String>,
    fiber_w: Vec<String>,
    coords: Vec<String>,
}

fn valid_ident(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic())
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl BundleChart {
    pub fn new(base: &[&str], fiber_z: &[&str], fiber_w: &[&str]) -> Result<Arc<Self>> {
        let own = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        Self::from_names(own(base), own(fiber_z), own(fiber_w))
    }

    pub fn from_names(base: Vec<String>, fiber_z: Vec<String>, fiber_w: Vec<String>) -> Result<Arc<Self>> {
        if base.is_empty() {
            return Err(Error::InvalidChart("at least one base coordinate is required".into()));
        }
        if fiber_z.is_empty() {
            return Err(Error::InvalidChart("at least one primary fiber coordinate is required".into()));
        }
        Self::build(base, fiber_z, fiber_w)
    }

    /// A chart on plain Euclidean space with no fibration: every coordinate
    /// is a base coordinate.
    pub fn euclidean(coords: &[&str]) -> Result<Arc<Self>> {
        if coords.is_empty() {
            return Err(Error::InvalidChart("empty chart".into()));
        }
        Self::build(coords.iter().map(|s| s.to_string()).collect(), Vec::new(), Vec::new())
    }

    fn build(base: Vec<String>, fiber_z: Vec<String>, fiber_w: Vec<String>) -> Result<Arc<Self>> {
        let coords: Vec<String> = base.iter().chain(&fiber_z).chain(&fiber_w).cloned().collect();
        if coords.len() > 64 {
            return Err(Error::InvalidChart(format!("{} coordinates exceed the limit of 64", coords.len())));
        }
        for (i, c) in coords.iter().enumerate() {
            if !valid_ident(c) {
                return Err(Error::InvalidChart(format!("`{c}` is not a valid coordinate name")));
            }
            if coords[..i].contains(c) {
                return Err(Error::InvalidChart(format!("coordinate `{c}` appears twice")));
            }
        }
        Ok(Arc::new(BundleChart { base, fiber_z, fiber_w, coords }))
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Number of base coordinates.
    pub fn k(&self) -> usize {
        self.base.len()
    }

    pub fn p(&self) -> usize {
        self.fiber_z.len()
    }

    pub fn s(&self) -> usize {
        self.fiber_w.len()
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn base(&self) -> &[String] {
        &self.base
    }

    pub fn fiber_z(&self) -> &[String] {
        &self.fiber_z
    }

    pub fn fiber_w(&self) -> &[String] {
        &self.fiber_w
    }

    /// All vertical coordinates, `z` block first.
    pub fn fibers(&self) -> &[String] {
        &self.coords[self.k()..]
    }

    pub fn name(&self, i: usize) -> &str {
        &self.coords[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| c == name)
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.index_of(name)
            .ok_or_else(|| Error::Invalid(format!("`{name}` is not a coordinate of the chart")))
    }

    pub fn is_base(&self, i: usize) -> bool {
        i < self.k()
    }

    pub fn is_vertical(&self, i: usize) -> bool {
        i >= self.k() && i < self.dim()
    }

    pub fn base_indices(&self) -> std::ops::Range<usize> {
        0..self.k()
    }

    pub fn fiber_indices(&self) -> std::ops::Range<usize> {
        self.k()..self.dim()
    }

    /// Residual fiber block present: the chart is a candidate for a
    /// non-proper principle.
    pub fn nonproper_candidate(&self) -> bool {
        !self.fiber_w.is_empty()
    }

    /// Mask of the base volume form `dx^1 ∧ ... ∧ dx^k`.
    pub fn base_mask(&self) -> MultiIndex {
        full_mask(self.k())
    }

    pub fn full_mask(&self) -> MultiIndex {
        full_mask(self.dim())
    }
}

fn full_mask(n: usize) -> MultiIndex {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

pub fn mask_positions(mask: MultiIndex) -> Vec<usize> {
    (0..64).filter(|i| mask >> i & 1 == 1).collect()
}

/// Sign of `dx^a ∧ dx^b` relative to the ascending basis element of
/// `a | b`; the masks must be disjoint.
pub fn wedge_sign(a: MultiIndex, b: MultiIndex) -> i32 {
    debug_assert_eq!(a & b, 0);
    let mut inversions = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        inversions += (a >> j).count_ones();
        rest &= rest - 1;
    }
    if inversions.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Sorts a list of coordinate positions into a mask and the sign of the
/// sorting permutation; `None` when a position repeats.
pub fn sort_positions(positions: &[usize]) -> Option<(MultiIndex, i32)> {
    let mut mask = 0u64;
    let mut inversions = 0usize;
    for (i, &p) in positions.iter().enumerate() {
        if mask >> p & 1 == 1 {
            return None;
        }
        mask |= 1 << p;
        inversions += positions[..i].iter().filter(|&&q| q > p).count();
    }
    Some((mask, if inversions.is_multiple_of(2) { 1 } else { -1 }))
}

/// A differential form of fixed degree.
#[derive(Clone)]
pub struct DiffForm {
    chart: Arc<BundleChart>,
    degree: usize,
    terms: BTreeMap<MultiIndex, ScalarExpr>,
}

impl DiffForm {
    pub fn zero(chart: &Arc<BundleChart>, degree: usize) -> Self {
        DiffForm { chart: chart.clone(), degree, terms: BTreeMap::new() }
    }

    pub fn scalar(chart: &Arc<BundleChart>, f: ScalarExpr) -> Self {
        let mut out = Self::zero(chart, 0);
        out.add_mask(0, f);
        out
    }

    /// The coordinate differential `d(name)`.
    pub fn d(chart: &Arc<BundleChart>, name: &str) -> Result<Self> {
        let i = chart.require(name)?;
        let mut out = Self::zero(chart, 1);
        out.add_mask(1 << i, ScalarExpr::one());
        Ok(out)
    }

    /// `coeff · dx^{names[0]} ∧ dx^{names[1]} ∧ ...`, in any order.
    pub fn monomial(chart: &Arc<BundleChart>, coeff: ScalarExpr, names: &[&str]) -> Result<Self> {
        let pos = names.iter().map(|n| chart.require(n)).collect::<Result<Vec<_>>>()?;
        let mut out = Self::zero(chart, pos.len());
        out.add_term(&pos, coeff);
        Ok(out)
    }

    /// Volume form of the whole chart.
    pub fn volume(chart: &Arc<BundleChart>) -> Self {
        let mut out = Self::zero(chart, chart.dim());
        out.add_mask(chart.full_mask(), ScalarExpr::one());
        out
    }

    pub fn chart(&self) -> &Arc<BundleChart> {
        &self.chart
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (MultiIndex, &ScalarExpr)> {
        self.terms.iter().map(|(m, c)| (*m, c))
    }

    pub fn coeff(&self, mask: MultiIndex) -> ScalarExpr {
        self.terms.get(&mask).cloned().unwrap_or_else(ScalarExpr::zero)
    }

    /// Coefficient of `dx^{names...}` taking the ordering sign into account.
    pub fn coeff_of(&self, names: &[&str]) -> Result<ScalarExpr> {
        let pos = names.iter().map(|n| self.chart.require(n)).collect::<Result<Vec<_>>>()?;
        Ok(match sort_positions(&pos) {
            None => ScalarExpr::zero(),
            Some((m, s)) => {
                let c = self.coeff(m);
                if s < 0 {
                    -c
                } else {
                    c
                }
            }
        })
    }

    /// Adds `coeff` at an ascending mask.
    pub fn add_mask(&mut self, mask: MultiIndex, coeff: ScalarExpr) {
        debug_assert_eq!(mask.count_ones() as usize, self.degree);
        if coeff.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(mask) {
            Entry::Vacant(v) => {
                v.insert(coeff);
            }
            Entry::Occupied(mut o) => {
                let s = o.get() + &coeff;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    /// Adds `coeff · dx^{p0} ∧ dx^{p1} ∧ ...` for positions in any order.
    pub fn add_term(&mut self, positions: &[usize], coeff: ScalarExpr) {
        assert_eq!(positions.len(), self.degree, "index length differs from form degree");
        if let Some((mask, sign)) = sort_positions(positions) {
            self.add_mask(mask, if sign < 0 { -coeff } else { coeff });
        }
    }

    fn check_chart(&self, other: &DiffForm) -> Result<()> {
        if Arc::ptr_eq(&self.chart, &other.chart) || self.chart == other.chart {
            Ok(())
        } else {
            Err(Error::ChartMismatch)
        }
    }

    pub fn try_add(&self, other: &DiffForm) -> Result<DiffForm> {
        self.check_chart(other)?;
        if self.degree != other.degree {
            return Err(Error::DegreeMismatch(format!("cannot add forms of degree {} and {}", self.degree, other.degree)));
        }
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_mask(*m, c.clone());
        }
        Ok(out)
    }

    pub fn scale(&self, f: &ScalarExpr) -> DiffForm {
        let mut out = Self::zero(&self.chart, self.degree);
        if f.is_zero() {
            return out;
        }
        for (m, c) in &self.terms {
            out.add_mask(*m, c * f);
        }
        out
    }

    pub fn map_coeffs(&self, f: impl Fn(&ScalarExpr) -> ScalarExpr) -> DiffForm {
        let mut out = Self::zero(&self.chart, self.degree);
        for (m, c) in &self.terms {
            out.add_mask(*m, f(c));
        }
        out
    }

    /// Exterior product. Terms of degree above the chart dimension vanish.
    pub fn wedge(&self, other: &DiffForm) -> Result<DiffForm> {
        self.check_chart(other)?;
        let mut out = Self::zero(&self.chart, self.degree + other.degree);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                if a & b != 0 {
                    continue;
                }
                let c = ca * cb;
                out.add_mask(a | b, if wedge_sign(*a, *b) < 0 { -c } else { c });
            }
        }
        Ok(out)
    }

    /// Wedge of a non-empty list of forms, left to right.
    pub fn wedge_all(forms: &[DiffForm]) -> Result<DiffForm> {
        let (first, rest) = forms
            .split_first()
            .ok_or_else(|| Error::Invalid("empty wedge product".into()))?;
        rest.iter().try_fold(first.clone(), |acc, f| acc.wedge(f))
    }

    pub fn ext_d(&self) -> DiffForm {
        let n = self.chart.dim();
        let mut out = Self::zero(&self.chart, self.degree + 1);
        for (m, c) in &self.terms {
            for j in 0..n {
                if m >> j & 1 == 1 {
                    continue;
                }
                let dc = c.diff(self.chart.name(j));
                if dc.is_zero() {
                    continue;
                }
                let sign = wedge_sign(1 << j, *m);
                out.add_mask(m | 1 << j, if sign < 0 { -dc } else { dc });
            }
        }
        out
    }

    /// Interior product `X ⨼ self`, an antiderivation acting from the left.
    pub fn interior(&self, x: &VecField) -> Result<DiffForm> {
        if !(Arc::ptr_eq(&self.chart, x.chart()) || *self.chart == **x.chart()) {
            return Err(Error::ChartMismatch);
        }
        if self.degree == 0 {
            return Ok(Self::zero(&self.chart, 0));
        }
        let mut out = Self::zero(&self.chart, self.degree - 1);
        for (m, c) in &self.terms {
            for (r, i) in mask_positions(*m).into_iter().enumerate() {
                let xi = &x.comps()[i];
                if xi.is_zero() {
                    continue;
                }
                let t = c * xi;
                out.add_mask(m & !(1 << i), if r % 2 == 1 { -t } else { t });
            }
        }
        Ok(out)
    }

    /// Euclidean Hodge star: `*(dx^I) = sign(I, I^c) dx^{I^c}`.
    pub fn hodge_star(&self) -> DiffForm {
        let full = self.chart.full_mask();
        let mut out = Self::zero(&self.chart, self.chart.dim() - self.degree);
        for (m, c) in &self.terms {
            let comp = full & !m;
            let s = wedge_sign(*m, comp);
            out.add_mask(comp, if s < 0 { -c.clone() } else { c.clone() });
        }
        out
    }

    /// Exact equality of coefficients as rational functions.
    pub fn equiv(&self, other: &DiffForm) -> bool {
        if self.degree != other.degree || self.check_chart(other).is_err() {
            return false;
        }
        match self.try_add(&-other) {
            Ok(d) => d.is_zero(),
            Err(_) => false,
        }
    }

    /// Substitutes variables in every coefficient.
    pub fn subst(&self, map: &BTreeMap<String, ScalarExpr>) -> DiffForm {
        self.map_coeffs(|c| c.subst(map))
    }

    /// True when only base differentials appear.
    pub fn is_semibasic(&self) -> bool {
        let base = self.chart.base_mask();
        self.terms.keys().all(|m| m & !base == 0)
    }

    /// Index names of a mask, in chart order.
    pub fn index_names(&self, mask: MultiIndex) -> Vec<String> {
        mask_positions(mask).into_iter().map(|i| self.chart.name(i).to_string()).collect()
    }

    /// The same form expressed on a chart with the same coordinate names in
    /// a different order or split.
    pub fn to_chart(&self, chart: &Arc<BundleChart>) -> Result<DiffForm> {
        if chart.dim() != self.chart.dim() {
            return Err(Error::ChartMismatch);
        }
        let mut out = DiffForm::zero(chart, self.degree);
        for (m, c) in &self.terms {
            let pos = mask_positions(*m)
                .into_iter()
                .map(|i| chart.index_of(self.chart.name(i)).ok_or(Error::ChartMismatch))
                .collect::<Result<Vec<_>>>()?;
            out.add_term(&pos, c.clone());
        }
        Ok(out)
    }
}

impl fmt::Debug for DiffForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DiffForm<{}>({self})", self.degree)
    }
}

impl fmt::Display for DiffForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let idx: Vec<String> = self.index_names(*m).iter().map(|n| format!("d{n}")).collect();
            if idx.is_empty() {
                write!(f, "({c})")?;
            } else if c.is_one() {
                write!(f, "{}", idx.join("∧"))?;
            } else {
                write!(f, "({c})·{}", idx.join("∧"))?;
            }
        }
        Ok(())
    }
}

impl Add for &DiffForm {
    type Output = DiffForm;
    fn add(self, rhs: &DiffForm) -> DiffForm {
        self.try_add(rhs).expect("adding forms of different charts or degrees")
    }
}

impl Add for DiffForm {
    type Output = DiffForm;
    fn add(self, rhs: DiffForm) -> DiffForm {
        &self + &rhs
    }
}

impl Sub for &DiffForm {
    type Output = DiffForm;
    fn sub(self, rhs: &DiffForm) -> DiffForm {
        self + &(-rhs)
    }
}

impl Sub for DiffForm {
    type Output = DiffForm;
    fn sub(self, rhs: DiffForm) -> DiffForm {
        &self - &rhs
    }
}

impl Neg for &DiffForm {
    type Output = DiffForm;
    fn neg(self) -> DiffForm {
        DiffForm {
            chart: self.chart.clone(),
            degree: self.degree,
            terms: self.terms.iter().map(|(m, c)| (*m, -c)).collect(),
        }
    }
}

impl Neg for DiffForm {
    type Output = DiffForm;
    fn neg(self) -> DiffForm {
        -&self
    }
}

/// Canonical Lie derivative of a scalar along a vector field.
pub fn lie_derivative(x: &VecField, f: &ScalarExpr) -> ScalarExpr {
    x.apply(f)
}

/// Lie bracket `[X, Y]^i = X(Y^i) − Y(X^i)`.
pub fn lie_bracket(x: &VecField, y: &VecField) -> Result<VecField> {
    x.bracket(y)
}

/// The one-form metrically dual to `X` (identity metric).
pub fn dual_one_form(x: &VecField) -> DiffForm {
    let mut out = DiffForm::zero(x.chart(), 1);
    for (i, c) in x.comps().iter().enumerate() {
        out.add_mask(1 << i, c.clone());
    }
    out
}

#[cfg(test)]
mod tests;
