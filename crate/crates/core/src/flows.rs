//! Numeric reduction: fixed-step RK4 flows of vector fields and sweeps of
//! seed data along a characteristic distribution into sampled critical
//! sections.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Point, Result};
use crate::forms::{jet_name, BundleChart, SectionMap, VecField};
use crate::ideals::{chart_sampler, frobenius_check, Distribution, Frobenius};
use crate::linalg;
use crate::sampling::Sampler;
use crate::symexpr::{Compiled, ScalarExpr};
use crate::varprin::VariationalProblem;

pub const DEFAULT_STEP: f64 = 1e-3;
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
/// Offset used for the central differences that recover section jets.
pub const JET_OFFSET: f64 = 1e-4;

fn eval_failure(e: Error) -> Error {
    match e {
        Error::EvaluationFailure(_) => e,
        other => Error::EvaluationFailure(other.to_string()),
    }
}

/// A vector field compiled for repeated numeric evaluation.
#[derive(Clone, Debug)]
pub struct NumericField {
    comps: Vec<Option<Compiled>>,
}

impl NumericField {
    pub fn new(x: &VecField) -> Result<Self> {
        let slots = x.chart().coords().to_vec();
        let comps = x
            .comps()
            .iter()
            .map(|c| if c.is_zero() { Ok(None) } else { Compiled::new(c, &slots).map(Some) })
            .collect::<Result<Vec<_>>>()
            .map_err(eval_failure)?;
        Ok(NumericField { comps })
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn eval(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.comps
            .iter()
            .map(|c| match c {
                None => Ok(0.0),
                Some(c) => {
                    let v = c.eval(u).map_err(eval_failure)?;
                    if v.is_finite() {
                        Ok(v)
                    } else {
                        Err(Error::EvaluationFailure(format!("non-finite component at {u:?}")))
                    }
                }
            })
            .collect()
    }

    /// One RK4 increment from `u`.
    fn rk4(&self, u: &[f64], h: f64) -> Result<Vec<f64>> {
        let shifted = |k: &[f64], c: f64| u.iter().zip(k).map(|(a, b)| a + c * b).collect::<Vec<_>>();
        let k1 = self.eval(u)?;
        let k2 = self.eval(&shifted(&k1, h / 2.0))?;
        let k3 = self.eval(&shifted(&k2, h / 2.0))?;
        let k4 = self.eval(&shifted(&k3, h))?;
        Ok((0..u.len()).map(|i| h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect())
    }

    /// Endpoint after flowing for time `t` (negative `t` flows backwards).
    pub fn advance(&self, start: &[f64], t: f64, opts: &FlowOptions) -> Result<Vec<f64>> {
        let mut u = start.to_vec();
        self.walk(start, t, opts, |p| u = p.to_vec())?;
        Ok(u)
    }

    fn walk(&self, start: &[f64], t: f64, opts: &FlowOptions, mut visit: impl FnMut(&[f64])) -> Result<()> {
        if opts.step <= 0.0 || !opts.step.is_finite() {
            return Err(Error::Invalid(format!("step must be positive, got {}", opts.step)));
        }
        if start.len() != self.dim() {
            return Err(Error::Invalid(format!("start point has {} coordinates, field has {}", start.len(), self.dim())));
        }
        let steps = step_count(t, opts.step);
        let h = if steps == 0 { 0.0 } else { t / steps as f64 };
        let mut u = start.to_vec();
        // Kahan compensation terms for the accumulated increments.
        let mut carry = vec![0.0; u.len()];
        opts.check(&u)?;
        visit(&u);
        for _ in 0..steps {
            let du = self.rk4(&u, h)?;
            for i in 0..u.len() {
                let y = du[i] - carry[i];
                let t = u[i] + y;
                carry[i] = (t - u[i]) - y;
                u[i] = t;
            }
            opts.check(&u)?;
            visit(&u);
        }
        Ok(())
    }
}

fn step_count(t: f64, step: f64) -> usize {
    let r = t.abs() / step;
    let near = r.round();
    if (r - near).abs() < 1e-9 * r.max(1.0) {
        near as usize
    } else {
        r.ceil() as usize
    }
}

/// Integration settings for [`flow`].
#[derive(Clone, Debug, PartialEq)]
pub struct FlowOptions {
    pub step: f64,
    /// Per-coordinate `[lo, hi]` bounds; leaving them is an error.
    pub bounds: Option<Vec<(f64, f64)>>,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { step: DEFAULT_STEP, bounds: None }
    }
}

impl FlowOptions {
    pub fn with_step(step: f64) -> Self {
        FlowOptions { step, bounds: None }
    }

    fn check(&self, u: &[f64]) -> Result<()> {
        if let Some(b) = &self.bounds {
            if u.iter().zip(b).any(|(x, (lo, hi))| x < lo || x > hi) {
                return Err(Error::BoxExit(u.to_vec()));
            }
        }
        Ok(())
    }
}

/// Classical RK4 path of `x` from `start` over time `t`: `⌈|t|/step⌉ + 1`
/// points, the last one exactly at time `t`.
pub fn flow(x: &VecField, start: &[f64], t: f64, opts: &FlowOptions) -> Result<Vec<Vec<f64>>> {
    let f = NumericField::new(x)?;
    let mut path = Vec::new();
    f.walk(start, t, opts, |p| path.push(p.to_vec()))?;
    Ok(path)
}

/// `|φ_X^t ∘ φ_Y^t (p) − φ_Y^t ∘ φ_X^t (p)|`.
pub fn commutation_defect_pair(x: &VecField, y: &VecField, point: &[f64], t: f64, opts: &FlowOptions) -> Result<f64> {
    let (fx, fy) = (NumericField::new(x)?, NumericField::new(y)?);
    let a = fx.advance(&fy.advance(point, t, opts)?, t, opts)?;
    let b = fy.advance(&fx.advance(point, t, opts)?, t, opts)?;
    Ok(a.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt())
}

/// Commutation defect of the first two basis fields of `d`.
pub fn commutation_defect(d: &Distribution, point: &[f64], t: f64, opts: &FlowOptions) -> Result<f64> {
    if d.rank() < 2 {
        return Err(Error::Invalid("commutation defect needs at least two basis fields".into()));
    }
    commutation_defect_pair(&d.basis()[0], &d.basis()[1], point, t, opts)
}

/// Lattice and integration settings for [`sweep_section`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    /// Per base axis.
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub nodes: Vec<usize>,
    pub step: f64,
    /// Base axes to sweep, in sweep order. `None` sweeps every base axis
    /// the distribution projects onto, ascending.
    pub order: Option<Vec<usize>>,
    pub tolerance: f64,
}

impl GridSpec {
    /// The same lattice `[lo, hi]` with `nodes` points on each of `k` axes.
    pub fn uniform(k: usize, lo: f64, hi: f64, nodes: usize) -> Self {
        GridSpec {
            lo: vec![lo; k],
            hi: vec![hi; k],
            nodes: vec![nodes; k],
            step: DEFAULT_STEP,
            order: None,
            tolerance: DEFAULT_TOLERANCE,
        }
    }

    fn value(&self, axis: usize, i: usize) -> f64 {
        if self.nodes[axis] == 1 {
            return self.lo[axis];
        }
        self.lo[axis] + (self.hi[axis] - self.lo[axis]) * i as f64 / (self.nodes[axis] - 1) as f64
    }

    fn anchor(&self, axis: usize) -> usize {
        self.nodes[axis] / 2
    }

    fn validate(&self, k: usize) -> Result<()> {
        if self.lo.len() != k || self.hi.len() != k || self.nodes.len() != k {
            return Err(Error::Invalid(format!("grid must describe all {k} base axes")));
        }
        if self.nodes.contains(&0) {
            return Err(Error::Invalid("every axis needs at least one node".into()));
        }
        if self.step <= 0.0 || self.tolerance <= 0.0 {
            return Err(Error::Invalid("step and tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Where a patch came from.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    /// Seed section, one `fiber = expression` entry per fiber coordinate.
    pub seed_section: Vec<String>,
    pub swept_axes: Vec<String>,
    /// The transversal fields that were integrated, one per swept axis.
    pub fields: Vec<String>,
    pub grid: GridSpec,
    pub jet_offset: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PatchNode {
    /// Lattice indices, one per base axis.
    pub index: Vec<usize>,
    /// Full point in chart coordinates.
    pub point: Vec<f64>,
    /// `|Δ_a|` at the node.
    pub residuals: Vec<f64>,
}

/// Lattice of points of a swept critical section.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampledPatch {
    pub coords: Vec<String>,
    pub k: usize,
    /// Lattice values per base axis.
    pub lattice: Vec<Vec<f64>>,
    /// Nodes in lexicographic lattice order, first axis slowest.
    pub nodes: Vec<PatchNode>,
    pub provenance: Provenance,
}

impl SampledPatch {
    pub fn max_residual(&self) -> f64 {
        self.nodes.iter().flat_map(|n| n.residuals.iter().copied()).fold(0.0, f64::max)
    }

    /// Fiber values at a lattice node.
    pub fn fiber_at(&self, index: &[usize]) -> Option<&[f64]> {
        self.nodes.iter().find(|n| n.index == index).map(|n| &n.point[self.k..])
    }

    /// Multilinear interpolation of the fiber values at a base point inside
    /// the lattice. Approximate away from nodes.
    pub fn interpolate(&self, base: &[f64]) -> Option<Vec<f64>> {
        if base.len() != self.k {
            return None;
        }
        let mut cell = Vec::with_capacity(self.k);
        for (axis, &x) in base.iter().enumerate() {
            let vals = &self.lattice[axis];
            if vals.len() == 1 {
                cell.push((0, 0, 0.0));
                continue;
            }
            let (lo, hi) = (vals[0], vals[vals.len() - 1]);
            if x < lo - 1e-12 || x > hi + 1e-12 {
                return None;
            }
            let pos = ((x - lo) / (hi - lo) * (vals.len() - 1) as f64).clamp(0.0, (vals.len() - 1) as f64);
            let i = (pos.floor() as usize).min(vals.len() - 2);
            cell.push((i, i + 1, pos - i as f64));
        }
        let nf = self.coords.len() - self.k;
        let mut out = vec![0.0; nf];
        for corner in 0..(1usize << self.k) {
            let mut weight = 1.0;
            let mut index = Vec::with_capacity(self.k);
            for (axis, &(i0, i1, f)) in cell.iter().enumerate() {
                if corner >> axis & 1 == 1 {
                    weight *= f;
                    index.push(i1);
                } else {
                    weight *= 1.0 - f;
                    index.push(i0);
                }
            }
            if weight == 0.0 {
                continue;
            }
            let fib = self.fiber_at(&index)?;
            for (o, v) in out.iter_mut().zip(fib) {
                *o += weight * v;
            }
        }
        Some(out)
    }

    /// CSV export: a `#`-prefixed provenance JSON line, a header row, then
    /// one row per node with coordinates and residuals.
    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::new();
        let prov = serde_json::to_string(&self.provenance).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(out, "# {prov}").expect("write to string");
        let mut w = csv::Writer::from_writer(Vec::new());
        let residuals = self.nodes.first().map(|n| n.residuals.len()).unwrap_or(0);
        let mut header: Vec<String> = self.coords.clone();
        header.extend((1..=residuals).map(|a| format!("residual_{a}")));
        w.write_record(&header).map_err(|e| Error::Io(e.to_string()))?;
        for n in &self.nodes {
            let row: Vec<String> = n.point.iter().chain(&n.residuals).map(|v| v.to_string()).collect();
            w.write_record(&row).map_err(|e| Error::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        out.push_str(&String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))?);
        Ok(out)
    }
}

/// A point being carried through the sweep, with the shifted copies used
/// to difference the section along axes already fixed.
#[derive(Clone)]
struct Bundle {
    main: Vec<f64>,
    /// `(base axis, +offset copy, −offset copy)`.
    pairs: Vec<(usize, Vec<f64>, Vec<f64>)>,
}

impl Bundle {
    fn advance(&self, f: &NumericField, t: f64, opts: &FlowOptions) -> Result<Bundle> {
        let mut pairs = Vec::with_capacity(self.pairs.len());
        for (axis, p, m) in &self.pairs {
            pairs.push((*axis, f.advance(p, t, opts)?, f.advance(m, t, opts)?));
        }
        Ok(Bundle { main: f.advance(&self.main, t, opts)?, pairs })
    }
}

/// Transversal fields `Y_a ∈ D` with base part exactly `∂/∂x^a`, one per
/// swept axis.
fn transversal_fields(
    chart: &Arc<BundleChart>,
    d: &Distribution,
    order: Option<&[usize]>,
    sampler: &Sampler,
) -> Result<(Vec<usize>, Vec<VecField>)> {
    let k = chart.k();
    let mut cols: Vec<usize> = match order {
        Some(o) => o.to_vec(),
        None => Vec::new(),
    };
    for a in 0..k {
        if !cols.contains(&a) {
            cols.push(a);
        }
    }
    let requested = order.map(|o| o.len());
    cols.extend(chart.fiber_indices());
    let r = linalg::rref(&d.matrix(), &cols, sampler);
    let mut by_axis: BTreeMap<usize, usize> = BTreeMap::new();
    for &(row, col) in &r.pivots {
        if col < k {
            by_axis.insert(col, row);
        }
    }
    let swept: Vec<usize> = match order {
        Some(o) => o.to_vec(),
        None => by_axis.keys().copied().collect(),
    };
    let needed = requested.unwrap_or(swept.len()).max(1);
    let available = swept.iter().filter(|a| by_axis.contains_key(a)).count();
    if swept.is_empty() || available < swept.len() {
        return Err(Error::NonTransversalDistribution { rank: available, needed });
    }
    let mut fields = Vec::with_capacity(swept.len());
    for a in &swept {
        let row = &r.matrix[by_axis[a]];
        for b in 0..k {
            if b != *a && !swept.contains(&b) && !row[b].is_zero() {
                return Err(Error::NonTransversalDistribution { rank: available, needed: swept.len() + 1 });
            }
        }
        fields.push(VecField::new(chart, row.clone())?);
    }
    Ok((swept, fields))
}

/// Compiled section: fiber values and their base derivatives.
struct NumericSection {
    values: Vec<Compiled>,
    derivs: Vec<Vec<Compiled>>,
}

impl NumericSection {
    fn new(phi: &SectionMap) -> Result<Self> {
        let chart = phi.chart();
        let slots = chart.base().to_vec();
        let values = phi.comps().iter().map(|c| Compiled::new(c, &slots)).collect::<Result<Vec<_>>>();
        let derivs = chart
            .base()
            .iter()
            .map(|b| phi.comps().iter().map(|c| Compiled::new(&c.diff(b), &slots)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>();
        Ok(NumericSection { values: values.map_err(eval_failure)?, derivs: derivs.map_err(eval_failure)? })
    }

    fn point(&self, base: &[f64]) -> Result<Vec<f64>> {
        let mut u = base.to_vec();
        for v in &self.values {
            u.push(v.eval(base).map_err(eval_failure)?);
        }
        Ok(u)
    }

    fn tangent(&self, base: &[f64], axis: usize) -> Result<Vec<f64>> {
        let mut t = vec![0.0; base.len()];
        t[axis] = 1.0;
        for d in &self.derivs[axis] {
            t.push(d.eval(base).map_err(eval_failure)?);
        }
        Ok(t)
    }
}

fn point_map(coords: &[String], u: &[f64]) -> Point {
    coords.iter().cloned().zip(u.iter().copied()).collect()
}

/// Sweeps seed data `phi0`, read on the slice where every swept axis sits
/// at its anchor node, along transversal fields of `d` to every lattice
/// node, and checks the critical equations at each node.
pub fn sweep_section(
    vp: &VariationalProblem,
    d: &Distribution,
    phi0: &SectionMap,
    grid: &GridSpec,
) -> Result<SampledPatch> {
    let chart = vp.chart().clone();
    if **d.chart() != *chart || **phi0.chart() != *chart {
        return Err(Error::ChartMismatch);
    }
    let k = chart.k();
    let n = chart.dim();
    grid.validate(k)?;
    let sampler = chart_sampler(&chart, vp.sampler());
    if let Frobenius::NotIntegrable { pair, witness, .. } = frobenius_check(d, &sampler)? {
        return Err(Error::Invalid(format!("distribution is not integrable: fields {pair:?} near {witness:?}")));
    }
    let (swept, fields) = transversal_fields(&chart, d, grid.order.as_deref(), &sampler)?;
    let numeric: Vec<NumericField> = fields.iter().map(NumericField::new).collect::<Result<_>>()?;
    let free: Vec<usize> = (0..k).filter(|a| !swept.contains(a)).collect();
    let seed = NumericSection::new(phi0)?;
    let basis: Vec<NumericField> = d.basis().iter().map(NumericField::new).collect::<Result<_>>()?;

    let eqs = vp.critical_equations()?;
    let mut slots: Vec<String> = chart.coords().to_vec();
    for f in chart.fibers() {
        for b in chart.base() {
            slots.push(jet_name(f, b));
        }
    }
    let deltas: Vec<Compiled> =
        eqs.deltas.iter().map(|e| Compiled::new(e, &slots)).collect::<Result<_>>().map_err(eval_failure)?;
    let opts = FlowOptions::with_step(grid.step);
    let last = *swept.last().expect("at least one swept axis");

    let mut nodes = Vec::new();
    for free_index in lattice_indices(grid, &free) {
        let mut base = vec![0.0; k];
        let mut index = vec![0usize; k];
        for &a in &swept {
            index[a] = grid.anchor(a);
            base[a] = grid.value(a, index[a]);
        }
        for (&a, &i) in free.iter().zip(&free_index) {
            index[a] = i;
            base[a] = grid.value(a, i);
        }
        check_transversal_seed(&chart, &seed, &basis, &free, &base)?;
        let mut pairs = Vec::new();
        for &b in &free {
            let mut plus = base.clone();
            plus[b] += JET_OFFSET;
            let mut minus = base.clone();
            minus[b] -= JET_OFFSET;
            pairs.push((b, seed.point(&plus)?, seed.point(&minus)?));
        }
        let mut current = vec![(index, Bundle { main: seed.point(&base)?, pairs })];
        for (&axis, field) in swept.iter().zip(&numeric) {
            let mut next = Vec::new();
            for (index, bundle) in &current {
                for (j, b) in sweep_axis(grid, axis, index[axis], bundle, field, &opts)? {
                    let mut idx = index.clone();
                    idx[axis] = j;
                    let b = if axis == last {
                        b
                    } else {
                        let mut b = b;
                        let plus = field.advance(&b.main, JET_OFFSET, &opts)?;
                        let minus = field.advance(&b.main, -JET_OFFSET, &opts)?;
                        b.pairs.push((axis, plus, minus));
                        b
                    };
                    next.push((idx, b));
                }
            }
            current = next;
        }
        for (index, bundle) in current {
            let u = &bundle.main;
            for a in 0..k {
                let expected = grid.value(a, index[a]);
                if (u[a] - expected).abs() > 1e-9 * expected.abs().max(1.0) {
                    return Err(Error::TangencyViolation { witness: point_map(chart.coords(), u) });
                }
            }
            let mut jets = vec![vec![0.0; k]; n - k];
            let y_last = numeric[swept.len() - 1].eval(u)?;
            for (fi, row) in jets.iter_mut().enumerate() {
                row[last] = y_last[k + fi];
            }
            for (axis, plus, minus) in &bundle.pairs {
                for (fi, row) in jets.iter_mut().enumerate() {
                    row[*axis] = (plus[k + fi] - minus[k + fi]) / (2.0 * JET_OFFSET);
                }
            }
            let mut x = u.clone();
            for row in &jets {
                x.extend(row.iter().copied());
            }
            let mut residuals = Vec::with_capacity(deltas.len());
            for delta in &deltas {
                let v = delta.eval(&x).map_err(eval_failure)?.abs();
                if !(v <= grid.tolerance) {
                    return Err(Error::ResidualTooLarge { node: u[..k].to_vec(), value: v });
                }
                residuals.push(v);
            }
            nodes.push(PatchNode { index, point: bundle.main.clone(), residuals });
        }
    }
    nodes.sort_by(|a, b| a.index.cmp(&b.index));

    let lattice = (0..k).map(|a| (0..grid.nodes[a]).map(|i| grid.value(a, i)).collect()).collect();
    let provenance = Provenance {
        seed_section: chart.fibers().iter().zip(phi0.comps()).map(|(f, c)| format!("{f} = {c}")).collect(),
        swept_axes: swept.iter().map(|&a| chart.name(a).to_string()).collect(),
        fields: fields.iter().map(|f| f.to_string()).collect(),
        grid: GridSpec { order: Some(swept.clone()), ..grid.clone() },
        jet_offset: JET_OFFSET,
    };
    Ok(SampledPatch { coords: chart.coords().to_vec(), k, lattice, nodes, provenance })
}

/// Every index combination over `axes`, first axis slowest.
fn lattice_indices(grid: &GridSpec, axes: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &a in axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..grid.nodes[a]).map(move |i| {
                    let mut p = prefix.clone();
                    p.push(i);
                    p
                })
            })
            .collect();
    }
    out
}

/// Walks from the anchor node along `axis` in both directions, returning
/// the bundle at every node of that lattice line.
fn sweep_axis(
    grid: &GridSpec,
    axis: usize,
    start: usize,
    bundle: &Bundle,
    field: &NumericField,
    opts: &FlowOptions,
) -> Result<Vec<(usize, Bundle)>> {
    let mut out = vec![(start, bundle.clone())];
    let mut b = bundle.clone();
    for j in (start + 1)..grid.nodes[axis] {
        b = b.advance(field, grid.value(axis, j) - grid.value(axis, j - 1), opts)?;
        out.push((j, b.clone()));
    }
    let mut b = bundle.clone();
    for j in (0..start).rev() {
        b = b.advance(field, grid.value(axis, j) - grid.value(axis, j + 1), opts)?;
        out.push((j, b.clone()));
    }
    Ok(out)
}

/// The seed slice must be transversal to `D`: its tangents together with
/// a basis of `D` must be independent.
fn check_transversal_seed(
    chart: &Arc<BundleChart>,
    seed: &NumericSection,
    basis: &[NumericField],
    free: &[usize],
    base: &[f64],
) -> Result<()> {
    if free.is_empty() {
        return Ok(());
    }
    let u = seed.point(base)?;
    let mut rows = Vec::new();
    for f in basis {
        rows.push(f.eval(&u)?);
    }
    for &b in free {
        rows.push(seed.tangent(base, b)?);
    }
    let m = DMatrix::from_fn(rows.len(), chart.dim(), |i, j| rows[i][j]);
    if linalg::numeric_rank(&m) < rows.len() {
        return Err(Error::TangencyViolation { witness: point_map(chart.coords(), &u) });
    }
    Ok(())
}

/// A constant section seed `fiber = value` for every fiber coordinate.
pub fn constant_seed(chart: &Arc<BundleChart>, values: &[f64]) -> Result<SectionMap> {
    let comps = values
        .iter()
        .map(|v| {
            let r = num_rational::BigRational::from_float(*v)
                .ok_or_else(|| Error::Invalid(format!("seed value {v} is not finite")))?;
            Ok(ScalarExpr::rational(r))
        })
        .collect::<Result<Vec<_>>>()?;
    SectionMap::new(chart, comps)
}

#[cfg(test)]
mod tests;
