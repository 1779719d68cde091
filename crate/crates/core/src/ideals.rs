//! Cartan ideals, annihilators of forms and Frobenius integrability.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Point, Result};
use crate::forms::{mask_positions, BundleChart, DiffForm, MultiIndex, SectionMap, VecField};
use crate::linalg::{self, Certification, SymMatrix};
use crate::sampling::{SamplePoint, Sampler};
use crate::symexpr::{ScalarExpr, ZERO_THRESHOLD};

/// The sampler restricted to a chart: coordinates are the chart's unless the
/// caller already chose some.
pub fn chart_sampler(chart: &BundleChart, sampler: &Sampler) -> Sampler {
    if sampler.coords.is_empty() {
        sampler.with_coords(chart.coords().to_vec())
    } else {
        sampler.clone()
    }
}

/// Outcome of an ideal-membership test.
#[derive(Clone, Debug)]
pub enum Membership {
    Member,
    /// The reduction got stuck; `remainder` is what was left.
    NotMember { remainder: DiffForm },
}

impl Membership {
    pub fn is_member(&self) -> bool {
        matches!(self, Membership::Member)
    }
}

/// An ideal of forms given by generators.
#[derive(Clone, Debug)]
pub struct CartanIdeal {
    chart: Arc<BundleChart>,
    generators: Vec<DiffForm>,
    closed: bool,
}

impl CartanIdeal {
    /// Validates the generators and checks closedness under `d`.
    pub fn new(generators: Vec<DiffForm>, sampler: &Sampler) -> Result<Self> {
        let Some(first) = generators.first() else {
            return Err(Error::Invalid("an ideal needs at least one generator".into()));
        };
        let chart = first.chart().clone();
        for g in &generators {
            if **g.chart() != *chart {
                return Err(Error::ChartMismatch);
            }
            if g.degree() == 0 {
                return Err(Error::DegreeMismatch("ideal generators must have degree at least 1".into()));
            }
            if g.is_zero() {
                return Err(Error::Invalid("zero form given as an ideal generator".into()));
            }
        }
        let mut ideal = CartanIdeal { chart, generators, closed: false };
        ideal.closed = ideal.generators.iter().all(|g| ideal.contains(&g.ext_d(), sampler).is_member());
        Ok(ideal)
    }

    pub fn chart(&self) -> &Arc<BundleChart> {
        &self.chart
    }

    pub fn generators(&self) -> &[DiffForm] {
        &self.generators
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Reduces `form` modulo the generators.
    ///
    /// The candidate reducers are the products `dx^J ∧ g`. Their coefficient
    /// columns are eliminated against `form`, taking as pivots only entries
    /// bounded away from zero at every sample point, so membership is over
    /// smooth functions on the box and not merely over the field of
    /// fractions. Whatever the pivots cannot cancel is the remainder.
    pub fn contains(&self, form: &DiffForm, sampler: &Sampler) -> Membership {
        if form.is_zero() {
            return Membership::Member;
        }
        if **form.chart() != *self.chart {
            return Membership::NotMember { remainder: form.clone() };
        }
        if self.generators.iter().any(|g| is_smooth_multiple(form, g)) {
            return Membership::Member;
        }
        let sampler = chart_sampler(&self.chart, sampler);
        let r = form.degree();
        let n = self.chart.dim();
        let mut products = Vec::new();
        for g in &self.generators {
            if g.degree() > r {
                continue;
            }
            for j in masks_of_size(n, r - g.degree()) {
                let mut dj = DiffForm::zero(&self.chart, r - g.degree());
                dj.add_mask(j, ScalarExpr::one());
                if let Ok(prod) = dj.wedge(g) {
                    if !prod.is_zero() {
                        products.push(prod);
                    }
                }
            }
        }
        let mut masks: Vec<MultiIndex> = form.terms().map(|(m, _)| m).collect();
        for prod in &products {
            masks.extend(prod.terms().map(|(m, _)| m));
        }
        masks.sort_unstable();
        masks.dedup();
        masks.reverse();
        let np = products.len();
        let m: SymMatrix = masks
            .iter()
            .map(|&mask| {
                let mut row: Vec<ScalarExpr> = products.iter().map(|prod| prod.coeff(mask)).collect();
                row.push(form.coeff(mask));
                row
            })
            .collect();
        let order: Vec<usize> = (0..np).collect();
        let red = linalg::rref_strict(&m, &order, &sampler);
        let mut rem = form.clone();
        for &(row, col) in &red.pivots {
            let c = &red.matrix[row][np];
            if !c.is_zero() {
                rem = &rem - &products[col].scale(c);
            }
        }
        let rem = rem.map_coeffs(|c| c.pythagorean());
        if rem.is_zero() {
            Membership::Member
        } else {
            Membership::NotMember { remainder: rem }
        }
    }

    /// Generators whose pullback under `phi` does not vanish, with the
    /// pulled-back forms.
    pub fn integral_residuals(&self, phi: &SectionMap) -> Result<Vec<(usize, DiffForm)>> {
        let mut out = Vec::new();
        for (i, g) in self.generators.iter().enumerate() {
            let pulled = phi.pullback(g)?;
            let pulled = pulled.map_coeffs(|c| c.pythagorean());
            if !pulled.is_zero() {
                out.push((i, pulled));
            }
        }
        Ok(out)
    }
}

fn is_smooth_multiple(form: &DiffForm, g: &DiffForm) -> bool {
    if form.degree() != g.degree() {
        return false;
    }
    let (Some((mf, cf)), Some((mg, cg))) = (form.terms().last(), g.terms().last()) else {
        return false;
    };
    if mf != mg {
        return false;
    }
    let Some(ratio) = cf.checked_div(cg) else { return false };
    ratio.is_polynomial() && form.equiv(&g.scale(&ratio))
}

/// All masks over `n` positions with exactly `size` bits set, ascending.
pub fn masks_of_size(n: usize, size: usize) -> Vec<MultiIndex> {
    if size > n {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(size);
    fn rec(start: usize, n: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
        if cur.len() == size {
            out.push(cur.iter().fold(0, |m, i| m | (1 << i)));
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, size, cur, out);
            cur.pop();
        }
    }
    rec(0, n, size, &mut cur, &mut out);
    out.sort_unstable();
    out
}

/// Adds `dg` for every generator whose differential is not already in the
/// ideal. The result is closed under `d`.
pub fn complete_to_differential(j: &CartanIdeal, sampler: &Sampler) -> CartanIdeal {
    let mut out = CartanIdeal { chart: j.chart.clone(), generators: j.generators.clone(), closed: false };
    for g in &j.generators {
        let dg = g.ext_d();
        if dg.is_zero() || out.contains(&dg, sampler).is_member() {
            continue;
        }
        out.generators.push(dg);
    }
    out.closed = true;
    out
}

/// Result of testing a section against an ideal.
#[derive(Clone, Debug)]
pub struct IntegralReport {
    pub integral: bool,
    /// `(generator index, pulled-back form)` for each generator that does not
    /// pull back to zero.
    pub residuals: Vec<(usize, DiffForm)>,
}

pub fn is_integral_section(j: &CartanIdeal, phi: &SectionMap) -> Result<IntegralReport> {
    if **phi.chart() != *j.chart {
        return Err(Error::ChartMismatch);
    }
    let residuals = j.integral_residuals(phi)?;
    Ok(IntegralReport { integral: residuals.is_empty(), residuals })
}

/// A module of vector fields of constant rank, with the sampling record that
/// certified it.
#[derive(Clone, Debug)]
pub struct Distribution {
    chart: Arc<BundleChart>,
    basis: Vec<VecField>,
    sampler: Sampler,
    certification: Certification,
}

impl Distribution {
    /// Wraps a basis after certifying that it is independent at every sample.
    pub fn from_basis(chart: &Arc<BundleChart>, basis: Vec<VecField>, sampler: &Sampler) -> Result<Self> {
        for b in &basis {
            if **b.chart() != **chart {
                return Err(Error::ChartMismatch);
            }
        }
        let sampler = chart_sampler(chart, sampler);
        let m: SymMatrix = basis.iter().map(|b| b.comps().to_vec()).collect();
        let certification = if basis.is_empty() {
            Certification { seed: sampler.seed, samples: 0, evaluated: 0, expected: 0, ranks: Vec::new() }
        } else {
            linalg::certify_rank(&m, basis.len(), &sampler)?
        };
        Ok(Distribution { chart: chart.clone(), basis, sampler, certification })
    }

    pub fn chart(&self) -> &Arc<BundleChart> {
        &self.chart
    }

    pub fn basis(&self) -> &[VecField] {
        &self.basis
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn sampler(&self) -> &Sampler {
        &self.sampler
    }

    pub fn certification(&self) -> &Certification {
        &self.certification
    }

    /// Matrix with one row per basis field.
    pub fn matrix(&self) -> SymMatrix {
        self.basis.iter().map(|b| b.comps().to_vec()).collect()
    }
}

/// Coefficient matrix of `Y ↦ ι_Y form`: one row per `(q−1)`-index that
/// can occur, one column per coordinate.
pub fn contraction_matrix(form: &DiffForm) -> SymMatrix {
    let n = form.chart().dim();
    let mut rows: BTreeMap<MultiIndex, Vec<ScalarExpr>> = BTreeMap::new();
    for (m, c) in form.terms() {
        for (r, i) in mask_positions(m).into_iter().enumerate() {
            let row = rows.entry(m & !(1 << i)).or_insert_with(|| vec![ScalarExpr::zero(); n]);
            let t = if r % 2 == 1 { -c } else { c.clone() };
            row[i] = &row[i] + &t;
        }
    }
    rows.into_values().filter(|r| r.iter().any(|e| !e.is_zero())).collect()
}

/// Column order used when solving for vector fields: fiber coordinates
/// first so that base components end up free.
pub fn fiber_first_order(chart: &BundleChart) -> Vec<usize> {
    chart.fiber_indices().chain(chart.base_indices()).collect()
}

fn solve_kernel(chart: &Arc<BundleChart>, m: &SymMatrix, col_order: &[usize], sampler: &Sampler) -> Result<Distribution> {
    let sampler = chart_sampler(chart, sampler);
    let n = chart.dim();
    if m.is_empty() {
        let basis = (0..n).map(|i| VecField::coordinate(chart, chart.name(i)).expect("own coordinate")).collect();
        return Distribution::from_basis(chart, basis, &sampler);
    }
    let (r, ns) = linalg::nullspace(m, n, col_order, &sampler);
    linalg::certify_rank(m, r.rank(), &sampler)?;
    let basis = ns.into_iter().map(|v| VecField::new(chart, v).expect("chart dimension")).collect();
    Distribution::from_basis(chart, basis, &sampler)
}

/// The module `N(η)` of vector fields `Y` with `ι_Y η = 0`.
pub fn annihilator(eta: &DiffForm, sampler: &Sampler) -> Result<Distribution> {
    if eta.is_zero() {
        return Err(Error::ZeroEta);
    }
    let chart = eta.chart();
    solve_kernel(chart, &contraction_matrix(eta), &fiber_first_order(chart), sampler)
}

/// Joint kernel of contraction with every generator of an equal-degree
/// ideal.
pub fn characteristic_distribution(j: &CartanIdeal, sampler: &Sampler) -> Result<Distribution> {
    let d = j.generators[0].degree();
    if j.generators.iter().any(|g| g.degree() != d) {
        return Err(Error::UnequalGeneratorDegrees);
    }
    let mut m = Vec::new();
    for g in &j.generators {
        m.extend(contraction_matrix(g));
    }
    solve_kernel(&j.chart, &m, &fiber_first_order(&j.chart), sampler)
}

/// Vertical fields in `N(η)`, solved over the fiber components only.
pub fn vertical_annihilator(eta: &DiffForm, sampler: &Sampler) -> Result<Distribution> {
    let chart = eta.chart();
    let sampler = chart_sampler(chart, sampler);
    let full = contraction_matrix(eta);
    let fib: Vec<usize> = chart.fiber_indices().collect();
    let m: SymMatrix = full.iter().map(|row| fib.iter().map(|&i| row[i].clone()).collect()).collect();
    let order: Vec<usize> = (0..fib.len()).collect();
    let (r, ns) = linalg::nullspace(&m, fib.len(), &order, &sampler);
    if !m.is_empty() {
        linalg::certify_rank(&m, r.rank(), &sampler)?;
    }
    let basis = ns
        .into_iter()
        .map(|v| {
            let mut comps = vec![ScalarExpr::zero(); chart.k()];
            comps.extend(v);
            VecField::new(chart, comps).expect("chart dimension")
        })
        .collect();
    Distribution::from_basis(chart, basis, &sampler)
}

/// Verdict of a Frobenius test.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Frobenius {
    Integrable,
    NotIntegrable {
        pair: (usize, usize),
        witness: Point,
        residual: f64,
    },
    /// Residual is not canonically zero but is below `1e-9` at every sample.
    Unknown {
        pair: (usize, usize),
        max_residual: f64,
    },
}

impl Frobenius {
    pub fn is_integrable(&self) -> bool {
        matches!(self, Frobenius::Integrable)
    }
}

/// Distance from `z` to the column span of `q`, relative to `max(1, |z|)`.
fn span_residual(basis: &DMatrix<f64>, z: &DVector<f64>) -> f64 {
    let scale = z.norm().max(1.0);
    if basis.ncols() == 0 {
        return z.norm() / scale;
    }
    let svd = basis.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.max();
    let mut proj = DVector::zeros(z.len());
    for (j, s) in svd.singular_values.iter().enumerate() {
        if *s > linalg::RANK_TOLERANCE * smax.max(1.0) {
            let col = u.column(j);
            proj += col * col.dot(z);
        }
    }
    (z - proj).norm() / scale
}

fn field_vector(x: &VecField, p: &SamplePoint) -> Result<DVector<f64>> {
    let v = x.comps().iter().map(|c| if c.is_zero() { Ok(0.0) } else { c.eval(p) }).collect::<Result<Vec<_>>>()?;
    Ok(DVector::from_vec(v))
}

/// Checks that every bracket of basis fields lies in the span of the basis.
pub fn frobenius_check(d: &Distribution, sampler: &Sampler) -> Result<Frobenius> {
    let sampler = chart_sampler(&d.chart, sampler);
    let q = d.rank();
    let points = sampler.points();
    let mut unknown: Option<((usize, usize), f64)> = None;
    for i in 0..q {
        for j in (i + 1)..q {
            let z = d.basis[i].bracket(&d.basis[j])?;
            if z.is_zero() {
                continue;
            }
            // Columns: basis fields, then the bracket; rows: coordinates.
            let mut cols: Vec<Vec<ScalarExpr>> = d.matrix();
            cols.push(z.comps().to_vec());
            let m = linalg::transpose(&cols);
            let order: Vec<usize> = (0..q).collect();
            let r = linalg::rref(&m, &order, &sampler);
            let pivot_rows: Vec<usize> = r.pivots.iter().map(|(row, _)| *row).collect();
            let symbolic_zero = (0..m.len())
                .filter(|row| !pivot_rows.contains(row))
                .all(|row| r.matrix[row][q].pythagorean().is_zero());
            if symbolic_zero {
                continue;
            }
            let keys = linalg::matrix_keys(&cols);
            let mut worst = 0.0f64;
            for p in &points {
                let Ok(zv) = field_vector(&z, p) else { continue };
                let Ok(bm) = linalg::eval_matrix(&linalg::transpose(&d.matrix()), p) else { continue };
                let res = span_residual(&bm, &zv);
                if res > ZERO_THRESHOLD {
                    return Ok(Frobenius::NotIntegrable { pair: (i, j), witness: p.materialize(&keys), residual: res });
                }
                worst = worst.max(res);
            }
            if unknown.is_none() {
                unknown = Some(((i, j), worst));
            }
        }
    }
    Ok(match unknown {
        None => Frobenius::Integrable,
        Some((pair, max_residual)) => Frobenius::Unknown { pair, max_residual },
    })
}

/// One-forms whose joint kernel is exactly the distribution: the Euclidean
/// duals of a basis of the orthogonal complement.
pub fn complete_ideal_generators(d: &Distribution) -> Result<Vec<DiffForm>> {
    let chart = &d.chart;
    let n = chart.dim();
    if d.rank() == 0 {
        return Ok((0..n).map(|i| DiffForm::d(chart, chart.name(i)).expect("own coordinate")).collect());
    }
    let m = d.matrix();
    let order: Vec<usize> = chart.base_indices().chain(chart.fiber_indices()).collect();
    let (_, ns) = linalg::nullspace(&m, n, &order, &d.sampler);
    linalg::certify_rank(&ns, n - d.rank(), &d.sampler)?;
    Ok(ns
        .into_iter()
        .map(|v| {
            let mut f = DiffForm::zero(chart, 1);
            for (i, c) in v.into_iter().enumerate() {
                f.add_mask(1 << i, c);
            }
            f
        })
        .collect())
}

/// Outcome of comparing two spans pointwise.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpanComparison {
    pub equal: bool,
    pub evaluated: usize,
    pub witness: Option<Point>,
}

/// Whether two families of fields span the same module at every sample.
pub fn span_equal(a: &[VecField], b: &[VecField], sampler: &Sampler) -> SpanComparison {
    let ma: SymMatrix = a.iter().map(|x| x.comps().to_vec()).collect();
    let mb: SymMatrix = b.iter().map(|x| x.comps().to_vec()).collect();
    let both: SymMatrix = ma.iter().chain(&mb).cloned().collect();
    let keys = linalg::matrix_keys(&both);
    let mut evaluated = 0;
    for p in sampler.points() {
        let (Ok(ea), Ok(eb), Ok(eab)) =
            (linalg::eval_matrix(&ma, &p), linalg::eval_matrix(&mb, &p), linalg::eval_matrix(&both, &p))
        else {
            continue;
        };
        evaluated += 1;
        let (ra, rb, rab) = (numeric_rank_or_zero(&ea), numeric_rank_or_zero(&eb), numeric_rank_or_zero(&eab));
        if ra != rb || ra != rab {
            return SpanComparison { equal: false, evaluated, witness: Some(p.materialize(&keys)) };
        }
    }
    SpanComparison { equal: evaluated > 0, evaluated, witness: None }
}

fn numeric_rank_or_zero(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 {
        0
    } else {
        linalg::numeric_rank(m)
    }
}
