//! Decomposable forms `η = α_1 ∧ ... ∧ α_{k+1}`: classification and
//! reduction of the factors to normal form.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Point, Result};
use crate::forms::{BundleChart, DiffForm, VecField};
use crate::ideals::chart_sampler;
use crate::linalg::{self, SymMatrix};
use crate::sampling::Sampler;
use crate::symexpr::ScalarExpr;

/// Record of a reduction to normal form.
///
/// Normalized factors are `α_j = dz^j + B_jm dx^m + G_jm dw^m` for the
/// pivot rows followed by `α = C_m dx^m` for the remaining rows. The pivot
/// fibers take the `z` role and every other fiber the `w` role.
#[derive(Clone, Debug)]
pub struct NormalForm {
    pub pivot_fibers: Vec<String>,
    pub residual_fibers: Vec<String>,
    /// Original row that supplied each normalized row.
    pub row_sources: Vec<usize>,
    /// `∧ normalized = multiplier · ∧ original`.
    pub multiplier: ScalarExpr,
    pub b: SymMatrix,
    pub c: SymMatrix,
    pub g: SymMatrix,
}

/// The one-form factors of a decomposable `(k+1)`-form.
#[derive(Clone, Debug)]
pub struct FactorSet {
    chart: Arc<BundleChart>,
    alphas: Vec<DiffForm>,
    normal: Option<NormalForm>,
}

impl FactorSet {
    pub fn new(alphas: Vec<DiffForm>) -> Result<Self> {
        let Some(first) = alphas.first() else {
            return Err(Error::DegreeMismatch("no factors given".into()));
        };
        let chart = first.chart().clone();
        for a in &alphas {
            if **a.chart() != *chart {
                return Err(Error::ChartMismatch);
            }
            if a.degree() != 1 {
                return Err(Error::DegreeMismatch(format!("factor of degree {} given, expected one-forms", a.degree())));
            }
        }
        if alphas.len() != chart.k() + 1 {
            return Err(Error::DegreeMismatch(format!(
                "{} factors given, a base of dimension {} needs {}",
                alphas.len(),
                chart.k(),
                chart.k() + 1
            )));
        }
        Ok(FactorSet { chart, alphas, normal: None })
    }

    pub fn chart(&self) -> &Arc<BundleChart> {
        &self.chart
    }

    pub fn alphas(&self) -> &[DiffForm] {
        &self.alphas
    }

    pub fn normal(&self) -> Option<&NormalForm> {
        self.normal.as_ref()
    }

    pub fn eta(&self) -> DiffForm {
        DiffForm::wedge_all(&self.alphas).expect("factors share a chart")
    }

    /// Rows are factors, columns are chart coordinates.
    pub fn coefficient_matrix(&self) -> SymMatrix {
        self.alphas
            .iter()
            .map(|a| (0..self.chart.dim()).map(|i| a.coeff(1 << i)).collect())
            .collect()
    }

    /// Fiber block `L`.
    pub fn l_matrix(&self) -> SymMatrix {
        let fib: Vec<usize> = self.chart.fiber_indices().collect();
        self.coefficient_matrix().into_iter().map(|r| fib.iter().map(|&i| r[i].clone()).collect()).collect()
    }

    /// Base block `M`.
    pub fn m_matrix(&self) -> SymMatrix {
        let k = self.chart.k();
        self.coefficient_matrix().into_iter().map(|r| r[..k].to_vec()).collect()
    }

    /// Number of normalized rows with a fiber pivot.
    pub fn pivot_count(&self) -> Option<usize> {
        self.normal.as_ref().map(|n| n.pivot_fibers.len())
    }
}

/// Nondegeneracy, compatibility and adaptedness of a factor set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Def8 {
    pub nondegenerate: bool,
    pub compatible: bool,
    pub adapted: bool,
    /// Distinct sampled ranks of the fiber block.
    pub l_ranks: Vec<usize>,
    /// Dimension of the vertical part of the annihilator, when constant.
    pub vertical_kernel: Option<usize>,
    pub witnesses: Vec<Point>,
}

pub fn classify(fs: &FactorSet, sampler: &Sampler) -> Def8 {
    let sampler = chart_sampler(&fs.chart, sampler);
    let k1 = fs.alphas.len();
    let mut witnesses = Vec::new();
    let nondegenerate = match linalg::certify_rank(&fs.coefficient_matrix(), k1, &sampler) {
        Ok(_) => true,
        Err(Error::NonConstantRank { witnesses: w, .. }) => {
            witnesses.extend(w);
            false
        }
        Err(_) => false,
    };
    let l = fs.l_matrix();
    let sampled = linalg::sampled_ranks(&l, &sampler);
    let ranks: BTreeSet<usize> = sampled.iter().map(|(r, _)| *r).collect();
    let compatible = nondegenerate && ranks.len() == 1;
    if ranks.len() > 1 {
        let keys = linalg::matrix_keys(&l);
        let typical = *ranks.iter().max().expect("nonempty");
        witnesses.extend(sampled.iter().filter(|(r, _)| *r != typical).take(4).map(|(_, p)| p.materialize(&keys)));
    }
    let fibers = fs.chart.fibers().len();
    let vertical_kernel = if ranks.len() == 1 { ranks.first().map(|r| fibers - r) } else { None };
    let adapted = compatible && vertical_kernel == Some(0);
    Def8 { nondegenerate, compatible, adapted, l_ranks: ranks.into_iter().collect(), vertical_kernel, witnesses }
}

/// Row-reduces the factors so the pivot block of `L` becomes the identity.
pub fn normalize(fs: &FactorSet, sampler: &Sampler) -> Result<FactorSet> {
    let sampler = chart_sampler(&fs.chart, sampler);
    let chart = &fs.chart;
    let k = chart.k();
    let k1 = fs.alphas.len();
    let eta = fs.eta();
    if eta.is_zero() {
        return Err(Error::ZeroEta);
    }
    let a = fs.coefficient_matrix();
    let fib: Vec<usize> = chart.fiber_indices().collect();
    let red = linalg::rref(&a, &fib, &sampler);
    let expected = fib.len().min(k1);
    if red.rank() < expected {
        return Err(Error::RankDeficientL { rank: red.rank(), expected });
    }
    linalg::certify_rank(&fs.l_matrix(), red.rank(), &sampler)?;

    let pivot_cols: Vec<usize> = red.pivot_columns();
    let pivot_rows: Vec<usize> = red.pivots.iter().map(|(r, _)| *r).collect();
    let c_rows: Vec<usize> = (0..k1).filter(|r| !pivot_rows.contains(r)).collect();
    let residual_cols: Vec<usize> = fib.iter().copied().filter(|c| !pivot_cols.contains(c)).collect();
    for &r in &c_rows {
        if fib.iter().any(|&c| !red.matrix[r][c].is_zero()) {
            return Err(Error::Invalid("could not clear the fiber block of a non-pivot factor".into()));
        }
    }
    let pivot_fibers: Vec<String> = pivot_cols.iter().map(|&c| chart.name(c).to_string()).collect();
    let residual_fibers: Vec<String> = residual_cols.iter().map(|&c| chart.name(c).to_string()).collect();
    let new_chart = if pivot_fibers == chart.fiber_z() && residual_fibers == chart.fiber_w() {
        chart.clone()
    } else {
        BundleChart::from_names(chart.base().to_vec(), pivot_fibers.clone(), residual_fibers.clone())?
    };

    let row_sources: Vec<usize> = pivot_rows.iter().chain(&c_rows).copied().collect();
    let alphas: Vec<DiffForm> = row_sources
        .iter()
        .map(|&r| {
            let mut f = DiffForm::zero(&new_chart, 1);
            for (i, e) in red.matrix[r].iter().enumerate() {
                let j = new_chart.index_of(chart.name(i)).expect("same coordinates");
                f.add_mask(1 << j, e.clone());
            }
            f
        })
        .collect();
    let pick = |rows: &[usize], cols: &[usize]| -> SymMatrix {
        rows.iter().map(|&r| cols.iter().map(|&c| red.matrix[r][c].clone()).collect()).collect()
    };
    let base: Vec<usize> = (0..k).collect();
    let b = pick(&pivot_rows, &base);
    let g = pick(&pivot_rows, &residual_cols);
    let c = pick(&c_rows, &base);

    let new_eta = DiffForm::wedge_all(&alphas)?;
    let old_eta = eta.to_chart(&new_chart)?;
    let (mask, c0) = old_eta.terms().next().map(|(m, c)| (m, c.clone())).expect("nonzero");
    let multiplier = new_eta.coeff(mask).checked_div(&c0).ok_or(Error::ZeroEta)?;
    if !new_eta.equiv(&old_eta.scale(&multiplier)) {
        return Err(Error::Invalid("normalized factors do not reproduce the original form".into()));
    }
    Ok(FactorSet {
        chart: new_chart,
        alphas,
        normal: Some(NormalForm { pivot_fibers, residual_fibers, row_sources, multiplier, b, c, g }),
    })
}

/// `χ_s = (−1)^{s−1} α_1 ∧ ... ∧ α̂_s ∧ ... ∧ α_{k+1}`.
pub fn chi_forms(fs: &FactorSet) -> Result<Vec<DiffForm>> {
    if fs.normal.is_none() {
        return Err(Error::NormalFormRequired);
    }
    let n = fs.alphas.len();
    (0..n)
        .map(|s| {
            let rest: Vec<DiffForm> =
                fs.alphas.iter().enumerate().filter(|(i, _)| *i != s).map(|(_, a)| a.clone()).collect();
            let w = DiffForm::wedge_all(&rest)?;
            Ok(if s % 2 == 1 { -w } else { w })
        })
        .collect()
}

/// `ι_{∂/∂z^a} η` for every pivot fiber `z^a` of a normalized set.
pub fn pivot_contractions(fs: &FactorSet) -> Result<Vec<DiffForm>> {
    let nf = fs.normal.as_ref().ok_or(Error::NormalFormRequired)?;
    let eta = fs.eta();
    nf.pivot_fibers.iter().map(|z| eta.interior(&VecField::coordinate(&fs.chart, z)?)).collect()
}

/// `ι_{∂/∂w^m} η` for every residual fiber of a normalized set.
pub fn residual_contractions(fs: &FactorSet) -> Result<Vec<DiffForm>> {
    let nf = fs.normal.as_ref().ok_or(Error::NormalFormRequired)?;
    let eta = fs.eta();
    nf.residual_fibers.iter().map(|w| eta.interior(&VecField::coordinate(&fs.chart, w)?)).collect()
}
