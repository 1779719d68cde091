//! Linear algebra over the expression field, with numeric rank
//! certification at sample points.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Point, Result};
use crate::sampling::{SamplePoint, Sampler};
use crate::symexpr::{Env, ScalarExpr, ZeroTest, ZERO_THRESHOLD};

pub type SymMatrix = Vec<Vec<ScalarExpr>>;

/// Relative singular-value cutoff used for every numeric rank.
pub const RANK_TOLERANCE: f64 = 1e-9;

pub fn zeros(rows: usize, cols: usize) -> SymMatrix {
    vec![vec![ScalarExpr::zero(); cols]; rows]
}

/// Determinant by cofactor expansion (division free, so exact for any
/// entries).
pub fn det(m: &[Vec<ScalarExpr>]) -> ScalarExpr {
    let n = m.len();
    match n {
        0 => ScalarExpr::one(),
        1 => m[0][0].clone(),
        2 => &m[0][0] * &m[1][1] - &m[0][1] * &m[1][0],
        _ => {
            let mut acc = ScalarExpr::zero();
            for j in 0..n {
                if m[0][j].is_zero() {
                    continue;
                }
                let minor: SymMatrix = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|(c, _)| *c != j)
                            .map(|(_, e)| e.clone())
                            .collect()
                    })
                    .collect();
                let t = &m[0][j] * det(&minor);
                acc = if j % 2 == 0 { acc + t } else { acc - t };
            }
            acc
        }
    }
}

#[derive(Clone, Debug)]
pub struct Rref {
    pub matrix: SymMatrix,
    /// `(row, column)` of each pivot, in the order they were chosen.
    pub pivots: Vec<(usize, usize)>,
    /// Columns whose only nonzero candidates could not be certified.
    pub uncertain: Vec<usize>,
}

impl Rref {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn pivot_columns(&self) -> Vec<usize> {
        self.pivots.iter().map(|(_, c)| *c).collect()
    }
}

fn term_count(e: &ScalarExpr) -> usize {
    e.num().terms().count() + e.den().terms().count()
}

fn magnitude_at(e: &ScalarExpr, p: &SamplePoint) -> f64 {
    e.eval(p).map(f64::abs).unwrap_or(0.0)
}

/// Reduced row echelon form visiting columns in `col_order`.
///
/// In each column the pivot is a certified-nonzero candidate. Candidates
/// vanishing at the sampler's reference point come last; among the rest
/// the one with the fewest terms wins, then the one with the largest
/// magnitude at the reference point, then the earlier row.
pub fn rref(m: &SymMatrix, col_order: &[usize], sampler: &Sampler) -> Rref {
    rref_by(m, col_order, sampler, &|e| e.zero_test(sampler))
}

/// Like [`rref`], but a pivot must be bounded away from zero at every sample
/// point, so the elimination is valid over smooth functions on the box.
pub fn rref_strict(m: &SymMatrix, col_order: &[usize], sampler: &Sampler) -> Rref {
    let points = sampler.points();
    rref_by(m, col_order, sampler, &|e| {
        if e.as_constant().is_some() {
            return ZeroTest::NonZero(Point::new());
        }
        let mut unknown = false;
        for p in &points {
            match e.eval(p) {
                Ok(v) if v.abs() > ZERO_THRESHOLD => {}
                Ok(_) => return ZeroTest::Zero,
                Err(_) => unknown = true,
            }
        }
        if unknown {
            ZeroTest::Unknown
        } else {
            ZeroTest::NonZero(Point::new())
        }
    })
}

/// Preferred pivot row for column `c` among the unused rows, and whether
/// some candidate could not be decided.
fn choose_pivot(
    a: &SymMatrix,
    used: &[bool],
    c: usize,
    reference: &SamplePoint,
    test: &dyn Fn(&ScalarExpr) -> ZeroTest,
) -> (Option<usize>, bool) {
    let mut best: Option<(usize, (bool, usize), f64)> = None;
    let mut saw_unknown = false;
    for r in 0..a.len() {
        if used[r] || a[r][c].is_zero() {
            continue;
        }
        match test(&a[r][c]) {
            ZeroTest::NonZero(_) => {
                let v = magnitude_at(&a[r][c], reference);
                let size = (v <= ZERO_THRESHOLD, term_count(&a[r][c]));
                if best.is_none_or(|(_, bs, bv)| size < bs || (size == bs && v > bv)) {
                    best = Some((r, size, v));
                }
            }
            ZeroTest::Unknown => saw_unknown = true,
            ZeroTest::Zero => {}
        }
    }
    (best.map(|(r, _, _)| r), saw_unknown)
}

fn rref_by(m: &SymMatrix, col_order: &[usize], sampler: &Sampler, test: &dyn Fn(&ScalarExpr) -> ZeroTest) -> Rref {
    let mut a = m.clone();
    let rows = a.len();
    let reference = sampler.reference();
    let mut used = vec![false; rows];
    let mut pivots = Vec::new();
    let mut uncertain = Vec::new();
    for &c in col_order {
        let (best, saw_unknown) = choose_pivot(&a, &used, c, &reference, test);
        let Some(pr) = best else {
            if saw_unknown {
                uncertain.push(c);
            }
            continue;
        };
        used[pr] = true;
        let inv = a[pr][c].recip().expect("certified pivot");
        a[pr] = a[pr].iter().map(|e| e * &inv).collect();
        for r in 0..rows {
            if r == pr || a[r][c].is_zero() {
                continue;
            }
            let f = a[r][c].clone();
            let prow = a[pr].clone();
            for (x, y) in a[r].iter_mut().zip(prow.iter()) {
                if !y.is_zero() {
                    *x = &*x - &f * y;
                }
            }
        }
        pivots.push((pr, c));
    }
    Rref { matrix: a, pivots, uncertain }
}

/// Multiplies `v` by the denominators of its entries so every entry
/// becomes a polynomial where possible.
pub fn clear_denominators(v: &[ScalarExpr]) -> Vec<ScalarExpr> {
    let mut out = v.to_vec();
    let mut seen = BTreeSet::new();
    for i in 0..out.len() {
        let d = out[i].den().clone();
        if d.is_one() || !seen.insert(d.clone()) {
            continue;
        }
        let ds = ScalarExpr::from_poly(d);
        out = out.iter().map(|e| e * &ds).collect();
    }
    out
}

/// Basis of the right nullspace, one vector per non-pivot column (in
/// `col_order` order), with denominators cleared.
pub fn nullspace(m: &SymMatrix, ncols: usize, col_order: &[usize], sampler: &Sampler) -> (Rref, Vec<Vec<ScalarExpr>>) {
    let r = rref(m, col_order, sampler);
    let basis = kernel_vectors(&r, ncols, col_order);
    (r, basis)
}

/// One kernel vector per non-pivot column of a reduced matrix.
fn kernel_vectors(r: &Rref, ncols: usize, col_order: &[usize]) -> Vec<Vec<ScalarExpr>> {
    let pivot_cols: BTreeSet<usize> = r.pivot_columns().into_iter().collect();
    let mut basis = Vec::new();
    for &f in col_order {
        if pivot_cols.contains(&f) {
            continue;
        }
        let mut v = vec![ScalarExpr::zero(); ncols];
        v[f] = ScalarExpr::one();
        for &(pr, pc) in &r.pivots {
            v[pc] = -&r.matrix[pr][f];
        }
        basis.push(clear_denominators(&v));
    }
    basis
}

pub fn eval_matrix(m: &[Vec<ScalarExpr>], env: &dyn Env) -> Result<DMatrix<f64>> {
    let rows = m.len();
    let cols = m.first().map(|r| r.len()).unwrap_or(0);
    let mut out = DMatrix::zeros(rows, cols);
    for (i, row) in m.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            if !e.is_zero() {
                out[(i, j)] = e.eval(env)?;
            }
        }
    }
    Ok(out)
}

pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    s
}

pub fn numeric_rank(m: &DMatrix<f64>) -> usize {
    let s = singular_values(m);
    let smax = s.first().copied().unwrap_or(0.0);
    let tol = RANK_TOLERANCE * smax.max(1.0);
    s.iter().filter(|v| **v > tol).count()
}

/// Record of a sampled rank certification.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certification {
    pub seed: u64,
    pub samples: usize,
    pub evaluated: usize,
    pub expected: usize,
    pub ranks: Vec<usize>,
}

pub fn matrix_keys(m: &[Vec<ScalarExpr>]) -> BTreeSet<String> {
    let mut keys = BTreeSet::new();
    for row in m {
        for e in row {
            keys.extend(e.eval_keys());
        }
    }
    keys
}

/// Checks that the numeric rank of `m` equals `expected` at every sample
/// point where it can be evaluated.
pub fn certify_rank(m: &SymMatrix, expected: usize, sampler: &Sampler) -> Result<Certification> {
    let keys = matrix_keys(m);
    let pts = sampler.points();
    let mut ranks = Vec::with_capacity(pts.len());
    let mut bad_ranks = Vec::new();
    let mut witnesses: Vec<Point> = Vec::new();
    for pt in &pts {
        let Ok(a) = eval_matrix(m, pt) else { continue };
        let r = numeric_rank(&a);
        ranks.push(r);
        if r != expected && witnesses.len() < 8 {
            bad_ranks.push(r);
            witnesses.push(pt.materialize(&keys));
        }
    }
    if !witnesses.is_empty() {
        let mut all = vec![expected];
        all.extend(bad_ranks);
        return Err(Error::NonConstantRank { ranks: all, witnesses });
    }
    Ok(Certification {
        seed: sampler.seed,
        samples: pts.len(),
        evaluated: ranks.len(),
        expected,
        ranks,
    })
}

/// Numeric rank of `m` at each sample point (failed evaluations skipped).
pub fn sampled_ranks(m: &SymMatrix, sampler: &Sampler) -> Vec<(usize, SamplePoint)> {
    sampler
        .points()
        .into_iter()
        .filter_map(|pt| eval_matrix(m, &pt).ok().map(|a| (numeric_rank(&a), pt)))
        .collect()
}

pub fn transpose(m: &[Vec<ScalarExpr>]) -> SymMatrix {
    let rows = m.len();
    let cols = m.first().map(|r| r.len()).unwrap_or(0);
    (0..cols).map(|j| (0..rows).map(|i| m[i][j].clone()).collect()).collect()
}
