//! Variational problems: the variational module `Ψ_a = ι_{V_a} dθ`,
//! classification of the principle and the critical-section equations.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::decomp::{self, Def8, FactorSet};
use crate::error::{Error, Result};
use crate::forms::{formal_pullback, jet_name, BundleChart, DiffForm, SectionMap, VecField};
use crate::ideals::{self, chart_sampler, CartanIdeal, Distribution};
use crate::linalg::{self, SymMatrix};
use crate::sampling::Sampler;
use crate::symexpr::ScalarExpr;

/// How the problem was specified.
#[derive(Clone, Debug)]
pub enum ProblemInput {
    Theta(DiffForm),
    Factors(Vec<DiffForm>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Properness {
    Proper,
    NotProper,
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeCase {
    /// `k = n − 2`.
    MaximalDegree,
    /// `n = 2k + 1`.
    MaximallyCharacteristic,
    /// `k + 2 < n < 2k + 1`.
    Intermediate,
    /// A vertical field annihilates `dθ` (always so for decomposable `dθ`
    /// when `n > 2k + 1`).
    NonProper,
    /// `n = k + 1`: `dθ` is a volume form.
    TopDegree,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Classification {
    pub proper: Properness,
    pub degree_case: DegreeCase,
    pub n: usize,
    pub k: usize,
    /// `2k + 1 − n`.
    pub h: i64,
    /// Rank of `N(dθ)`.
    pub q: usize,
    /// Rank of the transversal part `q − dim(N(dθ) ∩ V(π))`.
    pub r: usize,
    pub def8: Option<Def8>,
    /// Why the factors could not be brought to normal form, if they could
    /// not.
    pub normal_form_error: Option<String>,
}

/// Result of the properness test.
#[derive(Clone, Debug)]
pub struct ProperReport {
    pub status: Properness,
    /// Basis of `N(dθ) ∩ V(π)`.
    pub vertical: Vec<VecField>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EquationSource {
    /// Signed minors of the matrix `P` of normalized factors.
    Minors,
    /// The two quasilinear equations of the maximal-degree case.
    Quasilinear,
}

/// The critical-section equations `Δ_a = 0` in jet variables.
#[derive(Clone, Debug)]
pub struct CriticalEquations {
    pub source: EquationSource,
    /// Fiber coordinate each equation belongs to.
    pub fibers: Vec<String>,
    pub deltas: Vec<ScalarExpr>,
    /// Coefficient of `ω` in the formal pullback of each `Ψ_a`, computed
    /// independently.
    pub pullback_coefficients: Vec<ScalarExpr>,
    /// Constant `κ` with pullback coefficient `= κ · Δ_a` for every `a`
    /// (pullbacks of the normalized form).
    pub minor_constant: Option<ScalarExpr>,
    /// `∧ normalized factors = multiplier · dθ`.
    pub multiplier: ScalarExpr,
    pub consistent: bool,
}

/// Result of testing a candidate section.
#[derive(Clone, Debug)]
pub struct CriticalReport {
    pub critical: bool,
    /// Coefficient of `ω` in `φ*(Ψ_a)`, one per vertical basis field.
    pub residuals: Vec<ScalarExpr>,
    /// `Δ_a` with the section's jets substituted.
    pub delta_values: Vec<ScalarExpr>,
    /// Whether the two computations agree.
    pub consistent: bool,
}

#[derive(Clone, Debug)]
pub struct VariationalProblem {
    chart: Arc<BundleChart>,
    theta: Option<DiffForm>,
    eta: DiffForm,
    factors: Option<FactorSet>,
    normalized: Option<FactorSet>,
    vertical: Vec<VecField>,
    psi: Vec<DiffForm>,
    classification: Classification,
    sampler: Sampler,
}

fn coordinate_fields(chart: &Arc<BundleChart>, names: &[String]) -> Vec<VecField> {
    names.iter().map(|n| VecField::coordinate(chart, n).expect("chart coordinate")).collect()
}

impl VariationalProblem {
    pub fn build(input: ProblemInput, sampler: &Sampler) -> Result<Self> {
        let (chart, theta, eta, factors) = match input {
            ProblemInput::Theta(theta) => {
                let chart = theta.chart().clone();
                if theta.degree() != chart.k() {
                    return Err(Error::DegreeMismatch(format!(
                        "θ has degree {} on a base of dimension {}",
                        theta.degree(),
                        chart.k()
                    )));
                }
                let eta = theta.ext_d();
                (chart, Some(theta), eta, None)
            }
            ProblemInput::Factors(alphas) => {
                let fs = FactorSet::new(alphas)?;
                (fs.chart().clone(), None, fs.eta(), Some(fs))
            }
        };
        if eta.is_zero() {
            return Err(Error::ZeroEta);
        }
        let sampler = chart_sampler(&chart, sampler);
        let (normalized, normal_form_error) = match &factors {
            Some(fs) => match decomp::normalize(fs, &sampler) {
                Ok(n) => (Some(n), None),
                Err(e) => (None, Some(e.to_string())),
            },
            None => (None, None),
        };
        let def8 = factors.as_ref().map(|fs| decomp::classify(fs, &sampler));
        let vertical = coordinate_fields(&chart, chart.fibers());
        let psi = vertical.iter().map(|v| eta.interior(v)).collect::<Result<Vec<_>>>()?;
        let placeholder = Classification {
            proper: Properness::Unknown,
            degree_case: DegreeCase::TopDegree,
            n: chart.dim(),
            k: chart.k(),
            h: 2 * chart.k() as i64 + 1 - chart.dim() as i64,
            q: 0,
            r: 0,
            def8,
            normal_form_error,
        };
        let mut p = VariationalProblem {
            chart,
            theta,
            eta,
            factors,
            normalized,
            vertical,
            psi,
            classification: placeholder,
            sampler,
        };
        p.classify()?;
        Ok(p)
    }

    fn classify(&mut self) -> Result<()> {
        let q = self.annihilator()?.rank();
        let proper = self.check_proper()?;
        let (n, k) = (self.chart.dim(), self.chart.k());
        let degree_case = if n >= 2 && k == n - 2 {
            DegreeCase::MaximalDegree
        } else if proper.status == Properness::NotProper || n > 2 * k + 1 {
            DegreeCase::NonProper
        } else if n == 2 * k + 1 {
            DegreeCase::MaximallyCharacteristic
        } else if n > k + 2 {
            DegreeCase::Intermediate
        } else {
            DegreeCase::TopDegree
        };
        let c = &mut self.classification;
        c.q = q;
        c.r = q - proper.vertical.len();
        c.proper = proper.status;
        c.degree_case = degree_case;
        Ok(())
    }

    pub fn chart(&self) -> &Arc<BundleChart> {
        &self.chart
    }

    pub fn theta(&self) -> Option<&DiffForm> {
        self.theta.as_ref()
    }

    pub fn eta(&self) -> &DiffForm {
        &self.eta
    }

    pub fn factors(&self) -> Option<&FactorSet> {
        self.factors.as_ref()
    }

    pub fn normalized(&self) -> Option<&FactorSet> {
        self.normalized.as_ref()
    }

    pub fn vertical(&self) -> &[VecField] {
        &self.vertical
    }

    pub fn psi(&self) -> &[DiffForm] {
        &self.psi
    }

    pub fn classification(&self) -> &Classification {
        &self.classification
    }

    pub fn sampler(&self) -> &Sampler {
        &self.sampler
    }

    /// The same problem with a different vertical basis.
    pub fn with_vertical_basis(&self, basis: Vec<VecField>) -> Result<Self> {
        if basis.len() != self.chart.fibers().len() {
            return Err(Error::Invalid(format!(
                "{} vertical fields given for {} fiber coordinates",
                basis.len(),
                self.chart.fibers().len()
            )));
        }
        for v in &basis {
            if **v.chart() != *self.chart {
                return Err(Error::ChartMismatch);
            }
            if !v.is_vertical() {
                return Err(Error::Invalid(format!("field {v} is not vertical")));
            }
        }
        let m: SymMatrix = basis.iter().map(|v| v.comps().to_vec()).collect();
        linalg::certify_rank(&m, basis.len(), &self.sampler)?;
        let psi = basis.iter().map(|v| self.eta.interior(v)).collect::<Result<Vec<_>>>()?;
        Ok(VariationalProblem { vertical: basis, psi, ..self.clone() })
    }

    /// The Cartan ideal generated by the nonzero `Ψ_a`.
    pub fn variational_ideal(&self) -> Result<CartanIdeal> {
        let gens: Vec<DiffForm> = self.psi.iter().filter(|g| !g.is_zero()).cloned().collect();
        CartanIdeal::new(gens, &self.sampler)
    }

    /// `N(dθ)`.
    pub fn annihilator(&self) -> Result<Distribution> {
        ideals::annihilator(&self.eta, &self.sampler)
    }

    pub fn check_proper(&self) -> Result<ProperReport> {
        let d = ideals::vertical_annihilator(&self.eta, &self.sampler)?;
        let vertical = d.basis().to_vec();
        let status = if !vertical.is_empty() {
            Properness::NotProper
        } else if eta_vanishes_somewhere(&self.eta, &self.sampler) {
            Properness::Unknown
        } else {
            Properness::Proper
        };
        Ok(ProperReport { status, vertical })
    }

    /// `P_ij`: coefficient of `dx^j` in the formal pullback of the `i`-th
    /// normalized factor.
    pub fn p_matrix(&self) -> Result<SymMatrix> {
        let fs = self.normalized.as_ref().ok_or(Error::NormalFormRequired)?;
        let k = self.chart.k();
        fs.alphas()
            .iter()
            .map(|a| {
                let pulled = formal_pullback(a)?;
                Ok((0..k).map(|j| pulled.coeff(1 << j)).collect())
            })
            .collect()
    }

    fn is_maximal_degree(&self) -> bool {
        self.classification.degree_case == DegreeCase::MaximalDegree
    }

    /// Coefficient of `ω` in the formal pullback of each `Ψ_a`.
    pub fn pullback_coefficients(&self) -> Result<Vec<ScalarExpr>> {
        let mask = self.chart.base_mask();
        self.psi.iter().map(|psi| Ok(formal_pullback(psi)?.coeff(mask))).collect()
    }

    pub fn critical_equations(&self) -> Result<CriticalEquations> {
        if self.is_maximal_degree() {
            return self.quasilinear_equations();
        }
        let fs = self.normalized.as_ref().ok_or(Error::NormalFormRequired)?;
        let nf = fs.normal().expect("normalized");
        let p = self.p_matrix()?;
        let mask = self.chart.base_mask();
        let mut deltas = Vec::new();
        let mut coeffs = Vec::new();
        let contractions = decomp::pivot_contractions(fs)?;
        for (a, psi) in contractions.iter().enumerate() {
            let minor: SymMatrix = p.iter().enumerate().filter(|(i, _)| *i != a).map(|(_, r)| r.clone()).collect();
            let d = linalg::det(&minor);
            deltas.push(if a % 2 == 1 { -d } else { d });
            coeffs.push(formal_pullback(psi)?.coeff(mask));
        }
        let (minor_constant, consistent) = common_ratio(&coeffs, &deltas);
        Ok(CriticalEquations {
            source: EquationSource::Minors,
            fibers: nf.pivot_fibers.clone(),
            deltas,
            pullback_coefficients: coeffs,
            minor_constant,
            multiplier: nf.multiplier.clone(),
            consistent,
        })
    }

    fn quasilinear_equations(&self) -> Result<CriticalEquations> {
        let w = self.characteristic_field_maximal_degree()?;
        let k = self.chart.k();
        let fibers = self.chart.fibers().to_vec();
        let a: Vec<ScalarExpr> = w.comps()[..k].to_vec();
        let transport = |fiber: &str, rhs: &ScalarExpr| -> ScalarExpr {
            let lhs: ScalarExpr = a
                .iter()
                .zip(self.chart.base())
                .map(|(am, x)| am * ScalarExpr::var(&jet_name(fiber, x)))
                .sum();
            lhs - rhs
        };
        let f = w.comps()[k].clone();
        let g = w.comps()[k + 1].clone();
        let deltas = vec![transport(&fibers[1], &g), -transport(&fibers[0], &f)];
        let coeffs = self.pullback_coefficients()?;
        let (minor_constant, consistent) = common_ratio(&coeffs, &deltas);
        Ok(CriticalEquations {
            source: EquationSource::Quasilinear,
            fibers,
            deltas,
            pullback_coefficients: coeffs,
            minor_constant,
            multiplier: ScalarExpr::one(),
            consistent,
        })
    }

    /// The field `W` spanning `N(dθ)` in the maximal-degree case, read off
    /// from `dθ = ι_W vol`.
    pub fn characteristic_field_maximal_degree(&self) -> Result<VecField> {
        let n = self.chart.dim();
        if self.eta.degree() + 1 != n {
            return Err(Error::DegreeMismatch(format!(
                "maximal-degree field needs dθ of degree {}, found {}",
                n - 1,
                self.eta.degree()
            )));
        }
        let full = self.chart.full_mask();
        let comps: Vec<ScalarExpr> = (0..n)
            .map(|i| {
                let c = self.eta.coeff(full & !(1 << i));
                if i % 2 == 1 {
                    -c
                } else {
                    c
                }
            })
            .collect();
        let w = VecField::new(&self.chart, comps)?;
        if self.chart.base_indices().all(|i| w.comps()[i].is_zero()) {
            return Err(Error::ImproperPrinciple);
        }
        if !self.eta.interior(&w)?.is_zero() {
            return Err(Error::Invalid("characteristic field does not annihilate dθ".into()));
        }
        Ok(w)
    }

    /// `W / A^1`, so that its first base component is 1.
    pub fn normalized_characteristic_field(&self) -> Result<VecField> {
        let w = self.characteristic_field_maximal_degree()?;
        let inv = w.comps()[0]
            .recip()
            .ok_or_else(|| Error::Invalid("first base component of W vanishes".into()))?;
        Ok(w.scale(&inv))
    }

    /// Pulls every `Ψ_a` back along `phi`.
    pub fn verify_critical(&self, phi: &SectionMap) -> Result<CriticalReport> {
        if **phi.chart() != *self.chart {
            return Err(Error::ChartMismatch);
        }
        let mask = self.chart.base_mask();
        let residuals = self
            .psi
            .iter()
            .map(|psi| Ok(phi.pullback(psi)?.coeff(mask).pythagorean()))
            .collect::<Result<Vec<_>>>()?;
        let critical = residuals.iter().all(|r| r.is_zero());
        let (delta_values, consistent) = match self.critical_equations() {
            Ok(eqs) => {
                let jets = phi.jet_map();
                let values: Vec<ScalarExpr> = eqs.deltas.iter().map(|d| d.subst(&jets).pythagorean()).collect();
                let consistent = self.residuals_match(&eqs, &values, &residuals, phi);
                (values, consistent)
            }
            Err(Error::NormalFormRequired) => (Vec::new(), true),
            Err(e) => return Err(e),
        };
        Ok(CriticalReport { critical, residuals, delta_values, consistent })
    }

    fn residuals_match(
        &self,
        eqs: &CriticalEquations,
        values: &[ScalarExpr],
        residuals: &[ScalarExpr],
        phi: &SectionMap,
    ) -> bool {
        let Some(kappa) = &eqs.minor_constant else {
            return values.iter().all(|v| v.is_zero());
        };
        let m = eqs.multiplier.subst(&phi.value_map());
        let default_basis = self.vertical.iter().zip(self.chart.fibers()).all(|(v, f)| {
            v.equiv(&VecField::coordinate(&self.chart, f).expect("fiber coordinate"))
        });
        if !default_basis {
            return true;
        }
        let by_fiber: BTreeMap<&str, &ScalarExpr> =
            self.chart.fibers().iter().map(|s| s.as_str()).zip(residuals).collect();
        eqs.fibers.iter().zip(values).all(|(f, v)| {
            let r = by_fiber[f.as_str()];
            (r * &m).equiv(&(kappa * v))
        })
    }
}

/// The constant `κ` with `a_i = κ · b_i` for all `i`, if there is one.
fn common_ratio(a: &[ScalarExpr], b: &[ScalarExpr]) -> (Option<ScalarExpr>, bool) {
    let mut kappa: Option<ScalarExpr> = None;
    for (x, y) in a.iter().zip(b) {
        if y.is_zero() {
            if !x.is_zero() {
                return (None, false);
            }
            continue;
        }
        let r = x.checked_div(y).expect("nonzero");
        if r.as_constant().is_none() {
            return (None, false);
        }
        match &kappa {
            None => kappa = Some(r),
            Some(k) if *k == r => {}
            Some(_) => return (kappa, false),
        }
    }
    let consistent = kappa.is_some() || a.iter().all(|x| x.is_zero());
    (kappa, consistent)
}

fn eta_vanishes_somewhere(eta: &DiffForm, sampler: &Sampler) -> bool {
    sampler.points().iter().any(|p| {
        eta.terms().all(|(_, c)| c.eval(p).map(|v| v.abs() <= crate::symexpr::ZERO_THRESHOLD).unwrap_or(true))
    })
}
