//! Liouville dynamics: volume-preserving phase-space fields, the Poincaré
//! homotopy operator and the maximal-degree principle `θ = σ + ε γ∧dt` on
//! extended phase space.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::{dual_one_form, mask_positions, BundleChart, DiffForm, VecField};
use crate::sampling::Sampler;
use crate::symexpr::{Atom, Poly, ScalarExpr};
use crate::varprin::{ProblemInput, VariationalProblem};

/// Name of the time coordinate prepended to phase space.
pub const TIME: &str = "t";

/// True when `d(X ⨼ Ω)` vanishes identically.
pub fn is_liouville(x: &VecField, omega: &DiffForm) -> Result<bool> {
    Ok(omega.interior(x)?.ext_d().is_zero())
}

/// Poincaré homotopy operator about the origin. For a closed `q`-form `β`
/// with polynomial coefficients returns `γ` with `dγ = β`, integrating
/// `t^{q−1} (E ⨼ β)(tx)` exactly monomial by monomial (`E` the Euler field).
pub fn homotopy_antiderivative(beta: &DiffForm) -> Result<DiffForm> {
    let chart = beta.chart();
    let q = beta.degree();
    if q == 0 {
        return Err(Error::DegreeMismatch("the homotopy operator needs a form of degree at least 1".into()));
    }
    if !beta.ext_d().is_zero() {
        return Err(Error::NotClosed);
    }
    let mut out = DiffForm::zero(chart, q - 1);
    for (mask, coeff) in beta.terms() {
        let den = coeff
            .den()
            .as_constant()
            .ok_or_else(|| Error::NonPolynomialCoefficient(coeff.to_string()))?;
        for (mono, c) in coeff.num().terms() {
            let mut degree = 0u32;
            for (atom, e) in mono.factors() {
                match atom {
                    Atom::Var(v) if chart.index_of(v).is_some() => degree += e,
                    Atom::Var(_) => {}
                    Atom::Func(_) => return Err(Error::NonPolynomialCoefficient(coeff.to_string())),
                }
            }
            let weight = ScalarExpr::from_poly(Poly::monomial(mono.clone(), c / &den))
                * ScalarExpr::ratio(1, i64::from(degree) + q as i64);
            for (r, i) in mask_positions(mask).into_iter().enumerate() {
                let t = &weight * ScalarExpr::var(chart.name(i));
                out.add_mask(mask & !(1 << i), if r % 2 == 1 { -t } else { t });
            }
        }
    }
    Ok(out)
}

/// Copies a form onto a chart containing all of its coordinate names.
fn embed(form: &DiffForm, target: &Arc<BundleChart>) -> Result<DiffForm> {
    let src = form.chart();
    let mut out = DiffForm::zero(target, form.degree());
    for (mask, c) in form.terms() {
        let pos = mask_positions(mask)
            .into_iter()
            .map(|i| target.require(src.name(i)))
            .collect::<Result<Vec<_>>>()?;
        out.add_term(&pos, c.clone());
    }
    Ok(out)
}

/// A Liouville field `X` with volume `Ω` on phase space `P`, and the
/// maximal-degree data it induces on `M = ℝ × P`.
#[derive(Clone, Debug)]
pub struct LiouvilleSetup {
    pub phase: Arc<BundleChart>,
    pub omega: DiffForm,
    pub sigma: DiffForm,
    pub x: VecField,
    /// Chart of `M`: base `t, p^1..p^{m−2}`, fiber `z = p^{m−1}`, `w = p^m`.
    pub extended: Arc<BundleChart>,
    pub gamma: DiffForm,
    /// `ε = ±1` in `θ = σ + ε γ∧dt`.
    pub sign: i8,
    pub theta: DiffForm,
    pub z: VecField,
}

impl LiouvilleSetup {
    /// Builds the setup from `X` on a Euclidean phase chart. `Ω` defaults
    /// to the coordinate volume and `σ` to its homotopy antiderivative.
    pub fn new(x: VecField, omega: Option<DiffForm>, sigma: Option<DiffForm>, sampler: &Sampler) -> Result<Self> {
        let phase = x.chart().clone();
        let m = phase.dim();
        if m < 2 {
            return Err(Error::InvalidChart("phase space needs at least two coordinates".into()));
        }
        if phase.index_of(TIME).is_some() {
            return Err(Error::InvalidChart(format!("phase coordinate `{TIME}` clashes with the time coordinate")));
        }
        let omega = omega.unwrap_or_else(|| DiffForm::volume(&phase));
        if omega.degree() != m || **omega.chart() != *phase {
            return Err(Error::DegreeMismatch("Ω must be a top-degree form on the phase chart".into()));
        }
        let density = omega.coeff(phase.full_mask());
        let probe = sampler.with_coords(phase.coords().to_vec());
        for pt in probe.points() {
            if density.eval_at(&pt)?.abs() <= crate::symexpr::ZERO_THRESHOLD {
                return Err(Error::Invalid(format!("Ω vanishes near {:?}", pt.materialize(&density.eval_keys()))));
            }
        }
        let sigma = match sigma {
            Some(s) => {
                if !s.ext_d().equiv(&omega) {
                    return Err(Error::Invalid("dσ differs from Ω".into()));
                }
                s
            }
            None => homotopy_antiderivative(&omega)?,
        };
        let beta = omega.interior(&x)?;
        if !beta.ext_d().is_zero() {
            return Err(Error::NotClosed);
        }
        let gamma = if beta.is_zero() { DiffForm::zero(&phase, m - 2) } else { homotopy_antiderivative(&beta)? };

        let names = phase.coords();
        let mut base = vec![TIME.to_string()];
        base.extend(names[..m - 2].iter().cloned());
        let extended =
            BundleChart::from_names(base, vec![names[m - 2].clone()], vec![names[m - 1].clone()])?;
        let mut zc = vec![ScalarExpr::one()];
        zc.extend(x.comps().iter().cloned());
        let z = VecField::new(&extended, zc)?;

        for sign in [1, -1] {
            let theta = assemble_theta(&sigma, &gamma, &extended, sign)?;
            if theta.ext_d().interior(&z)?.is_zero() {
                return Ok(LiouvilleSetup { phase, omega, sigma, x, extended, gamma, sign, theta, z });
            }
        }
        Err(Error::Invalid("no orientation sign makes Z characteristic".into()))
    }

    /// The same setup with `θ` rebuilt for the sign `ε`.
    pub fn with_sign(&self, sign: i8) -> Result<Self> {
        let theta = assemble_theta(&self.sigma, &self.gamma, &self.extended, sign)?;
        Ok(LiouvilleSetup { sign, theta, ..self.clone() })
    }

    /// `dθ`, as assembled from `Ω` and `X ⨼ Ω` without differentiating `θ`.
    pub fn assembled_eta(&self) -> Result<DiffForm> {
        let dt = DiffForm::d(&self.extended, TIME)?;
        let omega = embed(&self.omega, &self.extended)?;
        let beta = embed(&self.omega.interior(&self.x)?, &self.extended)?.wedge(&dt)?;
        omega.try_add(&beta.scale(&ScalarExpr::int(i64::from(self.sign))))
    }
}

fn assemble_theta(sigma: &DiffForm, gamma: &DiffForm, extended: &Arc<BundleChart>, sign: i8) -> Result<DiffForm> {
    let dt = DiffForm::d(extended, TIME)?;
    let gamma_dt = embed(gamma, extended)?.wedge(&dt)?;
    embed(sigma, extended)?.try_add(&gamma_dt.scale(&ScalarExpr::int(i64::from(sign))))
}

/// The maximal-degree problem of `θ`, after asserting `Z ⨼ dθ = 0` and
/// `Z ⨼ dt = 1`.
pub fn build_theta(setup: &LiouvilleSetup, sampler: &Sampler) -> Result<VariationalProblem> {
    let eta = setup.theta.ext_d();
    if !eta.interior(&setup.z)?.is_zero() {
        return Err(Error::Invalid("Z does not annihilate dθ".into()));
    }
    let dt = DiffForm::d(&setup.extended, TIME)?;
    if !dt.interior(&setup.z)?.coeff(0).is_one() {
        return Err(Error::Invalid("Z ⨼ dt differs from 1".into()));
    }
    VariationalProblem::build(ProblemInput::Theta(setup.theta.clone()), sampler)
}

/// `dθ = *(Z̃)` for the Euclidean metric on `M`.
pub fn verify_hodge_identity(setup: &LiouvilleSetup) -> bool {
    setup.theta.ext_d().equiv(&dual_one_form(&setup.z).hodge_star())
}

/// Summary of a Liouville construction.
#[derive(Clone, Debug, Serialize)]
pub struct LiouvilleReport {
    pub liouville: bool,
    pub sign: Option<i8>,
    pub sigma: Option<String>,
    pub gamma: Option<String>,
    pub theta: Option<String>,
    pub z_characteristic: bool,
    pub hodge_identity: bool,
    pub w_proportional_to_z: bool,
}

impl LiouvilleReport {
    pub fn passed(&self) -> bool {
        self.liouville && self.z_characteristic && self.hodge_identity && self.w_proportional_to_z
    }
}

/// Runs the whole construction, turning a non-Liouville field into a
/// failing report rather than an error.
pub fn analyze(x: VecField, omega: Option<DiffForm>, sampler: &Sampler) -> Result<LiouvilleReport> {
    let om = omega.clone().unwrap_or_else(|| DiffForm::volume(x.chart()));
    if !is_liouville(&x, &om)? {
        return Ok(LiouvilleReport {
            liouville: false,
            sign: None,
            sigma: None,
            gamma: None,
            theta: None,
            z_characteristic: false,
            hodge_identity: false,
            w_proportional_to_z: false,
        });
    }
    let setup = LiouvilleSetup::new(x, omega, None, sampler)?;
    let vp = build_theta(&setup, sampler)?;
    let w = vp.characteristic_field_maximal_degree()?;
    Ok(LiouvilleReport {
        liouville: true,
        sign: Some(setup.sign),
        sigma: Some(setup.sigma.to_string()),
        gamma: Some(setup.gamma.to_string()),
        theta: Some(setup.theta.to_string()),
        z_characteristic: true,
        hodge_identity: verify_hodge_identity(&setup),
        w_proportional_to_z: proportional(&w, &setup.z),
    })
}

/// True when all 2×2 minors of the component pair vanish.
pub fn proportional(a: &VecField, b: &VecField) -> bool {
    let (ac, bc) = (a.comps(), b.comps());
    (0..ac.len()).all(|i| (i + 1..ac.len()).all(|j| (&ac[i] * &bc[j] - &ac[j] * &bc[i]).is_zero()))
}
