//! Builders shared by the unit tests of several modules.

use std::sync::Arc;

use crate::forms::{BundleChart, DiffForm};
use crate::symexpr::{parse, parse_with, ParseContext, ScalarExpr};

pub fn p(s: &str) -> ScalarExpr {
    parse(s).unwrap()
}

/// Parse context declaring each name as a function of every chart
/// coordinate.
pub fn opaque(chart: &BundleChart, names: &[&str]) -> ParseContext {
    let mut ctx = ParseContext::new();
    for n in names {
        ctx.functions.insert(n.to_string(), chart.coords().to_vec());
    }
    ctx
}

pub fn pc(ctx: &ParseContext, s: &str) -> ScalarExpr {
    parse_with(s, ctx).unwrap()
}

pub fn one_form(chart: &Arc<BundleChart>, ctx: &ParseContext, pairs: &[(&str, &str)]) -> DiffForm {
    let mut f = DiffForm::zero(chart, 1);
    for (name, c) in pairs {
        f = f + DiffForm::monomial(chart, pc(ctx, c), &[name]).unwrap();
    }
    f
}

fn b_names(rows: usize, cols: usize) -> Vec<String> {
    let mut out = Vec::new();
    for a in 1..=rows {
        for j in 1..=cols {
            out.push(format!("B{a}{j}"));
        }
    }
    out
}

/// Chart and factors `α_a = dz^a + B_aj dx^j (+ C_a dw)` with opaque
/// coefficients, and optionally `α_{p+1} = C_k dx^k`.
pub struct Factors {
    pub chart: Arc<BundleChart>,
    pub ctx: ParseContext,
    pub alphas: Vec<DiffForm>,
}

/// `k` base coordinates, `p` fiber coordinates, normal-form factors.
pub fn normal_factors(k: usize, p: usize, with_c_row: bool, with_w: bool) -> Factors {
    let base: Vec<String> = (1..=k).map(|i| format!("x{i}")).collect();
    let fz: Vec<String> = (1..=p).map(|i| format!("z{i}")).collect();
    let fw: Vec<String> = if with_w { vec!["w".into()] } else { Vec::new() };
    let chart = BundleChart::from_names(base.clone(), fz.clone(), fw).unwrap();
    let mut names = b_names(p, k);
    names.extend((1..=k.max(p)).map(|i| format!("C{i}")));
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let ctx = opaque(&chart, &refs);
    let mut alphas = Vec::new();
    for a in 1..=p {
        let mut f = DiffForm::d(&chart, &fz[a - 1]).unwrap();
        for (j, x) in base.iter().enumerate() {
            f = f + DiffForm::monomial(&chart, pc(&ctx, &format!("B{a}{}", j + 1)), &[x]).unwrap();
        }
        if with_w {
            f = f + DiffForm::monomial(&chart, pc(&ctx, &format!("C{a}")), &["w"]).unwrap();
        }
        alphas.push(f);
    }
    if with_c_row {
        let mut f = DiffForm::zero(&chart, 1);
        for (j, x) in base.iter().enumerate() {
            f = f + DiffForm::monomial(&chart, pc(&ctx, &format!("C{}", j + 1)), &[x]).unwrap();
        }
        alphas.push(f);
    }
    Factors { chart, ctx, alphas }
}

pub fn example1() -> Factors {
    normal_factors(2, 3, false, false)
}

pub fn example2() -> Factors {
    normal_factors(3, 3, true, false)
}

pub fn example3() -> Factors {
    normal_factors(2, 3, false, true)
}

pub fn eta(f: &Factors) -> DiffForm {
    DiffForm::wedge_all(&f.alphas).unwrap()
}
