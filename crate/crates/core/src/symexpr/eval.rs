use std::collections::BTreeMap;

use num_traits::ToPrimitive;

use super::{Atom, Coeff, FuncKind, Monomial, Poly, ScalarExpr};
use crate::error::{Error, Point, Result};

/// Denominators closer to zero than this are reported as division by zero.
pub const DIVISION_TOLERANCE: f64 = 1e-12;

/// Supplies numeric values for variables and opaque function atoms.
///
/// Variables are looked up by name, opaque atoms by their printed form.
pub trait Env {
    fn value(&self, key: &str) -> Option<f64>;
}

impl Env for Point {
    fn value(&self, key: &str) -> Option<f64> {
        self.get(key).copied()
    }
}

/// Borrowed map environment.
pub struct MapEnv<'a>(pub &'a BTreeMap<String, f64>);

impl Env for MapEnv<'_> {
    fn value(&self, key: &str) -> Option<f64> {
        self.0.get(key).copied()
    }
}

fn coeff_f64(c: &Coeff) -> f64 {
    c.to_f64().unwrap_or(f64::NAN)
}

fn eval_atom(a: &Atom, env: &dyn Env) -> Result<f64> {
    match a {
        Atom::Var(v) => env.value(v).ok_or_else(|| Error::UnboundVariable(v.to_string())),
        Atom::Func(fa) => {
            let arg = |i: usize| fa.args[i].eval(env);
            match &fa.kind {
                FuncKind::Sin => Ok(arg(0)?.sin()),
                FuncKind::Cos => Ok(arg(0)?.cos()),
                FuncKind::Exp => Ok(arg(0)?.exp()),
                FuncKind::Ln => {
                    let x = arg(0)?;
                    if x <= 0.0 {
                        Err(Error::Domain(format!("ln of non-positive value {x}")))
                    } else {
                        Ok(x.ln())
                    }
                }
                FuncKind::User { .. } => {
                    let key = fa.to_string();
                    env.value(&key).ok_or(Error::UnboundVariable(key))
                }
            }
        }
    }
}

fn eval_monomial(m: &Monomial, env: &dyn Env) -> Result<f64> {
    let mut acc = 1.0;
    for (a, e) in m.factors() {
        acc *= eval_atom(a, env)?.powi(*e as i32);
    }
    Ok(acc)
}

fn eval_poly(p: &Poly, env: &dyn Env) -> Result<f64> {
    let mut acc = 0.0;
    for (m, c) in p.terms() {
        acc += coeff_f64(c) * eval_monomial(m, env)?;
    }
    Ok(acc)
}

pub(super) fn eval_expr(e: &ScalarExpr, env: &dyn Env) -> Result<f64> {
    let n = eval_poly(e.num(), env)?;
    if e.den().is_one() {
        return Ok(n);
    }
    let d = eval_poly(e.den(), env)?;
    if d.abs() < DIVISION_TOLERANCE {
        return Err(Error::DivisionByZero { value: d });
    }
    Ok(n / d)
}

#[derive(Clone, Debug)]
enum Node {
    Slot(usize),
    Sin(Box<CompiledPoly>),
    Cos(Box<CompiledPoly>),
    Exp(Box<CompiledPoly>),
    Ln(Box<CompiledPoly>),
}

#[derive(Clone, Debug)]
struct CompiledPoly {
    num: Vec<(f64, Vec<(usize, i32)>)>,
    den: Option<Vec<(f64, Vec<(usize, i32)>)>>,
    atoms: Vec<Node>,
}

/// A [`ScalarExpr`] lowered to `f64` arithmetic over a fixed slot layout,
/// for evaluation in tight numeric loops.
#[derive(Clone, Debug)]
pub struct Compiled {
    body: CompiledPoly,
}

struct Builder<'a> {
    slots: &'a [String],
}

impl Builder<'_> {
    fn compile(&self, e: &ScalarExpr) -> Result<CompiledPoly> {
        let mut atoms: Vec<(Atom, Node)> = Vec::new();
        let num = self.terms(e.num(), &mut atoms)?;
        let den = if e.den().is_one() {
            None
        } else {
            Some(self.terms(e.den(), &mut atoms)?)
        };
        Ok(CompiledPoly { num, den, atoms: atoms.into_iter().map(|(_, n)| n).collect() })
    }

    fn terms(
        &self,
        p: &Poly,
        atoms: &mut Vec<(Atom, Node)>,
    ) -> Result<Vec<(f64, Vec<(usize, i32)>)>> {
        let mut out = Vec::with_capacity(p.len());
        for (m, c) in p.terms() {
            let mut fs = Vec::new();
            for (a, e) in m.factors() {
                let idx = match atoms.iter().position(|(b, _)| b == a) {
                    Some(i) => i,
                    None => {
                        atoms.push((a.clone(), self.node(a)?));
                        atoms.len() - 1
                    }
                };
                fs.push((idx, *e as i32));
            }
            out.push((coeff_f64(c), fs));
        }
        Ok(out)
    }

    fn slot(&self, key: &str) -> Result<usize> {
        self.slots
            .iter()
            .position(|s| s == key)
            .ok_or_else(|| Error::UnboundVariable(key.to_string()))
    }

    fn node(&self, a: &Atom) -> Result<Node> {
        match a {
            Atom::Var(v) => Ok(Node::Slot(self.slot(v)?)),
            Atom::Func(fa) => {
                let inner = |i: usize| -> Result<Box<CompiledPoly>> {
                    Ok(Box::new(self.compile(&fa.args[i])?))
                };
                Ok(match &fa.kind {
                    FuncKind::Sin => Node::Sin(inner(0)?),
                    FuncKind::Cos => Node::Cos(inner(0)?),
                    FuncKind::Exp => Node::Exp(inner(0)?),
                    FuncKind::Ln => Node::Ln(inner(0)?),
                    FuncKind::User { .. } => Node::Slot(self.slot(&fa.to_string())?),
                })
            }
        }
    }
}

fn run_terms(terms: &[(f64, Vec<(usize, i32)>)], atoms: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (c, fs) in terms {
        let mut t = *c;
        for (i, e) in fs {
            t *= atoms[*i].powi(*e);
        }
        acc += t;
    }
    acc
}

impl CompiledPoly {
    fn run(&self, x: &[f64]) -> Result<f64> {
        let mut vals = Vec::with_capacity(self.atoms.len());
        for n in &self.atoms {
            vals.push(match n {
                Node::Slot(i) => x[*i],
                Node::Sin(p) => p.run(x)?.sin(),
                Node::Cos(p) => p.run(x)?.cos(),
                Node::Exp(p) => p.run(x)?.exp(),
                Node::Ln(p) => {
                    let v = p.run(x)?;
                    if v <= 0.0 {
                        return Err(Error::Domain(format!("ln of non-positive value {v}")));
                    }
                    v.ln()
                }
            });
        }
        let n = run_terms(&self.num, &vals);
        match &self.den {
            None => Ok(n),
            Some(d) => {
                let d = run_terms(d, &vals);
                if d.abs() < DIVISION_TOLERANCE {
                    Err(Error::DivisionByZero { value: d })
                } else {
                    Ok(n / d)
                }
            }
        }
    }
}

impl Compiled {
    /// Compiles `e` against `slots`: variable names and opaque-atom keys,
    /// in the order values will be supplied.
    pub fn new(e: &ScalarExpr, slots: &[String]) -> Result<Self> {
        Ok(Compiled { body: Builder { slots }.compile(e)? })
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.body.run(x)
    }
}
