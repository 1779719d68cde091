//! Exact symbolic scalars.
//!
//! A [`ScalarExpr`] is stored as a quotient of two sparse polynomials with
//! rational coefficients. Indeterminates are [`Atom`]s: coordinate names and
//! applications of `sin`, `cos`, `exp`, `ln` or opaque user functions such as
//! `B11(x1,x2,z1)`. Every constructor normalizes, so equality of stored
//! numerators after subtraction is an exact zero test.

mod atom;
mod eval;
mod parse;
mod poly;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

pub use atom::{Atom, FuncAtom, FuncKind};
pub use eval::{Compiled, Env, MapEnv};
pub use parse::{parse, parse_with, ParseContext};
pub use poly::{Coeff, Monomial, Poly};

use crate::error::{Error, Result};
use crate::sampling::{SamplePoint, Sampler};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Frac {
    num: Poly,
    den: Poly,
}

/// Exact symbolic scalar in canonical form.
#[derive(Clone)]
pub struct ScalarExpr(Arc<Frac>);

impl PartialEq for ScalarExpr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl Eq for ScalarExpr {}

impl PartialOrd for ScalarExpr {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ScalarExpr {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            std::cmp::Ordering::Equal
        } else {
            self.0.cmp(&other.0)
        }
    }
}

impl Hash for ScalarExpr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash(state)
    }
}

fn normalize(num: Poly, den: Poly) -> Frac {
    assert!(!den.is_zero(), "symbolic division by the zero expression");
    if num.is_zero() {
        return Frac { num, den: Poly::one() };
    }
    if let Some(c) = den.as_constant() {
        if c.is_one() {
            return Frac { num, den };
        }
        return Frac { num: num.scale(&c.recip()), den: Poly::one() };
    }
    let g = num.monomial_content().gcd(&den.monomial_content());
    let (mut num, mut den) = if g.is_one() {
        (num, den)
    } else {
        (num.div_monomial(&g), den.div_monomial(&g))
    };
    if let Some(c) = den.as_constant() {
        return Frac { num: num.scale(&c.recip()), den: Poly::one() };
    }
    let lc = den.leading().map(|(_, c)| c.clone()).unwrap_or_else(Coeff::one);
    if !lc.is_one() {
        let inv = lc.recip();
        num = num.scale(&inv);
        den = den.scale(&inv);
    }
    if den.len() > 1 {
        if let Some(q) = num.exact_div(&den) {
            return Frac { num: q, den: Poly::one() };
        }
        if num.len() > 1 {
            if let Some(q) = den.exact_div(&num) {
                let lq = q.leading().map(|(_, c)| c.clone()).unwrap_or_else(Coeff::one);
                let inv = lq.recip();
                return Frac { num: Poly::constant(inv.clone()), den: q.scale(&inv) };
            }
        }
    }
    Frac { num, den }
}

impl ScalarExpr {
    pub fn from_parts(num: Poly, den: Poly) -> Self {
        ScalarExpr(Arc::new(normalize(num, den)))
    }

    pub fn from_poly(p: Poly) -> Self {
        ScalarExpr(Arc::new(Frac { num: p, den: Poly::one() }))
    }

    pub fn zero() -> Self {
        Self::from_poly(Poly::zero())
    }

    pub fn one() -> Self {
        Self::from_poly(Poly::one())
    }

    pub fn int(i: i64) -> Self {
        Self::from_poly(Poly::from_int(i))
    }

    pub fn rational(c: Coeff) -> Self {
        Self::from_poly(Poly::constant(c))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        Self::rational(Coeff::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn var(name: &str) -> Self {
        Self::from_poly(Poly::atom(Atom::var(name)))
    }

    pub fn from_atom(a: Atom) -> Self {
        Self::from_poly(Poly::atom(a))
    }

    /// Function application with constant folding at the identity points.
    pub fn func(kind: FuncKind, args: Vec<ScalarExpr>) -> Self {
        if args.len() == 1 {
            if let Some(c) = args[0].as_constant() {
                match kind {
                    FuncKind::Sin if c.is_zero() => return Self::zero(),
                    FuncKind::Cos if c.is_zero() => return Self::one(),
                    FuncKind::Exp if c.is_zero() => return Self::one(),
                    FuncKind::Ln if c.is_one() => return Self::zero(),
                    _ => {}
                }
            }
        }
        Self::from_atom(Atom::Func(Arc::new(FuncAtom { kind, args })))
    }

    pub fn sin(e: ScalarExpr) -> Self {
        Self::func(FuncKind::Sin, vec![e])
    }

    pub fn cos(e: ScalarExpr) -> Self {
        Self::func(FuncKind::Cos, vec![e])
    }

    pub fn exp(e: ScalarExpr) -> Self {
        Self::func(FuncKind::Exp, vec![e])
    }

    pub fn ln(e: ScalarExpr) -> Self {
        Self::func(FuncKind::Ln, vec![e])
    }

    pub fn user(name: &str, args: Vec<ScalarExpr>) -> Self {
        Self::func(FuncKind::User { name: Arc::from(name), derivs: Vec::new() }, args)
    }

    pub fn num(&self) -> &Poly {
        &self.0.num
    }

    pub fn den(&self) -> &Poly {
        &self.0.den
    }

    /// Exact test: the canonical numerator is the zero polynomial.
    pub fn is_zero(&self) -> bool {
        self.0.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.den.is_one() && self.0.num.is_one()
    }

    pub fn as_constant(&self) -> Option<Coeff> {
        if self.0.den.is_one() {
            self.0.num.as_constant()
        } else {
            None
        }
    }

    pub fn is_polynomial(&self) -> bool {
        self.0.den.is_one()
    }

    /// Exact equality as rational functions.
    pub fn equiv(&self, other: &ScalarExpr) -> bool {
        self == other || (self - other).is_zero()
    }

    /// Re-normalizes; a no-op on values built through the public API.
    pub fn canon(&self) -> ScalarExpr {
        Self::from_parts(self.0.num.clone(), self.0.den.clone())
    }

    pub fn recip(&self) -> Option<ScalarExpr> {
        if self.is_zero() {
            None
        } else {
            Some(Self::from_parts(self.0.den.clone(), self.0.num.clone()))
        }
    }

    pub fn checked_div(&self, other: &ScalarExpr) -> Option<ScalarExpr> {
        if other.is_zero() {
            return None;
        }
        if other.is_one() {
            return Some(self.clone());
        }
        Some(Self::from_parts(
            self.0.num.mul(&other.0.den),
            self.0.den.mul(&other.0.num),
        ))
    }

    pub fn pow(&self, e: i32) -> ScalarExpr {
        let base = if e < 0 {
            self.recip().expect("negative power of the zero expression")
        } else {
            self.clone()
        };
        let k = e.unsigned_abs();
        Self::from_parts(base.0.num.pow(k), base.0.den.pow(k))
    }

    pub fn scale(&self, c: &Coeff) -> ScalarExpr {
        Self::from_parts(self.0.num.scale(c), self.0.den.clone())
    }

    fn for_each_atom(&self, f: &mut dyn FnMut(&Atom)) {
        for p in [&self.0.num, &self.0.den] {
            for (m, _) in p.terms() {
                for (a, _) in m.factors() {
                    f(a);
                    if let Atom::Func(fa) = a {
                        for arg in &fa.args {
                            arg.for_each_atom(f);
                        }
                    }
                }
            }
        }
    }

    /// Names of all variables, including those inside function arguments.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.for_each_atom(&mut |a| {
            if let Atom::Var(v) = a {
                out.insert(v.to_string());
            }
        });
        out
    }

    pub fn contains_var(&self, v: &str) -> bool {
        let mut found = false;
        self.for_each_atom(&mut |a| {
            if let Atom::Var(w) = a {
                if &**w == v {
                    found = true;
                }
            }
        });
        found
    }

    /// Keys of opaque function atoms (their printed form), as used by
    /// [`Env`] lookups.
    pub fn opaque_keys(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.for_each_atom(&mut |a| {
            if let Atom::Func(fa) = a {
                if !fa.kind.is_transcendental() {
                    out.insert(fa.to_string());
                }
            }
        });
        out
    }

    /// Every key an evaluation environment may be asked for.
    pub fn eval_keys(&self) -> BTreeSet<String> {
        let mut out = self.free_vars();
        out.extend(self.opaque_keys());
        out
    }

    pub fn has_transcendental(&self) -> bool {
        let mut found = false;
        self.for_each_atom(&mut |a| {
            if let Atom::Func(fa) = a {
                if fa.kind.is_transcendental() {
                    found = true;
                }
            }
        });
        found
    }

    pub fn has_function_atoms(&self) -> bool {
        let mut found = false;
        self.for_each_atom(&mut |a| {
            if matches!(a, Atom::Func(_)) {
                found = true;
            }
        });
        found
    }

    /// Partial derivative with respect to the variable `v`.
    pub fn diff(&self, v: &str) -> ScalarExpr {
        if !self.contains_var(v) {
            return Self::zero();
        }
        let dn = diff_poly(&self.0.num, v);
        if self.0.den.is_one() {
            return dn;
        }
        let dd = diff_poly(&self.0.den, v);
        let n = Self::from_poly(self.0.num.clone());
        let d = Self::from_poly(self.0.den.clone());
        (dn * &d - n * dd) / d.pow(2)
    }

    /// Simultaneous substitution of variables.
    pub fn subst(&self, map: &BTreeMap<String, ScalarExpr>) -> ScalarExpr {
        if map.is_empty() {
            return self.clone();
        }
        let touched = self.free_vars().iter().any(|v| map.contains_key(v));
        if !touched {
            return self.clone();
        }
        let n = subst_poly(&self.0.num, map);
        if self.0.den.is_one() {
            return n;
        }
        n / subst_poly(&self.0.den, map)
    }

    /// Rewrites every `sin(u)^2` as `1 - cos(u)^2`.
    pub fn pythagorean(&self) -> ScalarExpr {
        if !self.has_transcendental() {
            return self.clone();
        }
        let n = pyth_poly(&self.0.num);
        if self.0.den.is_one() {
            return n;
        }
        n / pyth_poly(&self.0.den)
    }

    /// Exact three-way zero test backed by sampling on `sampler`.
    pub fn zero_test(&self, sampler: &Sampler) -> ZeroTest {
        if self.is_zero() {
            return ZeroTest::Zero;
        }
        let keys = self.eval_keys();
        let mut best: Option<(f64, Point)> = None;
        for pt in sampler.points() {
            let Ok(v) = self.eval(&pt) else { continue };
            if !v.is_finite() {
                continue;
            }
            if v.abs() > ZERO_THRESHOLD {
                return ZeroTest::NonZero(pt.materialize(&keys));
            }
            if best.as_ref().is_none_or(|(b, _)| v.abs() > *b) {
                best = Some((v.abs(), pt.materialize(&keys)));
            }
        }
        if self.has_transcendental() {
            ZeroTest::Unknown
        } else {
            match best {
                Some((_, p)) => ZeroTest::NonZero(p),
                None => ZeroTest::Unknown,
            }
        }
    }

    pub fn eval(&self, env: &dyn Env) -> Result<f64> {
        eval::eval_expr(self, env)
    }

    pub fn eval_at(&self, point: &SamplePoint) -> Result<f64> {
        self.eval(point)
    }
}

pub type Point = crate::error::Point;

/// Magnitude below which a sampled value counts as zero.
pub const ZERO_THRESHOLD: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum ZeroTest {
    Zero,
    NonZero(Point),
    Unknown,
}

impl ZeroTest {
    pub fn is_nonzero(&self) -> bool {
        matches!(self, ZeroTest::NonZero(_))
    }
}

fn atom_diff(a: &Atom, v: &str) -> ScalarExpr {
    match a {
        Atom::Var(w) => {
            if &**w == v {
                ScalarExpr::one()
            } else {
                ScalarExpr::zero()
            }
        }
        Atom::Func(fa) => {
            let mut out = ScalarExpr::zero();
            for (i, arg) in fa.args.iter().enumerate() {
                let da = arg.diff(v);
                if da.is_zero() {
                    continue;
                }
                let outer = match &fa.kind {
                    FuncKind::Sin => ScalarExpr::cos(arg.clone()),
                    FuncKind::Cos => -ScalarExpr::sin(arg.clone()),
                    FuncKind::Exp => ScalarExpr::exp(arg.clone()),
                    FuncKind::Ln => arg.recip().expect("ln of the zero expression"),
                    FuncKind::User { name, derivs } => {
                        let mut d = derivs.clone();
                        d.push(i as u32);
                        d.sort_unstable();
                        ScalarExpr::func(
                            FuncKind::User { name: name.clone(), derivs: d },
                            fa.args.clone(),
                        )
                    }
                };
                out = out + outer * da;
            }
            out
        }
    }
}

fn diff_poly(p: &Poly, v: &str) -> ScalarExpr {
    let mut poly_part = Poly::zero();
    let mut rest = ScalarExpr::zero();
    for (m, c) in p.terms() {
        for (i, (a, e)) in m.factors().iter().enumerate() {
            let k = c * Coeff::from_integer(BigInt::from(*e));
            let lowered = m.lower(i);
            match a {
                Atom::Var(w) => {
                    if &**w == v {
                        poly_part.add_term(lowered, k);
                    }
                }
                Atom::Func(_) => {
                    let da = atom_diff(a, v);
                    if da.is_zero() {
                        continue;
                    }
                    rest = rest + ScalarExpr::from_poly(Poly::monomial(lowered, k)) * da;
                }
            }
        }
    }
    ScalarExpr::from_poly(poly_part) + rest
}

fn subst_atom(a: &Atom, map: &BTreeMap<String, ScalarExpr>) -> ScalarExpr {
    match a {
        Atom::Var(v) => map
            .get(&**v)
            .cloned()
            .unwrap_or_else(|| ScalarExpr::from_atom(a.clone())),
        Atom::Func(fa) => ScalarExpr::func(
            fa.kind.clone(),
            fa.args.iter().map(|x| x.subst(map)).collect(),
        ),
    }
}

fn subst_poly(p: &Poly, map: &BTreeMap<String, ScalarExpr>) -> ScalarExpr {
    let mut out = ScalarExpr::zero();
    let mut cache: BTreeMap<&Atom, ScalarExpr> = BTreeMap::new();
    let mut fixed = Poly::zero();
    for (m, c) in p.terms() {
        let mut keep = Vec::new();
        let mut term = ScalarExpr::one();
        let mut changed = false;
        for (a, e) in m.factors() {
            let s = cache.entry(a).or_insert_with(|| subst_atom(a, map)).clone();
            if s == ScalarExpr::from_atom(a.clone()) {
                keep.push((a.clone(), *e));
            } else {
                changed = true;
                term = term * s.pow(*e as i32);
            }
        }
        let base = Poly::monomial(Monomial::from_pairs(keep), c.clone());
        if changed {
            out = out + ScalarExpr::from_poly(base) * term;
        } else {
            fixed = fixed.add(&base);
        }
    }
    out + ScalarExpr::from_poly(fixed)
}

fn pyth_poly(p: &Poly) -> ScalarExpr {
    let mut out = ScalarExpr::zero();
    for (m, c) in p.terms() {
        let mut term = ScalarExpr::rational(c.clone());
        for (a, e) in m.factors() {
            let base = ScalarExpr::from_atom(a.clone());
            match a {
                Atom::Func(fa) if fa.kind == FuncKind::Sin && *e >= 2 => {
                    let cos2 = ScalarExpr::cos(fa.args[0].clone()).pow(2);
                    let one_minus = ScalarExpr::one() - cos2;
                    term = term * one_minus.pow((*e / 2) as i32) * base.pow((*e % 2) as i32);
                }
                _ => term = term * base.pow(*e as i32),
            }
        }
        out = out + term;
    }
    out
}

fn add_frac(a: &ScalarExpr, b: &ScalarExpr, negate_b: bool) -> ScalarExpr {
    let bn = if negate_b { b.0.num.neg() } else { b.0.num.clone() };
    if b.is_zero() {
        return a.clone();
    }
    if a.is_zero() {
        return ScalarExpr(Arc::new(Frac { num: bn, den: b.0.den.clone() }));
    }
    if a.0.den == b.0.den {
        let num = a.0.num.add(&bn);
        if a.0.den.is_one() {
            return ScalarExpr::from_poly(num);
        }
        return ScalarExpr::from_parts(num, a.0.den.clone());
    }
    if b.0.den.len() > 1 {
        if let Some(q) = b.0.den.exact_div(&a.0.den) {
            return ScalarExpr::from_parts(a.0.num.mul(&q).add(&bn), b.0.den.clone());
        }
    }
    if a.0.den.len() > 1 {
        if let Some(q) = a.0.den.exact_div(&b.0.den) {
            return ScalarExpr::from_parts(a.0.num.add(&bn.mul(&q)), a.0.den.clone());
        }
    }
    let num = a.0.num.mul(&b.0.den).add(&bn.mul(&a.0.den));
    ScalarExpr::from_parts(num, a.0.den.mul(&b.0.den))
}

/// Cancels `d` against `n` when one divides the other.
fn cancel(n: &Poly, d: &Poly) -> Option<(Poly, Poly)> {
    if d.len() <= 1 || n.len() <= 1 {
        return None;
    }
    if let Some(q) = n.exact_div(d) {
        return Some((q, Poly::one()));
    }
    d.exact_div(n).map(|q| (Poly::one(), q))
}

fn mul_frac(a: &ScalarExpr, b: &ScalarExpr) -> ScalarExpr {
    if a.is_zero() || b.is_zero() {
        return ScalarExpr::zero();
    }
    if a.is_one() {
        return b.clone();
    }
    if b.is_one() {
        return a.clone();
    }
    if a.0.den.is_one() && b.0.den.is_one() {
        return ScalarExpr::from_poly(a.0.num.mul(&b.0.num));
    }
    let (mut an, mut ad) = (a.0.num.clone(), a.0.den.clone());
    let (mut bn, mut bd) = (b.0.num.clone(), b.0.den.clone());
    if let Some((n, d)) = cancel(&an, &bd) {
        (an, bd) = (n, d);
    }
    if let Some((n, d)) = cancel(&bn, &ad) {
        (bn, ad) = (n, d);
    }
    ScalarExpr::from_parts(an.mul(&bn), ad.mul(&bd))
}

macro_rules! binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait<&ScalarExpr> for &ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: &ScalarExpr) -> ScalarExpr {
                let f: fn(&ScalarExpr, &ScalarExpr) -> ScalarExpr = $body;
                f(self, rhs)
            }
        }
        impl $trait<ScalarExpr> for ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: ScalarExpr) -> ScalarExpr {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&ScalarExpr> for ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: &ScalarExpr) -> ScalarExpr {
                (&self).$method(rhs)
            }
        }
        impl $trait<ScalarExpr> for &ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: ScalarExpr) -> ScalarExpr {
                self.$method(&rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| add_frac(a, b, false));
binop!(Sub, sub, |a, b| add_frac(a, b, true));
binop!(Mul, mul, mul_frac);
binop!(Div, div, |a, b| a
    .checked_div(b)
    .expect("symbolic division by the zero expression"));

impl Neg for ScalarExpr {
    type Output = ScalarExpr;
    fn neg(self) -> ScalarExpr {
        -&self
    }
}

impl Neg for &ScalarExpr {
    type Output = ScalarExpr;
    fn neg(self) -> ScalarExpr {
        ScalarExpr(Arc::new(Frac { num: self.0.num.neg(), den: self.0.den.clone() }))
    }
}

impl From<i64> for ScalarExpr {
    fn from(i: i64) -> Self {
        ScalarExpr::int(i)
    }
}

impl std::iter::Sum for ScalarExpr {
    fn sum<I: Iterator<Item = ScalarExpr>>(iter: I) -> Self {
        iter.fold(ScalarExpr::zero(), |a, b| a + b)
    }
}

impl std::str::FromStr for ScalarExpr {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse(s)
    }
}

fn fmt_coeff(c: &Coeff) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

fn fmt_monomial(m: &Monomial) -> String {
    let mut parts = Vec::new();
    for (a, e) in m.factors() {
        if *e == 1 {
            parts.push(a.to_string());
        } else {
            parts.push(format!("{a}^{e}"));
        }
    }
    parts.join("*")
}

fn fmt_poly(p: &Poly) -> String {
    if p.is_zero() {
        return "0".into();
    }
    let mut terms: Vec<(&Monomial, &Coeff)> = p.terms().collect();
    terms.sort_by(|a, b| b.0.degree().cmp(&a.0.degree()).then_with(|| a.0.cmp(b.0)));
    let mut s = String::new();
    for (i, (m, c)) in terms.into_iter().enumerate() {
        let neg = c.is_negative();
        let mag = c.abs();
        if i == 0 {
            if neg {
                s.push('-');
            }
        } else {
            s.push_str(if neg { " - " } else { " + " });
        }
        if m.is_one() {
            s.push_str(&fmt_coeff(&mag));
        } else if mag.is_one() {
            s.push_str(&fmt_monomial(m));
        } else {
            s.push_str(&fmt_coeff(&mag));
            s.push('*');
            s.push_str(&fmt_monomial(m));
        }
    }
    s
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.den.is_one() {
            write!(f, "{}", fmt_poly(&self.0.num))
        } else {
            write!(f, "({})/({})", fmt_poly(&self.0.num), fmt_poly(&self.0.den))
        }
    }
}

impl fmt::Debug for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarExpr({self})")
    }
}

#[cfg(test)]
mod tests;
