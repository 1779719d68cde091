//! Sparse multivariate polynomials over the rationals with opaque atoms as
//! indeterminates.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::atom::Atom;

pub type Coeff = BigRational;

/// Product of atoms with positive exponents, sorted by atom.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(Vec<(Atom, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn atom(a: Atom) -> Self {
        Monomial(vec![(a, 1)])
    }

    pub fn from_pairs(mut pairs: Vec<(Atom, u32)>) -> Self {
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out: Vec<(Atom, u32)> = Vec::with_capacity(pairs.len());
        for (a, e) in pairs {
            if e == 0 {
                continue;
            }
            match out.last_mut() {
                Some(last) if last.0 == a => last.1 += e,
                _ => out.push((a, e)),
            }
        }
        Monomial(out)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn factors(&self) -> &[(Atom, u32)] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Less => {
                    out.push(self.0[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.0[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((self.0[i].0.clone(), self.0[i].1 + other.0[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    /// `self / other` when `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = Vec::with_capacity(self.0.len());
        let mut j = 0;
        for (a, e) in &self.0 {
            if j < other.0.len() && other.0[j].0 == *a {
                let f = other.0[j].1;
                if f > *e {
                    return None;
                }
                if e - f > 0 {
                    out.push((a.clone(), e - f));
                }
                j += 1;
            } else if j < other.0.len() && other.0[j].0 < *a {
                return None;
            } else {
                out.push((a.clone(), *e));
            }
        }
        if j < other.0.len() {
            return None;
        }
        Some(Monomial(out))
    }

    /// Componentwise minimum of exponents.
    pub fn gcd(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    out.push((self.0[i].0.clone(), self.0[i].1.min(other.0[j].1)));
                    i += 1;
                    j += 1;
                }
            }
        }
        Monomial(out)
    }

    pub fn exponent_of(&self, a: &Atom) -> u32 {
        self.0
            .iter()
            .find(|(b, _)| b == a)
            .map(|(_, e)| *e)
            .unwrap_or(0)
    }

    /// Remove one power of the atom at position `pos`.
    pub fn lower(&self, pos: usize) -> Monomial {
        let mut out = self.0.clone();
        if out[pos].1 == 1 {
            out.remove(pos);
        } else {
            out[pos].1 -= 1;
        }
        Monomial(out)
    }

    /// Pure lexicographic order: the smallest atom is the most significant.
    /// Compatible with multiplication, unlike the derived `Ord`.
    pub fn lex_cmp(&self, other: &Monomial) -> Ordering {
        let (mut i, mut j) = (0, 0);
        loop {
            match (self.0.get(i), other.0.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some((a, e)), Some((b, f))) => match a.cmp(b) {
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => match e.cmp(f) {
                        Ordering::Equal => {
                            i += 1;
                            j += 1;
                        }
                        o => return o,
                    },
                },
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Poly(BTreeMap<Monomial, Coeff>);

impl Poly {
    pub fn zero() -> Self {
        Poly(BTreeMap::new())
    }

    pub fn one() -> Self {
        Poly::constant(Coeff::one())
    }

    pub fn constant(c: Coeff) -> Self {
        let mut m = BTreeMap::new();
        if !c.is_zero() {
            m.insert(Monomial::one(), c);
        }
        Poly(m)
    }

    pub fn from_int(i: i64) -> Self {
        Poly::constant(Coeff::from_integer(BigInt::from(i)))
    }

    pub fn monomial(m: Monomial, c: Coeff) -> Self {
        let mut map = BTreeMap::new();
        if !c.is_zero() {
            map.insert(m, c);
        }
        Poly(map)
    }

    pub fn atom(a: Atom) -> Self {
        Poly::monomial(Monomial::atom(a), Coeff::one())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_one())
    }

    pub fn as_constant(&self) -> Option<Coeff> {
        match self.0.len() {
            0 => Some(Coeff::zero()),
            1 => {
                let (m, c) = self.0.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Coeff)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add_term(&mut self, m: Monomial, c: Coeff) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.0.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.0 {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.0 {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly(self.0.iter().map(|(m, c)| (m.clone(), -c.clone())).collect())
    }

    pub fn scale(&self, k: &Coeff) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly(self.0.iter().map(|(m, c)| (m.clone(), c * k)).collect())
    }

    pub fn mul_monomial(&self, m: &Monomial) -> Poly {
        Poly(self.0.iter().map(|(n, c)| (n.mul(m), c.clone())).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.0 {
            for (m2, c2) in &other.0 {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut out = Poly::one();
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// Leading term under [`Monomial::lex_cmp`].
    pub fn leading(&self) -> Option<(&Monomial, &Coeff)> {
        self.0.iter().max_by(|a, b| a.0.lex_cmp(b.0))
    }

    /// Monomial gcd of all terms.
    pub fn monomial_content(&self) -> Monomial {
        let mut it = self.0.keys();
        let Some(first) = it.next() else {
            return Monomial::one();
        };
        let mut g = first.clone();
        for m in it {
            if g.is_one() {
                break;
            }
            g = g.gcd(m);
        }
        g
    }

    pub fn div_monomial(&self, m: &Monomial) -> Poly {
        Poly(
            self.0
                .iter()
                .map(|(n, c)| (n.div(m).expect("monomial content divides every term"), c.clone()))
                .collect(),
        )
    }

    /// Exact division; `None` when `d` does not divide `self`.
    pub fn exact_div(&self, d: &Poly) -> Option<Poly> {
        let (ld_m, ld_c) = d.leading()?;
        let (ld_m, ld_c) = (ld_m.clone(), ld_c.clone());
        if self.is_zero() {
            return Some(Poly::zero());
        }
        // The lowest terms multiply like the leading ones.
        let lowest = |p: &Poly| p.0.keys().min_by(|a, b| a.lex_cmp(b)).cloned();
        lowest(self)?.div(&lowest(d)?)?;
        // Quotient monomials fit in the box of per-atom degree differences.
        let (mine, theirs) = (self.atom_degrees(), d.atom_degrees());
        let mut room = 1usize;
        for (a, e) in &theirs {
            let have = mine.get(a).copied().unwrap_or(0);
            if have < *e {
                return None;
            }
        }
        for (a, e) in &mine {
            let spare = (e - theirs.get(a).copied().unwrap_or(0)) as usize + 1;
            room = room.saturating_mul(spare);
        }
        let mut r = self.clone();
        let mut q = Poly::zero();
        let mut steps = 0usize;
        while let Some((lm, lc)) = r.leading() {
            let t_m = lm.div(&ld_m)?;
            let t_c = lc / &ld_c;
            let t = Poly::monomial(t_m.clone(), t_c.clone());
            r = r.sub(&d.mul_monomial(&t_m).scale(&t_c));
            q = q.add(&t);
            steps += 1;
            if steps > room {
                return None;
            }
        }
        Some(q)
    }

    /// Highest exponent of each atom over all terms.
    fn atom_degrees(&self) -> BTreeMap<&Atom, u32> {
        let mut out = BTreeMap::new();
        for m in self.0.keys() {
            for (a, e) in m.factors() {
                let slot = out.entry(a).or_insert(0);
                *slot = (*slot).max(*e);
            }
        }
        out
    }

    /// Maximum total degree over terms, counting only atoms accepted by `pred`.
    pub fn max_degree_in(&self, pred: &dyn Fn(&Atom) -> bool) -> u32 {
        self.0
            .keys()
            .map(|m| m.factors().iter().filter(|(a, _)| pred(a)).map(|(_, e)| e).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn map_coeffs(&self, f: impl Fn(&Coeff) -> Coeff) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.0 {
            out.add_term(m.clone(), f(c));
        }
        out
    }

    pub fn is_negative_leading(&self) -> bool {
        self.leading().is_some_and(|(_, c)| c.is_negative())
    }
}
