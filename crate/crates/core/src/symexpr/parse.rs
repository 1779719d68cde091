use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::Zero;

use super::{Coeff, FuncKind, ScalarExpr};
use crate::error::{Error, Result};

/// Names the parser should treat specially.
///
/// * `functions`: opaque function symbols with their default argument
///   names; a bare `B11` expands to `B11(x1,x2,...)`.
/// * `macros`: identifiers replaced by a fixed expression.
#[derive(Clone, Debug, Default)]
pub struct ParseContext {
    pub functions: BTreeMap<String, Vec<String>>,
    pub macros: BTreeMap<String, ScalarExpr>,
}

impl ParseContext {
    pub fn new() -> Self {
        Self::default()
    }
}

pub fn parse(src: &str) -> Result<ScalarExpr> {
    parse_with(src, &ParseContext::default())
}

pub fn parse_with(src: &str, ctx: &ParseContext) -> Result<ScalarExpr> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, ctx, end: src.chars().count() };
    let e = p.expr()?;
    if let Some((t, at)) = p.peek_full() {
        return Err(p.err(at, format!("unexpected `{}`", t.describe())));
    }
    Ok(e)
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Coeff),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Colon,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(c) => c.to_string(),
            Tok::Ident(s) => s.clone(),
            Tok::Plus => "+".into(),
            Tok::Minus => "-".into(),
            Tok::Star => "*".into(),
            Tok::Slash => "/".into(),
            Tok::Caret => "^".into(),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
            Tok::Comma => ",".into(),
            Tok::Colon => ":".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        let single = match c {
            '+' => Some(Tok::Plus),
            '-' | '\u{2212}' => Some(Tok::Minus),
            '*' | '\u{00b7}' | '\u{00d7}' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            ':' => Some(Tok::Colon),
            _ => None,
        };
        if let Some(t) = single {
            out.push((t, start));
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let mut int_part = String::new();
            while i < chars.len() && chars[i].is_ascii_digit() {
                int_part.push(chars[i]);
                i += 1;
            }
            let mut frac_part = String::new();
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    frac_part.push(chars[i]);
                    i += 1;
                }
            }
            if int_part.is_empty() && frac_part.is_empty() {
                return Err(Error::Parse { position: start, message: "malformed number".into() });
            }
            let mut exp: i64 = 0;
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                let mut sign = 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    if chars[j] == '-' {
                        sign = -1;
                    }
                    j += 1;
                }
                let mut digits = String::new();
                while j < chars.len() && chars[j].is_ascii_digit() {
                    digits.push(chars[j]);
                    j += 1;
                }
                if !digits.is_empty() {
                    exp = sign * digits.parse::<i64>().map_err(|_| Error::Parse {
                        position: i,
                        message: "exponent out of range".into(),
                    })?;
                    i = j;
                }
            }
            let digits = format!("{int_part}{frac_part}");
            let mantissa: BigInt = digits.parse().unwrap_or_else(|_| BigInt::zero());
            let scale = exp - frac_part.len() as i64;
            let ten = BigInt::from(10);
            let value = if scale >= 0 {
                Coeff::from_integer(mantissa * num_traits::pow(ten, scale as usize))
            } else {
                Coeff::new(mantissa, num_traits::pow(ten, (-scale) as usize))
            };
            out.push((Tok::Num(value), start));
            continue;
        }
        if c.is_ascii_alphabetic() {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                s.push(chars[i]);
                i += 1;
            }
            out.push((Tok::Ident(s), start));
            continue;
        }
        return Err(Error::Parse { position: start, message: format!("unexpected character `{c}`") });
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    ctx: &'a ParseContext,
    end: usize,
}

impl Parser<'_> {
    fn err(&self, position: usize, message: String) -> Error {
        Error::Parse { position, message }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn peek_full(&self) -> Option<(Tok, usize)> {
        self.toks.get(self.pos).cloned()
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        let at = self.here();
        match self.bump() {
            Some(ref u) if *u == t => Ok(()),
            Some(u) => Err(self.err(at, format!("expected `{}`, found `{}`", t.describe(), u.describe()))),
            None => Err(self.err(at, format!("expected `{}`, found end of input", t.describe()))),
        }
    }

    fn expr(&mut self) -> Result<ScalarExpr> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    acc = acc + self.term()?;
                }
                Some(Tok::Minus) => {
                    self.bump();
                    acc = acc - self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<ScalarExpr> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    acc = acc * self.unary()?;
                }
                Some(Tok::Slash) => {
                    let at = self.here();
                    self.bump();
                    let d = self.unary()?;
                    acc = acc
                        .checked_div(&d)
                        .ok_or_else(|| self.err(at, "division by zero".into()))?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<ScalarExpr> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.bump();
                Ok(-self.unary()?)
            }
            Some(Tok::Plus) => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<ScalarExpr> {
        let base = self.primary()?;
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.bump();
        let at = self.here();
        let neg = if self.peek() == Some(&Tok::Minus) {
            self.bump();
            true
        } else {
            false
        };
        match self.bump() {
            Some(Tok::Num(c)) if c.is_integer() => {
                let k: i32 = c
                    .to_integer()
                    .try_into()
                    .map_err(|_| self.err(at, "exponent out of range".into()))?;
                let k = if neg { -k } else { k };
                if k < 0 && base.is_zero() {
                    return Err(self.err(at, "negative power of zero".into()));
                }
                Ok(base.pow(k))
            }
            _ => Err(self.err(at, "exponent must be an integer literal".into())),
        }
    }

    fn args(&mut self) -> Result<Vec<ScalarExpr>> {
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if self.peek() == Some(&Tok::RParen) {
            self.bump();
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            let at = self.here();
            match self.bump() {
                Some(Tok::Comma) => continue,
                Some(Tok::RParen) => return Ok(args),
                _ => return Err(self.err(at, "expected `,` or `)` in argument list".into())),
            }
        }
    }

    fn primary(&mut self) -> Result<ScalarExpr> {
        let at = self.here();
        match self.bump() {
            Some(Tok::Num(c)) => Ok(ScalarExpr::rational(c)),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => self.identifier(name, at),
            Some(t) => Err(self.err(at, format!("unexpected `{}`", t.describe()))),
            None => Err(self.err(at, "unexpected end of input".into())),
        }
    }

    fn identifier(&mut self, name: String, at: usize) -> Result<ScalarExpr> {
        let mut derivs = Vec::new();
        while self.peek() == Some(&Tok::Colon) {
            self.bump();
            let p = self.here();
            match self.bump() {
                Some(Tok::Num(c)) if c.is_integer() && c >= Coeff::zero() => {
                    let d: u32 = c
                        .to_integer()
                        .try_into()
                        .map_err(|_| self.err(p, "derivative index out of range".into()))?;
                    derivs.push(d);
                }
                _ => return Err(self.err(p, "expected a derivative position after `:`".into())),
            }
        }
        derivs.sort_unstable();
        let builtin = match name.as_str() {
            "sin" => Some(FuncKind::Sin),
            "cos" => Some(FuncKind::Cos),
            "exp" => Some(FuncKind::Exp),
            "ln" => Some(FuncKind::Ln),
            _ => None,
        };
        if let Some(kind) = builtin {
            if !derivs.is_empty() {
                return Err(self.err(at, format!("`{name}` does not take derivative positions")));
            }
            let args = self.args()?;
            if args.len() != 1 {
                return Err(self.err(at, format!("`{name}` takes exactly one argument")));
            }
            return Ok(ScalarExpr::func(kind, args));
        }
        let call = self.peek() == Some(&Tok::LParen);
        if derivs.is_empty() && !call {
            if let Some(m) = self.ctx.macros.get(&name) {
                return Ok(m.clone());
            }
        }
        let args = if call {
            Some(self.args()?)
        } else {
            self.ctx
                .functions
                .get(&name)
                .map(|names| names.iter().map(|n| ScalarExpr::var(n)).collect())
        };
        match args {
            Some(args) => {
                if let Some(d) = derivs.iter().find(|d| **d as usize >= args.len()) {
                    return Err(self.err(at, format!("derivative position {d} exceeds arity of `{name}`")));
                }
                Ok(ScalarExpr::func(
                    FuncKind::User { name: Arc::from(name.as_str()), derivs },
                    args,
                ))
            }
            None if derivs.is_empty() => Ok(ScalarExpr::var(&name)),
            None => Err(self.err(at, format!("derivative of undeclared function `{name}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> ScalarExpr {
        parse(s).unwrap_or_else(|e| panic!("{s}: {e}"))
    }

    #[test]
    fn precedence() {
        assert!(p("-x^2").equiv(&(-(p("x") * p("x")))));
        assert!(p("1 + 2*3").equiv(&ScalarExpr::int(7)));
        assert!(p("2/4*x").equiv(&(p("x") / ScalarExpr::int(2))));
        assert!(p("x - y - z").equiv(&(p("x") - p("y") - p("z"))));
        assert!(p("2^-1").equiv(&ScalarExpr::ratio(1, 2)));
    }

    #[test]
    fn decimals_are_exact() {
        assert!(p("0.25").equiv(&ScalarExpr::ratio(1, 4)));
        assert!(p("1e-3").equiv(&ScalarExpr::ratio(1, 1000)));
        assert!(p("2.5e1").equiv(&ScalarExpr::int(25)));
    }

    #[test]
    fn unicode_operators() {
        assert!(p("x·y − y·x").is_zero());
    }

    #[test]
    fn declared_functions_expand() {
        let mut ctx = ParseContext::new();
        ctx.functions.insert("B11".into(), vec!["x1".into(), "z1".into()]);
        let a = parse_with("B11", &ctx).unwrap();
        let b = parse_with("B11(x1,z1)", &ctx).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_string(), "B11(x1,z1)");
        let d = parse_with("B11:1", &ctx).unwrap();
        assert!(d.equiv(&b.diff("z1")));
    }

    #[test]
    fn macros_substitute() {
        let mut ctx = ParseContext::new();
        ctx.macros.insert("B".into(), p("x + 1"));
        assert!(parse_with("B^2", &ctx).unwrap().equiv(&p("x^2 + 2*x + 1")));
    }

    #[test]
    fn errors_carry_positions() {
        match parse("x + * y") {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 4),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("x^y"), Err(Error::Parse { position: 2, .. })));
        assert!(matches!(parse("1/0"), Err(Error::Parse { .. })));
        assert!(matches!(parse("sin(x, y)"), Err(Error::Parse { .. })));
        assert!(matches!(parse("(x"), Err(Error::Parse { position: 2, .. })));
        assert!(matches!(parse("x $"), Err(Error::Parse { position: 2, .. })));
    }

    #[test]
    fn display_round_trips() {
        for s in [
            "x^2*y - 3/4*z + 1",
            "(x + 1)/(y^2 - x)",
            "sin(x)^2 + cos(x*y) - exp(-x)",
            "B:0:1(x,y)*ln(1 + x^2)",
            "Dz1_x2*Dz3_x1 - 2",
        ] {
            let e = p(s);
            let again = p(&e.to_string());
            assert_eq!(e, again, "{s} -> {e}");
        }
    }
}
