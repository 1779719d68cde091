use std::fmt;
use std::sync::Arc;

use super::ScalarExpr;

/// An indeterminate of the polynomial core: a named variable or an
/// application of a function symbol.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Var(Arc<str>),
    Func(Arc<FuncAtom>),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FuncAtom {
    pub kind: FuncKind,
    pub args: Vec<ScalarExpr>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FuncKind {
    Sin,
    Cos,
    Exp,
    Ln,
    /// An opaque smooth function. `derivs` lists the (0-based) argument
    /// positions it has been differentiated by, sorted ascending.
    User { name: Arc<str>, derivs: Vec<u32> },
}

impl FuncKind {
    pub fn is_transcendental(&self) -> bool {
        !matches!(self, FuncKind::User { .. })
    }

    /// Symbol name, with derivative positions appended (`B11:0:2`).
    pub fn key(&self) -> String {
        match self {
            FuncKind::Sin => "sin".into(),
            FuncKind::Cos => "cos".into(),
            FuncKind::Exp => "exp".into(),
            FuncKind::Ln => "ln".into(),
            FuncKind::User { name, derivs } => {
                let mut s = name.to_string();
                for d in derivs {
                    s.push(':');
                    s.push_str(&d.to_string());
                }
                s
            }
        }
    }
}

impl Atom {
    pub fn var(name: &str) -> Self {
        Atom::Var(Arc::from(name))
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Atom::Var(v) => Some(v),
            Atom::Func(_) => None,
        }
    }

    pub fn as_func(&self) -> Option<&FuncAtom> {
        match self {
            Atom::Func(f) => Some(f),
            Atom::Var(_) => None,
        }
    }
}

impl fmt::Display for FuncAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.kind.key())?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Var(v) => write!(f, "{v}"),
            Atom::Func(fa) => write!(f, "{fa}"),
        }
    }
}
