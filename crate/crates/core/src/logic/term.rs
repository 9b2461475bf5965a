//! Logic terms: constants, numbers, strings, variables and compound terms.

use std::cmp::Ordering;
use std::fmt;

use indexmap::IndexSet;
use ordered_float::OrderedFloat;

use super::Substitution;

/// A numeric constant. Integers are exact; decimals are binary floating point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Number {
    Int(i64),
    Float(OrderedFloat<f64>),
}

impl Number {
    pub fn float(v: f64) -> Self {
        Number::Float(OrderedFloat(v))
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Number::Int(i) => i as f64,
            Number::Float(f) => f.0,
        }
    }

    /// Numeric comparison across integers and decimals.
    pub fn compare(self, other: Number) -> Option<Ordering> {
        match (self, other) {
            (Number::Int(a), Number::Int(b)) => Some(a.cmp(&b)),
            (a, b) => a.as_f64().partial_cmp(&b.as_f64()),
        }
    }

    pub fn is_negative(self) -> bool {
        match self {
            Number::Int(i) => i < 0,
            Number::Float(f) => f.0.is_sign_negative(),
        }
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Int(i) => write!(f, "{i}"),
            // `{:?}` keeps the shortest representation that reads back exactly.
            Number::Float(v) => write!(f, "{:?}", v.0),
        }
    }
}

/// Errors raised while evaluating arithmetic expressions.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ArithError {
    #[error("`{0}` is not a number")]
    NotNumeric(String),
    #[error("unbound variable {0} in arithmetic")]
    Unbound(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("integer overflow")]
    Overflow,
}

/// A first-order term.
///
/// A compound always has at least one argument; [`Term::compound`] turns an
/// empty argument list into a constant.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Atom(String),
    Number(Number),
    Str(String),
    Var(String),
    Compound(String, Vec<Term>),
}

pub(crate) const ARITH_OPS: [&str; 4] = ["+", "-", "*", "/"];

impl Term {
    pub fn atom(name: impl Into<String>) -> Self {
        Term::Atom(name.into())
    }

    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn int(v: i64) -> Self {
        Term::Number(Number::Int(v))
    }

    pub fn float(v: f64) -> Self {
        Term::Number(Number::float(v))
    }

    pub fn string(s: impl Into<String>) -> Self {
        Term::Str(s.into())
    }

    pub fn compound(name: impl Into<String>, args: Vec<Term>) -> Self {
        let name = name.into();
        if args.is_empty() {
            Term::Atom(name)
        } else {
            Term::Compound(name, args)
        }
    }

    /// Functor name and arity of an atom or compound.
    pub fn functor(&self) -> Option<(&str, usize)> {
        match self {
            Term::Atom(n) => Some((n.as_str(), 0)),
            Term::Compound(n, args) => Some((n.as_str(), args.len())),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Compound(_, args) => args,
            _ => &[],
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Term::Atom(n) => Some(n),
            _ => None,
        }
    }

    pub fn as_number(&self) -> Option<Number> {
        match self {
            Term::Number(n) => Some(*n),
            _ => None,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    /// An arithmetic operator application (`+`, `-`, `*`, `/`).
    pub fn is_arith(&self) -> bool {
        match self {
            Term::Compound(n, args) => {
                ARITH_OPS.contains(&n.as_str()) && (args.len() == 2 || (n == "-" && args.len() == 1))
            }
            _ => false,
        }
    }

    /// Atoms and non-arithmetic compounds can be used as predicates.
    pub fn is_callable(&self) -> bool {
        matches!(self, Term::Atom(_) | Term::Compound(..)) && !self.is_arith()
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Compound(_, args) => args.iter().all(Term::is_ground),
            _ => true,
        }
    }

    pub fn contains_var(&self, name: &str) -> bool {
        match self {
            Term::Var(v) => v == name,
            Term::Compound(_, args) => args.iter().any(|a| a.contains_var(name)),
            _ => false,
        }
    }

    /// Variables in order of first occurrence.
    pub fn variables(&self) -> IndexSet<String> {
        let mut out = IndexSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub(crate) fn collect_vars(&self, out: &mut IndexSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Compound(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
            _ => {}
        }
    }

    pub fn apply(&self, s: &Substitution) -> Term {
        if s.is_empty() {
            return self.clone();
        }
        match self {
            Term::Var(v) => s.get(v).cloned().unwrap_or_else(|| self.clone()),
            Term::Compound(n, args) => Term::Compound(n.clone(), args.iter().map(|a| a.apply(s)).collect()),
            _ => self.clone(),
        }
    }

    pub(crate) fn replace_var(&self, name: &str, with: &Term) -> Term {
        match self {
            Term::Var(v) if v == name => with.clone(),
            Term::Compound(n, args) => {
                Term::Compound(n.clone(), args.iter().map(|a| a.replace_var(name, with)).collect())
            }
            _ => self.clone(),
        }
    }

    pub(crate) fn map_vars(&self, f: &mut impl FnMut(&str) -> String) -> Term {
        match self {
            Term::Var(v) => Term::Var(f(v)),
            Term::Compound(n, args) => Term::Compound(n.clone(), args.iter().map(|a| a.map_vars(f)).collect()),
            _ => self.clone(),
        }
    }

    /// Evaluates the term as an arithmetic expression.
    pub fn eval(&self) -> Result<Number, ArithError> {
        match self {
            Term::Number(n) => Ok(*n),
            Term::Var(v) => Err(ArithError::Unbound(v.clone())),
            Term::Compound(op, args) if self.is_arith() => {
                if args.len() == 1 {
                    return negate(args[0].eval()?);
                }
                let a = args[0].eval()?;
                let b = args[1].eval()?;
                binary(op, a, b)
            }
            other => Err(ArithError::NotNumeric(other.to_string())),
        }
    }

    /// Replaces every ground arithmetic sub-expression by its value, so that
    /// `apply_fine(alice, 20*10)` becomes `apply_fine(alice, 200)`.
    pub fn fold_arith(&self) -> Result<Term, ArithError> {
        match self {
            Term::Compound(n, args) => {
                let folded: Vec<Term> = args.iter().map(Term::fold_arith).collect::<Result<_, _>>()?;
                let t = Term::Compound(n.clone(), folded);
                if t.is_arith() && t.is_ground() {
                    match t.eval() {
                        Ok(v) => Ok(Term::Number(v)),
                        // Ground but not numeric, e.g. `a + b`: leave it structural.
                        Err(ArithError::NotNumeric(_)) => Ok(t),
                        Err(e) => Err(e),
                    }
                } else {
                    Ok(t)
                }
            }
            _ => Ok(self.clone()),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Term::Compound(n, args) if self.is_arith() => match (n.as_str(), args.len()) {
                (_, 1) => 3,
                ("+" | "-", _) => 1,
                _ => 2,
            },
            Term::Number(n) if n.is_negative() => 3,
            _ => 4,
        }
    }
}

fn negate(n: Number) -> Result<Number, ArithError> {
    match n {
        Number::Int(i) => i.checked_neg().map(Number::Int).ok_or(ArithError::Overflow),
        Number::Float(f) => Ok(Number::float(-f.0)),
    }
}

fn binary(op: &str, a: Number, b: Number) -> Result<Number, ArithError> {
    use Number::*;
    match (a, b) {
        (Int(x), Int(y)) => {
            let r = match op {
                "+" => x.checked_add(y),
                "-" => x.checked_sub(y),
                "*" => x.checked_mul(y),
                _ => {
                    if y == 0 {
                        return Err(ArithError::DivisionByZero);
                    }
                    if x % y == 0 {
                        x.checked_div(y)
                    } else {
                        return Ok(Number::float(x as f64 / y as f64));
                    }
                }
            };
            r.map(Int).ok_or(ArithError::Overflow)
        }
        (a, b) => {
            let (x, y) = (a.as_f64(), b.as_f64());
            let r = match op {
                "+" => x + y,
                "-" => x - y,
                "*" => x * y,
                _ => {
                    if y == 0.0 {
                        return Err(ArithError::DivisionByZero);
                    }
                    x / y
                }
            };
            Ok(Number::float(r))
        }
    }
}

pub(crate) fn write_quoted(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("\"")?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("\"")
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Atom(n) => f.write_str(n),
            Term::Number(n) => write!(f, "{n}"),
            Term::Str(s) => write_quoted(f, s),
            Term::Var(v) => {
                // Anonymous variables are renamed `_#k` on parse; print them back as `_`.
                if v.starts_with("_#") {
                    f.write_str("_")
                } else {
                    f.write_str(v)
                }
            }
            Term::Compound(op, args) if self.is_arith() => {
                if args.len() == 1 {
                    let inner = &args[0];
                    if inner.precedence() < 4 || matches!(inner, Term::Number(_)) {
                        write!(f, "-({inner})")
                    } else {
                        write!(f, "-{inner}")
                    }
                } else {
                    let p = self.precedence();
                    write_operand(f, &args[0], p, false)?;
                    write!(f, " {op} ")?;
                    write_operand(f, &args[1], p, true)
                }
            }
            Term::Compound(n, args) => {
                write!(f, "{n}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, t: &Term, parent: u8, right: bool) -> fmt::Result {
    let p = t.precedence();
    if p < parent || (right && p == parent) {
        write!(f, "({t})")
    } else {
        write!(f, "{t}")
    }
}
