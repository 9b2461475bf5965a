use std::fmt;

use indexmap::IndexSet;

use super::{ArithError, Substitution, Term};

/// Arithmetic comparison operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Gt,
    Lt,
    Ge,
    Le,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Gt => ">",
            CmpOp::Lt => "<",
            CmpOp::Ge => ">=",
            CmpOp::Le => "<=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "\\==",
        }
    }
}

/// A condition evaluated against a fact base.
///
/// `&` and `|` are binary and associate to the left when parsed;
/// evaluation is left to right.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Atom(Term),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Cmp(CmpOp, Term, Term),
}

impl Formula {
    /// The formula `true`.
    pub fn truth() -> Self {
        Formula::Atom(Term::atom("true"))
    }

    pub fn is_truth(&self) -> bool {
        matches!(self, Formula::Atom(Term::Atom(n)) if n == "true")
    }

    pub fn atom(t: Term) -> Self {
        Formula::Atom(t)
    }

    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(l: Formula, r: Formula) -> Self {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Self {
        Formula::Or(Box::new(l), Box::new(r))
    }

    /// Left-nested conjunction of `parts`; `true` when empty.
    pub fn conjunction(parts: impl IntoIterator<Item = Formula>) -> Self {
        parts.into_iter().reduce(Formula::and).unwrap_or_else(Formula::truth)
    }

    pub fn variables(&self) -> IndexSet<String> {
        let mut out = IndexSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub(crate) fn collect_vars(&self, out: &mut IndexSet<String>) {
        match self {
            Formula::Atom(t) => t.collect_vars(out),
            Formula::Not(f) => f.collect_vars(out),
            Formula::And(l, r) | Formula::Or(l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
            Formula::Cmp(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    pub fn is_ground(&self) -> bool {
        self.variables().is_empty()
    }

    pub fn apply(&self, s: &Substitution) -> Formula {
        self.map_terms(&mut |t| t.apply(s))
    }

    /// Folds ground arithmetic inside atom arguments and comparison operands.
    pub fn fold_arith(&self) -> Result<Formula, ArithError> {
        let mut err = None;
        let out = self.map_terms(&mut |t| match t.fold_arith() {
            Ok(t) => t,
            Err(e) => {
                err.get_or_insert(e);
                t.clone()
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(out),
        }
    }

    pub(crate) fn map_terms(&self, f: &mut impl FnMut(&Term) -> Term) -> Formula {
        match self {
            Formula::Atom(t) => Formula::Atom(f(t)),
            Formula::Not(x) => Formula::Not(Box::new(x.map_terms(f))),
            Formula::And(l, r) => Formula::And(Box::new(l.map_terms(f)), Box::new(r.map_terms(f))),
            Formula::Or(l, r) => Formula::Or(Box::new(l.map_terms(f)), Box::new(r.map_terms(f))),
            Formula::Cmp(op, l, r) => Formula::Cmp(*op, f(l), f(r)),
        }
    }

    /// The term a plan or expectation pattern matches against: the atom itself
    /// for atomic formulas, the canonical text as a string otherwise.
    pub fn subject_term(&self) -> Term {
        match self {
            Formula::Atom(t) => t.clone(),
            other => Term::string(other.to_string()),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Or(..) => 1,
            Formula::And(..) => 2,
            Formula::Not(_) => 3,
            _ => 4,
        }
    }
}

impl From<Term> for Formula {
    fn from(t: Term) -> Self {
        Formula::Atom(t)
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Formula, min: u8) -> fmt::Result {
    if child.precedence() < min {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(t) => write!(f, "{t}"),
            Formula::Not(x) => {
                f.write_str("not ")?;
                write_child(f, x, 3)
            }
            Formula::And(l, r) => {
                write_child(f, l, 2)?;
                f.write_str(" & ")?;
                write_child(f, r, 3)
            }
            Formula::Or(l, r) => {
                write_child(f, l, 1)?;
                f.write_str(" | ")?;
                write_child(f, r, 2)
            }
            Formula::Cmp(op, l, r) => write!(f, "{l} {} {r}", op.symbol()),
        }
    }
}

/// An inference rule `head :- body.`; a missing body makes an unconditional fact schema.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct InferenceRule {
    pub head: Term,
    pub body: Option<Formula>,
}

impl InferenceRule {
    pub fn fact(head: Term) -> Self {
        InferenceRule { head, body: None }
    }

    pub fn new(head: Term, body: Formula) -> Self {
        InferenceRule { head, body: Some(body) }
    }

    /// Head variables that do not occur in the body.
    pub fn unrestricted_vars(&self) -> Vec<String> {
        let Some(body) = &self.body else {
            return Vec::new();
        };
        let bv = body.variables();
        self.head.variables().into_iter().filter(|v| !bv.contains(v)).collect()
    }
}

impl fmt::Display for InferenceRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.body {
            Some(b) => write!(f, "{} :- {b}.", self.head),
            None => write!(f, "{}.", self.head),
        }
    }
}
